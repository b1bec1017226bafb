"""Quantum LSTM trend forecaster.

A standard f/i/g/o LSTM cell whose four gate transforms are variational
quantum circuits sandwiched between classical projections:

    v = concat(x_t, h_prev)              (input_dim + hidden_dim)
    z_g = out_proj_g(vqc_g(in_proj_g(v)))
    f, i, o = sigmoid(z_f/z_i/z_o); g = tanh(z_u)
    c = f*c_prev + i*g ; h = o*tanh(c)

A dense-softmax head on the final hidden state yields (P_up, P_down).
Training is online RMSprop on weighted cross-entropy with full
backpropagation through time; circuit gradients use the parameter-shift
rule, so every gradient here is exact up to float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import QlstmConfig
from .market_data import LABEL_DOWN, LABEL_UP
from .nn_core import (
    ParamLayout,
    RmspropState,
    init_angles,
    init_dense,
    rmsprop_step,
    sigmoid,
    softmax,
    weighted_cross_entropy,
)
from .quantum_sim import VqcSpec, vqc_forward_batch, vqc_gradient

GATES = ("forget", "input", "update", "output")
N_CLASSES = 2  # up, down


class QlstmError(ValueError):
    pass


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    train_acc: float
    test_acc: float | None


class QlstmModel:
    """Parameter container plus forward/backward passes."""

    def __init__(self, config: QlstmConfig, params: dict | None = None, init_seed: int = 0):
        self.config = config
        self.vqc_spec = VqcSpec(
            n_qubits=config.n_qubits, n_inputs=config.n_qubits, n_layers=config.vqc_layers
        )
        concat_dim = config.input_dim + config.hidden_dim
        entries = []
        for g in GATES:
            entries.append((f"{g}_in_w", (config.n_qubits, concat_dim)))
            entries.append((f"{g}_in_b", (config.n_qubits,)))
            entries.append((f"{g}_vqc", (config.vqc_layers, config.n_qubits)))
            entries.append((f"{g}_out_w", (config.hidden_dim, config.n_qubits)))
            entries.append((f"{g}_out_b", (config.hidden_dim,)))
        entries.append(("head_w", (N_CLASSES, config.hidden_dim)))
        entries.append(("head_b", (N_CLASSES,)))
        self.layout = ParamLayout(entries)
        if params is None:
            rng = np.random.default_rng(init_seed)
            params = {}
            for g in GATES:
                params[f"{g}_in_w"] = init_dense(rng, config.n_qubits, concat_dim).weights
                params[f"{g}_in_b"] = np.zeros(config.n_qubits)
                params[f"{g}_vqc"] = init_angles(rng, config.vqc_layers, config.n_qubits)
                params[f"{g}_out_w"] = init_dense(rng, config.hidden_dim, config.n_qubits).weights
                params[f"{g}_out_b"] = np.zeros(config.hidden_dim)
            params["head_w"] = init_dense(rng, N_CLASSES, config.hidden_dim).weights
            params["head_b"] = np.zeros(N_CLASSES)
        self.params = params

    # --- vector plumbing ---

    def to_vector(self) -> np.ndarray:
        return self.layout.flatten(self.params)

    def from_vector(self, vector: np.ndarray) -> None:
        self.params = self.layout.unflatten(vector)

    def param_counts(self) -> tuple[int, int, int]:
        quantum = sum(self.params[f"{g}_vqc"].size for g in GATES)
        classical = self.layout.size - quantum
        return quantum, classical, self.layout.size

    # --- forward ---

    def _gate_batch(self, gate: str, v: np.ndarray) -> tuple[np.ndarray, dict]:
        p = self.params
        u = v @ p[f"{gate}_in_w"].T + p[f"{gate}_in_b"]
        e = vqc_forward_batch(self.vqc_spec, p[f"{gate}_vqc"], u)
        z = e @ p[f"{gate}_out_w"].T + p[f"{gate}_out_b"]
        return z, {"u": u, "e": e}

    def cell_forward_batch(self, x: np.ndarray, h: np.ndarray, c: np.ndarray, cache=None):
        """One LSTM step over a batch: x (B, input_dim) -> new (h, c)."""
        v = np.concatenate([x, h], axis=1)
        z_f, m_f = self._gate_batch("forget", v)
        z_i, m_i = self._gate_batch("input", v)
        z_u, m_u = self._gate_batch("update", v)
        z_o, m_o = self._gate_batch("output", v)
        f = sigmoid(z_f)
        i = sigmoid(z_i)
        g = np.tanh(z_u)
        o = sigmoid(z_o)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        if cache is not None:
            cache.append(
                {
                    "v": v,
                    "f": f,
                    "i": i,
                    "g": g,
                    "o": o,
                    "c_prev": c,
                    "tanh_c": tanh_c,
                    "forget": m_f,
                    "input": m_i,
                    "update": m_u,
                    "output": m_o,
                }
            )
        return h_new, c_new

    def cell_forward(self, x: np.ndarray, state: CellState) -> CellState:
        h, c = self.cell_forward_batch(
            np.asarray(x, dtype=np.float64)[None, :], state.h[None, :], state.c[None, :]
        )
        return CellState(h=h[0], c=c[0])

    def sequence_forward_batch(self, windows: np.ndarray, cache=None) -> np.ndarray:
        """windows (B, seq_len, input_dim) -> class probabilities (B, 2)."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None, :, :]
        b, t, f = windows.shape
        if (t, f) != (self.config.seq_len, self.config.input_dim):
            raise QlstmError(
                f"window shape {(t, f)} != ({self.config.seq_len}, {self.config.input_dim})"
            )
        h = np.zeros((b, self.config.hidden_dim))
        c = np.zeros((b, self.config.hidden_dim))
        for step in range(t):
            h, c = self.cell_forward_batch(windows[:, step, :], h, c, cache)
        logits = h @ self.params["head_w"].T + self.params["head_b"]
        if cache is not None:
            cache.append({"h_final": h, "logits": logits})
        return softmax(logits)

    def sequence_forward(self, window: np.ndarray) -> np.ndarray:
        """(P_up, P_down) for one normalized window."""
        return self.sequence_forward_batch(np.asarray(window)[None, :, :])[0]

    # --- backward (single sample BPTT) ---

    def loss_and_grads(self, window: np.ndarray, label: int, class_weights: np.ndarray):
        """Weighted cross-entropy loss and its gradient w.r.t. every parameter."""
        cache: list = []
        probs = self.sequence_forward_batch(np.asarray(window)[None, :, :], cache)[0]
        head = cache.pop()
        loss, d_logits = weighted_cross_entropy(probs, label, class_weights)

        p = self.params
        grads = {name: np.zeros(shape) for name, shape in self.layout.entries}
        grads["head_w"] += np.outer(d_logits, head["h_final"][0])
        grads["head_b"] += d_logits
        dh = p["head_w"].T @ d_logits
        dc = np.zeros(self.config.hidden_dim)

        for step in reversed(range(self.config.seq_len)):
            m = cache[step]
            f, i, g, o = m["f"][0], m["i"][0], m["g"][0], m["o"][0]
            tanh_c = m["tanh_c"][0]
            c_prev = m["c_prev"][0]
            v = m["v"][0]

            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c**2)
            df = dc * c_prev
            di = dc * g
            dg = dc * i
            dz = {
                "forget": df * f * (1.0 - f),
                "input": di * i * (1.0 - i),
                "update": dg * (1.0 - g**2),
                "output": do * o * (1.0 - o),
            }
            dv = np.zeros(self.config.input_dim + self.config.hidden_dim)
            for gate in GATES:
                zgrad = dz[gate]
                e = m[gate]["e"][0]
                u = m[gate]["u"][0]
                grads[f"{gate}_out_w"] += np.outer(zgrad, e)
                grads[f"{gate}_out_b"] += zgrad
                de = p[f"{gate}_out_w"].T @ zgrad
                d_theta, du = vqc_gradient(self.vqc_spec, p[f"{gate}_vqc"], u, de)
                grads[f"{gate}_vqc"] += d_theta
                grads[f"{gate}_in_w"] += np.outer(du, v)
                grads[f"{gate}_in_b"] += du
                dv += p[f"{gate}_in_w"].T @ du
            dh = dv[self.config.input_dim :]
            dc = dc * f
        return loss, grads, probs


def class_weights_inverse_frequency(labels) -> np.ndarray:
    """w_c = N / (n_classes * N_c); rejects single-class datasets."""
    labels = np.asarray(labels)
    counts = np.array([(labels == LABEL_UP).sum(), (labels == LABEL_DOWN).sum()])
    if counts.min() == 0:
        raise QlstmError("training dataset must contain both classes")
    return labels.size / (N_CLASSES * counts.astype(np.float64))


def accuracy(model: QlstmModel, samples) -> float:
    if not samples:
        return float("nan")
    windows = np.stack([s.window for s in samples])
    probs = model.sequence_forward_batch(windows)
    predicted = np.argmax(probs, axis=1)
    labels = np.array([s.label for s in samples])
    return float(np.mean(predicted == labels))


def train_qlstm(
    samples,
    config: QlstmConfig,
    init_seed: int = 0,
    shuffle_seed: int = 0,
    test_samples=None,
    class_weights: np.ndarray | None = None,
) -> tuple[QlstmModel, list[EpochMetrics]]:
    """Online RMSprop over shuffled samples; deterministic under fixed seeds."""
    if not samples:
        raise QlstmError("empty training dataset")
    if class_weights is None:
        class_weights = class_weights_inverse_frequency([s.label for s in samples])

    model = QlstmModel(config, init_seed=init_seed)
    vector = model.to_vector()
    state = RmspropState.zeros(vector.size)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    history: list[EpochMetrics] = []

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(samples))
        total_loss = 0.0
        for idx in order:
            s = samples[idx]
            loss, grads, _ = model.loss_and_grads(s.window, s.label, class_weights)
            total_loss += loss
            rmsprop_step(vector, model.layout.flatten(grads), state, lr=config.lr)
            model.from_vector(vector)
        history.append(
            EpochMetrics(
                epoch=epoch,
                loss=total_loss / len(samples),
                train_acc=accuracy(model, samples),
                test_acc=accuracy(model, test_samples) if test_samples else None,
            )
        )
    return model, history


def save_qlstm(path, model: QlstmModel, extra_header: dict | None = None) -> None:
    from .nn_core import save_checkpoint

    header = {
        "kind": "qlstm",
        "config": model.config.model_dump(),
        "shapes": model.layout.shapes(),
    }
    if extra_header:
        header.update(extra_header)
    save_checkpoint(path, header, model.to_vector())


def load_qlstm(path) -> QlstmModel:
    from .nn_core import load_checkpoint

    header, vector = load_checkpoint(path)
    if header.get("kind") != "qlstm":
        raise QlstmError(f"{path}: not a qlstm checkpoint")
    config = QlstmConfig(**header["config"])
    model = QlstmModel(config)
    model.from_vector(vector)
    return model
