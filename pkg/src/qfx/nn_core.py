"""Minimal dense-network toolkit: layers, activations, losses, optimizers.

Everything works on plain float64 numpy arrays. Models flatten their
parameters into a single 1-D vector (fixed layout) so optimizers and
checkpoints only ever deal with flat vectors.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"QFX1"

RMSPROP_DECAY = 0.99
RMSPROP_EPS = 1e-8
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_CLIP = 1e-12


@dataclass
class DenseLayer:
    """Affine map y = W x + b with weights (out, in) and bias (out,)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def n_params(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.weights @ x + self.bias

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def backward(self, x: np.ndarray, upstream: np.ndarray):
        """Gradients for a single sample: (d_weights, d_bias, d_x)."""
        if upstream.shape != self.bias.shape:
            raise ValueError(f"upstream shape {upstream.shape} != {self.bias.shape}")
        return np.outer(upstream, x), upstream.copy(), self.weights.T @ upstream

    def backward_batch(self, x: np.ndarray, upstream: np.ndarray):
        """Summed parameter gradients over a batch plus per-row input grads."""
        return upstream.T @ x, upstream.sum(axis=0), upstream @ self.weights


def init_dense(rng: np.random.Generator, n_out: int, n_in: int) -> DenseLayer:
    """Uniform +-sqrt(6/(in+out)) weights, zero bias."""
    bound = np.sqrt(6.0 / (n_in + n_out))
    return DenseLayer(
        weights=rng.uniform(-bound, bound, size=(n_out, n_in)),
        bias=np.zeros(n_out),
    )


def init_angles(rng: np.random.Generator, n_layers: int, n_qubits: int) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, size=(n_layers, n_qubits))


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def tanh(x):
    return np.tanh(x)


def softmax(v: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis."""
    v = np.asarray(v, dtype=np.float64)
    z = v - v.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def weighted_cross_entropy(probs: np.ndarray, label: int, class_weights: np.ndarray):
    """Loss -w_label * log(p_label) and its gradient w.r.t. the logits.

    ``probs`` must come from a softmax over the same logits; the returned
    gradient is the exact derivative of the softmax/cross-entropy
    composition, w_label * (probs - onehot).
    """
    if not 0 <= label < probs.shape[-1]:
        raise ValueError(f"label {label} out of range for {probs.shape[-1]} classes")
    w = float(class_weights[label])
    loss = -w * np.log(probs[label] + LOG_CLIP)
    d_logits = w * probs.copy()
    d_logits[label] -= w
    return float(loss), d_logits


@dataclass
class RmspropState:
    """Squared-gradient EMA, one slot per parameter."""

    sq_avg: np.ndarray
    skipped: int = 0

    @classmethod
    def zeros(cls, n: int) -> "RmspropState":
        return cls(sq_avg=np.zeros(n))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    skipped: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def rmsprop_step(
    params: np.ndarray, grads: np.ndarray, state: RmspropState, lr: float = 5e-3
) -> bool:
    """In-place RMSprop update. Returns False (and counts) on non-finite grads."""
    if params.shape != grads.shape:
        raise ValueError(f"shape mismatch {params.shape} vs {grads.shape}")
    if not np.all(np.isfinite(grads)):
        state.skipped += 1
        return False
    state.sq_avg *= RMSPROP_DECAY
    state.sq_avg += (1.0 - RMSPROP_DECAY) * grads * grads
    params -= lr * grads / (np.sqrt(state.sq_avg) + RMSPROP_EPS)
    return True


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float = 1e-5) -> bool:
    """In-place bias-corrected Adam update. Skips non-finite gradients."""
    if params.shape != grads.shape:
        raise ValueError(f"shape mismatch {params.shape} vs {grads.shape}")
    if not np.all(np.isfinite(grads)):
        state.skipped += 1
        return False
    state.step += 1
    state.m += (1.0 - ADAM_BETA1) * (grads - state.m)
    state.v += (1.0 - ADAM_BETA2) * (grads * grads - state.v)
    m_hat = state.m / (1.0 - ADAM_BETA1**state.step)
    v_hat = state.v / (1.0 - ADAM_BETA2**state.step)
    params -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return True


def count_dense(layers) -> int:
    return sum(layer.n_params for layer in layers)


def count_angles(angle_arrays) -> int:
    return sum(np.asarray(a).size for a in angle_arrays)


def param_count(dense_layers=(), angle_arrays=()) -> tuple[int, int, int]:
    """(quantum, classical, total) over the given model parts."""
    quantum = count_angles(angle_arrays)
    classical = count_dense(dense_layers)
    return quantum, classical, quantum + classical


# --- checkpoint format ---
#
# magic "QFX1" | uint32 LE header length | UTF-8 JSON header | float64 LE
# parameter vector. The header carries at least {"kind", "shapes", "n_params"}
# plus whatever config/seeds the model wants to persist.


def save_checkpoint(path, header: dict, params: np.ndarray) -> None:
    params = np.ascontiguousarray(params, dtype="<f8")
    meta = dict(header)
    meta["n_params"] = int(params.size)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(params.tobytes())


def load_checkpoint(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a QFX checkpoint (magic {magic!r})")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        data = fh.read()
    params = np.frombuffer(data, dtype="<f8").astype(np.float64)
    if params.size != header.get("n_params"):
        raise ValueError(
            f"{path}: expected {header.get('n_params')} parameters, found {params.size}"
        )
    return header, params


@dataclass
class ParamLayout:
    """Fixed (name, shape) layout mapping arrays to one flat vector."""

    entries: list = field(default_factory=list)  # (name, shape) pairs

    @property
    def size(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.entries)

    def flatten(self, arrays: dict) -> np.ndarray:
        return np.concatenate(
            [np.asarray(arrays[name], dtype=np.float64).ravel() for name, _ in self.entries]
        )

    def unflatten(self, vector: np.ndarray) -> dict:
        if vector.size != self.size:
            raise ValueError(f"vector size {vector.size} != layout size {self.size}")
        out = {}
        pos = 0
        for name, shape in self.entries:
            n = int(np.prod(shape))
            out[name] = vector[pos : pos + n].reshape(shape).copy()
            pos += n
        return out

    def shapes(self) -> dict:
        return {name: list(shape) for name, shape in self.entries}
