"""Exact statevector simulation of small variational quantum circuits.

Conventions (fixed, relied on by the rest of the package):

- Little-endian basis ordering: qubit 0 is the least-significant bit of the
  basis-state index, so ``|q_{n-1} ... q_1 q_0>`` maps to index
  ``sum(q_k * 2**k)``.
- The only gates are R_y rotations and CNOT; registers stay real-amplitude
  in principle but amplitudes are kept complex for generality.
- Circuit layout of a VQC: one R_y(pi * x_i) encoding rotation per input
  feature on qubits 0..n_inputs-1, then per variational layer one R_y(theta)
  per qubit followed by a CNOT ring q -> (q+1) mod n (ascending control
  order; skipped for single-qubit registers). Measurement is the Pauli-Z
  expectation of every qubit.

All kernels are batched: an amplitude array of shape (batch, 2**n) is
processed in one vectorized pass, which is what makes parameter-shift
gradients affordable (every shifted circuit becomes one batch row).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_QUBITS = 12
ENCODING_SCALE = np.pi  # angle = pi * feature
SHIFT = np.pi / 2.0  # parameter-shift offset for R_y


class QubitError(ValueError):
    """Raised for invalid qubit counts or gate indices."""


@dataclass
class StateVector:
    """An n-qubit register as 2**n complex amplitudes (little-endian)."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


@dataclass(frozen=True)
class VqcSpec:
    """Declarative layout of a variational circuit.

    ``n_params`` trainable angles, one per (layer, qubit). Entanglement is a
    fixed CNOT ring; every qubit is measured in Z.
    """

    n_qubits: int
    n_inputs: int
    n_layers: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise QubitError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        if not 0 <= self.n_inputs <= self.n_qubits:
            raise QubitError(
                f"n_inputs must be in 0..n_qubits={self.n_qubits}, got {self.n_inputs}"
            )
        if self.n_layers < 0:
            raise QubitError(f"n_layers must be >= 0, got {self.n_layers}")

    @property
    def n_params(self) -> int:
        return self.n_qubits * self.n_layers


@dataclass
class VqcParams:
    """Trainable rotation angles, shape (n_layers, n_qubits), radians."""

    angles: np.ndarray = field()

    def __post_init__(self) -> None:
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.ndim != 2:
            raise ValueError(f"angles must be 2-D (layers, qubits), got {self.angles.shape}")
        if not np.all(np.isfinite(self.angles)):
            raise ValueError("angles must be finite")


def init_state(n_qubits: int) -> StateVector:
    """All-zeros register |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise QubitError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise QubitError(f"qubit {qubit} out of range for {n_qubits}-qubit register")


def _ry_batch(amps: np.ndarray, n_qubits: int, qubit: int, theta) -> None:
    """Apply R_y(theta) to ``qubit`` in-place on a (B, 2**n) batch.

    ``theta`` is a scalar or a length-B vector (one angle per batch row).
    """
    batch = amps.shape[0]
    hi = 2 ** (n_qubits - qubit - 1)
    lo = 2**qubit
    view = amps.reshape(batch, hi, 2, lo)
    half = np.asarray(theta, dtype=np.float64) / 2.0
    c = np.cos(half)
    s = np.sin(half)
    if c.ndim == 1:  # per-row angles broadcast over the amplitude axes
        c = c[:, None, None]
        s = s[:, None, None]
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    new0 = c * a0 - s * a1
    view[:, :, 1, :] = s * a0 + c * a1
    view[:, :, 0, :] = new0


@lru_cache(maxsize=256)
def _cnot_index_pairs(n_qubits: int, control: int, target: int):
    idx = np.arange(2**n_qubits)
    sel = (((idx >> control) & 1) == 1) & (((idx >> target) & 1) == 0)
    i0 = idx[sel]
    return i0, i0 | (1 << target)


def _cnot_batch(amps: np.ndarray, n_qubits: int, control: int, target: int) -> None:
    i0, i1 = _cnot_index_pairs(n_qubits, control, target)
    tmp = amps[:, i0].copy()
    amps[:, i0] = amps[:, i1]
    amps[:, i1] = tmp


def _expect_z_batch(amps: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    batch = amps.shape[0]
    hi = 2 ** (n_qubits - qubit - 1)
    lo = 2**qubit
    p = (np.abs(amps) ** 2).reshape(batch, hi, 2, lo)
    return np.real(p[:, :, 0, :].sum(axis=(1, 2)) - p[:, :, 1, :].sum(axis=(1, 2)))


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    """Single-qubit R_y rotation, in place."""
    _check_qubit(state.n_qubits, qubit)
    _ry_batch(state.amplitudes.reshape(1, -1), state.n_qubits, qubit, float(theta))
    return state


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """CNOT with the given control/target, in place."""
    _check_qubit(state.n_qubits, control)
    _check_qubit(state.n_qubits, target)
    if control == target:
        raise QubitError("control and target must differ")
    _cnot_batch(state.amplitudes.reshape(1, -1), state.n_qubits, control, target)
    return state


def expect_z(state: StateVector, qubit: int) -> float:
    """Pauli-Z expectation of one qubit, in [-1, 1]."""
    _check_qubit(state.n_qubits, qubit)
    return float(_expect_z_batch(state.amplitudes.reshape(1, -1), state.n_qubits, qubit)[0])


def _run_circuit(spec: VqcSpec, enc_angles: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Evaluate the fixed ansatz on a batch of angle assignments.

    enc_angles: (B, n_inputs) encoding rotations in radians.
    thetas: (B, n_layers, n_qubits) variational rotations.
    Returns per-qubit Z expectations, shape (B, n_qubits).
    """
    batch = enc_angles.shape[0]
    n = spec.n_qubits
    amps = np.zeros((batch, 2**n), dtype=np.complex128)
    amps[:, 0] = 1.0
    for q in range(spec.n_inputs):
        _ry_batch(amps, n, q, enc_angles[:, q])
    for layer in range(spec.n_layers):
        for q in range(n):
            _ry_batch(amps, n, q, thetas[:, layer, q])
        if n > 1:
            for q in range(n):
                _cnot_batch(amps, n, q, (q + 1) % n)
    return np.stack([_expect_z_batch(amps, n, q) for q in range(n)], axis=1)


def _as_angles(spec: VqcSpec, params) -> np.ndarray:
    angles = params.angles if isinstance(params, VqcParams) else np.asarray(params, dtype=np.float64)
    if angles.shape != (spec.n_layers, spec.n_qubits):
        raise ValueError(
            f"params shape {angles.shape} does not match spec "
            f"({spec.n_layers}, {spec.n_qubits})"
        )
    return angles


def vqc_forward(spec: VqcSpec, params, inputs: np.ndarray) -> np.ndarray:
    """Z expectations of the ansatz for one input vector, shape (n_qubits,)."""
    return vqc_forward_batch(spec, params, np.asarray(inputs, dtype=np.float64)[None, :])[0]


def vqc_forward_batch(spec: VqcSpec, params, inputs: np.ndarray) -> np.ndarray:
    """Batched forward pass: inputs (B, n_inputs) -> expectations (B, n_qubits)."""
    angles = _as_angles(spec, params)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.n_inputs:
        raise ValueError(f"inputs shape {inputs.shape} does not match n_inputs={spec.n_inputs}")
    batch = inputs.shape[0]
    thetas = np.broadcast_to(angles, (batch, spec.n_layers, spec.n_qubits))
    return _run_circuit(spec, ENCODING_SCALE * inputs, thetas)


def vqc_gradient(
    spec: VqcSpec, params, inputs: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Parameter-shift gradient for one input vector.

    Returns (d_params (n_layers, n_qubits), d_inputs (n_inputs,)) of
    ``sum_j upstream[j] * <Z_j>``.
    """
    d_params, d_inputs = vqc_gradient_batch(
        spec,
        params,
        np.asarray(inputs, dtype=np.float64)[None, :],
        np.asarray(upstream, dtype=np.float64)[None, :],
    )
    return d_params[0], d_inputs[0]


def vqc_gradient_batch(
    spec: VqcSpec, params, inputs: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batched parameter-shift gradients.

    inputs: (B, n_inputs); upstream: (B, n_qubits) cotangents of the
    expectations. Returns (d_params (B, n_layers, n_qubits),
    d_inputs (B, n_inputs)). Every shifted circuit of every batch item is a
    row of one statevector batch, so the whole thing is a single pass.
    """
    angles = _as_angles(spec, params)
    inputs = np.asarray(inputs, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.n_inputs:
        raise ValueError(f"inputs shape {inputs.shape} does not match n_inputs={spec.n_inputs}")
    if upstream.shape != (inputs.shape[0], spec.n_qubits):
        raise ValueError(
            f"upstream shape {upstream.shape} does not match (batch, n_qubits)"
        )
    batch = inputs.shape[0]
    n_enc = spec.n_inputs
    n_var = spec.n_params
    k = n_enc + n_var  # differentiated angles per item
    if k == 0:
        return np.zeros((batch, spec.n_layers, spec.n_qubits)), np.zeros((batch, 0))

    # Flat angle vector per item: encoding angles first, then layer-major thetas.
    base = np.concatenate(
        [ENCODING_SCALE * inputs, np.broadcast_to(angles.ravel(), (batch, n_var))], axis=1
    )  # (B, K)
    shifted = np.repeat(base, 2 * k, axis=0)  # (B*2K, K)
    offsets = np.zeros((2 * k, k))
    rows = np.arange(k)
    offsets[2 * rows, rows] = SHIFT
    offsets[2 * rows + 1, rows] = -SHIFT
    shifted += np.tile(offsets, (batch, 1))

    enc = shifted[:, :n_enc]
    thetas = shifted[:, n_enc:].reshape(-1, spec.n_layers, spec.n_qubits)
    exps = _run_circuit(spec, enc, thetas)  # (B*2K, n_qubits)
    exps = exps.reshape(batch, k, 2, spec.n_qubits)
    # d<Z_j>/d(angle_k) = (f(+pi/2) - f(-pi/2)) / 2, contracted with upstream.
    jac = (exps[:, :, 0, :] - exps[:, :, 1, :]) / 2.0  # (B, K, n_qubits)
    grads = np.einsum("bkj,bj->bk", jac, upstream)
    d_inputs = ENCODING_SCALE * grads[:, :n_enc]
    d_params = grads[:, n_enc:].reshape(batch, spec.n_layers, spec.n_qubits)
    return d_params, d_inputs
