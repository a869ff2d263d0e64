"""Dense statevector simulation for small registers.

Qubit 0 is the most significant bit of the basis-state index, so for two
qubits the amplitude order is |00>, |01>, |10>, |11> with the left bit being
qubit 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericInputError

MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class State:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ConfigurationError(
                f"expected {2**self.num_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(num_qubits: int) -> State:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return State(num_qubits, amps)


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit index {q} out of range for {n} qubits")


def apply_1q(amps: np.ndarray, mat: np.ndarray, target: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to ``target`` of a batch of states.

    ``amps`` has shape ``(B, 2**n)``; ``mat`` is ``(2, 2)`` or a per-sample
    stack ``(B, 2, 2)``. Returns a new array.
    """
    b = amps.shape[0]
    lead = 2**target
    trail = 2 ** (n - target - 1)
    s = amps.reshape(b, lead, 2, trail)
    if mat.ndim == 2:
        out = np.einsum("ij,bljt->blit", mat, s)
    else:
        out = np.einsum("bij,bljt->blit", mat, s)
    return out.reshape(b, -1)


def apply_cnot_batch(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    s = amps.reshape((amps.shape[0],) + (2,) * n).copy()
    idx = [slice(None)] * (n + 1)
    idx[1 + control] = 1
    sub = s[tuple(idx)]
    # after fixing the control axis, axes above it shift down by one
    axis = 1 + target if target < control else target
    s[tuple(idx)] = np.flip(sub, axis=axis)
    return s.reshape(amps.shape[0], -1)


def apply_single(s: State, gate: np.ndarray, target: int) -> State:
    _check_qubit(target, s.num_qubits)
    out = apply_1q(s.amplitudes[None, :], np.asarray(gate, dtype=complex), target, s.num_qubits)
    return State(s.num_qubits, out[0])


def apply_cnot(s: State, control: int, target: int) -> State:
    _check_qubit(control, s.num_qubits)
    _check_qubit(target, s.num_qubits)
    if control == target:
        raise IndexError("CNOT control and target must differ")
    out = apply_cnot_batch(s.amplitudes[None, :], control, target, s.num_qubits)
    return State(s.num_qubits, out[0])


def _finite(*angles: float) -> None:
    if not np.all(np.isfinite(angles)):
        raise NumericInputError(f"non-finite rotation angle in {angles}")


def rotation(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle P / 2) for P in {X, Y, Z}."""
    _finite(angle)
    try:
        p = PAULI[axis]
    except KeyError:
        raise ConfigurationError(f"unknown rotation axis {axis!r}") from None
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * p


def rotation_batch(axis: str, angles: np.ndarray) -> np.ndarray:
    """Stack of rotation matrices, shape ``(len(angles), 2, 2)``."""
    angles = np.asarray(angles, dtype=float)
    c = np.cos(angles / 2)[:, None, None]
    s = np.sin(angles / 2)[:, None, None]
    return c * I2 - 1j * s * PAULI[axis]


def composite_R(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """R_Z(gamma) R_Y(beta) R_Z(alpha)."""
    return rotation("Z", gamma) @ rotation("Y", beta) @ rotation("Z", alpha)


def composite_Rprime(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """R_Z(gamma) R_X(beta) R_Z(alpha)."""
    return rotation("Z", gamma) @ rotation("X", beta) @ rotation("Z", alpha)


def expect_z(s: State, target: int) -> float:
    _check_qubit(target, s.num_qubits)
    return float(expect_z_batch(s.amplitudes[None, :], target, s.num_qubits)[0])


def expect_z_batch(amps: np.ndarray, target: int, n: int) -> np.ndarray:
    p = (np.abs(amps) ** 2).reshape(amps.shape[0], 2**target, 2, -1)
    val = p[:, :, 0, :].sum(axis=(1, 2)) - p[:, :, 1, :].sum(axis=(1, 2))
    return np.clip(val, -1.0, 1.0)


def z_diagonal(target: int, n: int) -> np.ndarray:
    """Diagonal of Z acting on ``target`` in the full 2**n space."""
    bits = (np.arange(2**n) >> (n - 1 - target)) & 1
    return 1.0 - 2.0 * bits


def embed_1q(mat: np.ndarray, target: int, n: int) -> np.ndarray:
    """Full 2**n x 2**n matrix of a single-qubit operator."""
    return np.kron(np.kron(np.eye(2**target), mat), np.eye(2 ** (n - target - 1)))


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    idx = np.arange(dim)
    flipped = np.where((idx >> (n - 1 - control)) & 1, idx ^ (1 << (n - 1 - target)), idx)
    m = np.zeros((dim, dim), dtype=complex)
    m[flipped, idx] = 1.0
    return m
