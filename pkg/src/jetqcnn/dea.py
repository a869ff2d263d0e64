"""Dimensional expressivity analysis of a parameterized circuit.

The state map C(theta) includes the encoding at a fixed input x, so each scan
point is a pair (theta, x). Derivatives are exact: for a rotation
G(t) = exp(-i t P / 2) we have dG/dt = G(t + pi) / 2, so the derivative of
the state with respect to one gate occurrence is half the state with that
single occurrence shifted by pi. Shared slots sum over their occurrences.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .circuits import CircuitSpec, simulate
from .errors import ConfigurationError, PreconditionError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


def state_space_dim(num_qubits: int) -> int:
    """Real dimension of the normalized state manifold, 2**(Q+1) - 1."""
    return 2 ** (num_qubits + 1) - 1


def state_jacobian_column(spec: CircuitSpec, theta, x, k: int) -> np.ndarray:
    """Complex derivative of the full output state with respect to slot ``k``."""
    if spec.frozen_mask[k]:
        raise PreconditionError(f"slot {k} is frozen")
    col = np.zeros(2**spec.num_qubits, dtype=complex)
    for pos, g in enumerate(spec.gates):
        if g.is_param and g.index == k:
            col += 0.5 * simulate(spec, theta, x, shifts={pos: np.pi}).amplitudes
    return col


def real_jacobian(spec: CircuitSpec, theta, x, slots=None) -> np.ndarray:
    """Stack (Re dC; Im dC) for ``slots`` (default: trainable slots in circuit order)."""
    if slots is None:
        frozen = spec.frozen_mask
        slots = [k for k in spec.slot_order() if not frozen[k]]
    cols = [state_jacobian_column(spec, theta, x, k) for k in slots]
    if not cols:
        return np.zeros((2 ** (spec.num_qubits + 1), 0))
    c = np.stack(cols, axis=1)
    return np.vstack([c.real, c.imag])


def s_matrix(J: np.ndarray) -> np.ndarray:
    S = J.T @ J
    return (S + S.T) / 2


@dataclass
class RedundancyReport:
    redundant: np.ndarray
    achieved_rank: int
    scan_points: list = field(repr=False)
    tolerance: float
    state_space_dim: int
    unstable: list[int] = field(default_factory=list)

    @property
    def kept(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(~self.redundant)]

    @property
    def redundant_slots(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.redundant)]

    def to_json(self) -> str:
        doc = {
            "kept": self.kept,
            "redundant": self.redundant_slots,
            "achieved_rank": int(self.achieved_rank),
            "state_space_dim": int(self.state_space_dim),
            "tolerance": float(self.tolerance),
            "points": len(self.scan_points),
        }
        if self.unstable:
            doc["unstable"] = [int(k) for k in self.unstable]
        return json.dumps(doc, indent=2) + "\n"


def sample_points(spec: CircuitSpec, n_points: int = 5, seed: int = 0,
                  x_range: tuple[float, float] = (0.0, np.pi)) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n_points):
        theta = spec.full_params(rng.uniform(0.0, 2 * np.pi, spec.param_count))
        x = rng.uniform(x_range[0], x_range[1], spec.num_qubits)
        pts.append((theta, x))
    return pts


def redundancy_scan(spec: CircuitSpec, points, tol: float = DEFAULT_TOL) -> RedundancyReport:
    """Inductive rank scan over trainable slots in circuit order.

    A slot is kept only if appending its Jacobian column raises the rank at
    every sample point, i.e. the smallest eigenvalue of the candidate S matrix
    exceeds ``tol`` times its largest. Frozen slots are reported redundant.
    """
    points = list(points)
    if not points:
        raise ConfigurationError("redundancy scan needs at least one sample point")
    if not tol > 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")
    frozen = spec.frozen_mask
    order = [k for k in spec.slot_order() if not frozen[k]]
    jacs = [real_jacobian(spec, theta, x, order) for theta, x in points]
    col_of = {k: i for i, k in enumerate(order)}
    dim = state_space_dim(spec.num_qubits)

    redundant = np.ones(spec.param_count, dtype=bool)
    kept_cols: list[int] = []
    unstable = []
    for k in order:
        if len(kept_cols) == dim:
            break
        cand = kept_cols + [col_of[k]]
        raises = 0
        for J in jacs:
            ev = np.linalg.eigvalsh(s_matrix(J[:, cand]))
            if ev[0] > tol * ev[-1]:
                raises += 1
        if raises == len(jacs):
            kept_cols.append(col_of[k])
            redundant[k] = False
        elif raises:
            unstable.append(k)
    if unstable:
        log.warning("slots %s raise the rank at some sample points only", unstable)
    return RedundancyReport(redundant, len(kept_cols), points, tol, dim, unstable)


def prune(spec: CircuitSpec, report: RedundancyReport, theta_freeze) -> CircuitSpec:
    """Freeze every redundant slot of ``spec`` at its value in ``theta_freeze``."""
    if report.redundant.shape != (spec.param_count,):
        raise ConfigurationError("redundancy report does not match this circuit")
    theta_freeze = np.asarray(theta_freeze, dtype=float)
    if theta_freeze.shape != (spec.param_count,):
        raise ConfigurationError(f"freeze vector must have {spec.param_count} entries")
    already = spec.frozen_mask
    new = {int(k): float(theta_freeze[k]) for k in np.flatnonzero(report.redundant & ~already)}
    if not new:
        return spec
    return spec.freeze(new)
