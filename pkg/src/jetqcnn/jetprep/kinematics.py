"""Four-momentum rescaling, boosting and the Gram-Schmidt jet frame."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DegeneracyError, KinematicsError

DEGENERACY_TOL = 1e-12


class FourMomentum(NamedTuple):
    E: float
    px: float
    py: float
    pz: float

    @property
    def p3(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])

    def mass2(self) -> float:
        return self.E**2 - float(self.p3 @ self.p3)


@dataclass
class Jet:
    """Constituents as an ``(n, 4)`` array of (E, px, py, pz) rows in GeV."""

    constituents: np.ndarray
    label: int

    def __post_init__(self):
        self.constituents = np.asarray(self.constituents, dtype=float).reshape(-1, 4)

    def __len__(self):
        return len(self.constituents)

    def total(self) -> np.ndarray:
        return self.constituents.sum(axis=0)

    def momentum(self, i: int) -> FourMomentum:
        return FourMomentum(*self.constituents[i])


def invariant_mass(p4) -> float:
    p4 = np.asarray(p4, dtype=float)
    m2 = p4[0] ** 2 - p4[1:] @ p4[1:]
    return float(np.sqrt(m2)) if m2 > 0 else 0.0


def boost_along(p4s: np.ndarray, direction: np.ndarray, rapidity: float) -> np.ndarray:
    """Boost rows of (E, p) by ``rapidity`` along the unit vector ``direction``."""
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    E = p4s[:, 0]
    p = p4s[:, 1:]
    par = p @ direction
    E_new = ch * E + sh * par
    par_new = sh * E + ch * par
    p_new = p + np.outer(par_new - par, direction)
    return np.column_stack([E_new, p_new])


def rescale_and_boost(jet: Jet, m_B: float = 1.0, E_B: float = 10.0) -> Jet:
    """Scale the jet to mass ``m_B`` then boost it along its axis to energy ``E_B``.

    Every constituent is scaled by m_B / m_J and then boosted; massless
    constituents stay massless.
    """
    if not (m_B > 0 and E_B >= m_B):
        raise KinematicsError(f"need 0 < m_B <= E_B, got m_B={m_B}, E_B={E_B}")
    tot = jet.total()
    m2 = tot[0] ** 2 - tot[1:] @ tot[1:]
    if not m2 > 0 or tot[0] <= 0:
        raise KinematicsError(f"jet four-momentum is not timelike (m^2 = {m2:.6g})")
    scaled = jet.constituents * (m_B / np.sqrt(m2))
    tot = scaled.sum(axis=0)
    pmag = np.linalg.norm(tot[1:])
    target = np.arccosh(E_B / m_B)
    current = np.arctanh(min(pmag / tot[0], 1.0))
    delta = target - current
    if pmag == 0.0:
        if delta != 0.0:
            raise KinematicsError("jet at rest has no boost direction")
        return Jet(scaled, jet.label)
    return Jet(boost_along(scaled, tot[1:] / pmag, delta), jet.label)


@dataclass(frozen=True)
class GSBasis:
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.vstack([self.e1, self.e2, self.e3])


def _unit(v):
    return v / np.linalg.norm(v)


def gram_schmidt(P: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> GSBasis:
    """Orthonormal frame with e1 along P, e2 from p1, e3 from p2."""
    vecs = [np.asarray(v, dtype=float) for v in (P, p1, p2)]
    norms = [np.linalg.norm(v) for v in vecs]
    if min(norms) == 0.0:
        raise DegeneracyError("zero-length vector in Gram-Schmidt input")
    det = np.linalg.det(np.vstack([v / n for v, n in zip(vecs, norms)]))
    if abs(det) < DEGENERACY_TOL:
        raise DegeneracyError(f"Gram-Schmidt inputs are linearly dependent (det={det:.3g})")
    e1 = vecs[0] / norms[0]
    e2 = vecs[1] - (vecs[1] @ e1) * e1
    e2 = e2 - (e2 @ e1) * e1  # second pass keeps orthogonality at 1e-16
    e2 = _unit(e2)
    e3 = vecs[2]
    for _ in range(2):
        e3 = e3 - (e3 @ e1) * e1 - (e3 @ e2) * e2
    e3 = _unit(e3)
    return GSBasis(e1, e2, e3)


def leading_constituents(jet: Jet, n: int = 3) -> np.ndarray:
    """Indices of the ``n`` largest |p| constituents; ties keep input order."""
    pmag = np.linalg.norm(jet.constituents[:, 1:], axis=1)
    return np.argsort(-pmag, kind="stable")[:n]


def gram_schmidt_basis(jet: Jet) -> GSBasis:
    if len(jet) < 3:
        raise DegeneracyError("Gram-Schmidt frame needs at least 3 constituents")
    i1, i2, i3 = leading_constituents(jet, 3)
    p = jet.constituents[:, 1:]
    return gram_schmidt(p[i1] + p[i2] + p[i3], p[i1], p[i2])


def project_constituent(p: FourMomentum | np.ndarray, basis: GSBasis) -> tuple[float, float, float]:
    """(X, Y, weight numerator) = (p.e2 / E, p.e3 / E, E)."""
    p = np.asarray(p, dtype=float)
    E = p[0]
    if not E > 0:
        raise KinematicsError(f"constituent energy must be positive, got {E}")
    return float(p[1:] @ basis.e2 / E), float(p[1:] @ basis.e3 / E), float(E)


def project_all(p4s: np.ndarray, basis: GSBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Vectorised projection; returns X, Y, E and the number of dropped rows."""
    ok = p4s[:, 0] > 0
    kept = p4s[ok]
    E = kept[:, 0]
    X = kept[:, 1:] @ basis.e2 / E
    Y = kept[:, 1:] @ basis.e3 / E
    return X, Y, E, int((~ok).sum())
