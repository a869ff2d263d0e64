"""Synthetic stand-ins for the TopTagging inputs.

``separable_blobs`` is the fallback classification set: two isotropic
Gaussian blobs in 4-d PCA space whose centres are ``separation`` standard
deviations apart, min-max scaled into the encoding range with training-split
bounds. ``toy_jets`` draws massless-constituent jets with three hard prongs
(label 1) or one hard core with a soft wide spray (label 0); they exist to
exercise the image pipeline, not to model physics.
"""
from __future__ import annotations

import numpy as np

from .jetprep.kinematics import Jet
from .jetprep.pca import normalize_features, split_train_test
from .learn import Dataset


def separable_blobs(n: int = 2000, separation: float = 6.0, seed: int = 0,
                    fraction: float = 0.8, direction=None) -> Dataset:
    rng = np.random.default_rng(seed)
    u = np.ones(4) if direction is None else np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    labels = np.arange(n) % 2
    centres = np.where(labels[:, None] == 1, 0.5, -0.5) * separation * u
    X = centres + rng.normal(size=(n, 4))
    tr, te = split_train_test(labels, fraction, seed)
    lo, hi = X[tr].min(axis=0), X[tr].max(axis=0)
    Xtr, _ = normalize_features(X[tr], lo, hi)
    Xte, _ = normalize_features(X[te], lo, hi) if te.size else (np.zeros((0, 4)), 0)
    return Dataset(Xtr, labels[tr], Xte, labels[te])


def _prong(rng, axis, energy, n, spread):
    """``n`` massless constituents scattered around ``axis`` sharing ``energy``."""
    shares = rng.dirichlet(np.ones(n) * 0.7) * energy
    # two unit vectors orthogonal to axis
    a = np.array([1.0, 0, 0]) if abs(axis[0]) < 0.9 else np.array([0, 1.0, 0])
    t1 = np.cross(axis, a)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(axis, t1)
    d = axis + spread * (rng.normal(size=(n, 1)) * t1 + rng.normal(size=(n, 1)) * t2)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.column_stack([shares, shares[:, None] * d])


def toy_jets(n: int = 200, seed: int = 0, max_constituents: int = 60) -> list[Jet]:
    rng = np.random.default_rng(seed)
    jets = []
    for i in range(n):
        label = i % 2
        phi = rng.uniform(0, 2 * np.pi)
        eta = rng.uniform(-1.5, 1.5)
        axis = np.array([np.cos(phi), np.sin(phi), np.sinh(eta)])
        axis /= np.linalg.norm(axis)
        energy = rng.uniform(500.0, 1500.0)
        parts = []
        if label:
            shares = rng.dirichlet([4.0, 3.0, 2.0])
            k = max(3, max_constituents // 6)
            for j in range(3):
                kick = _prong(rng, axis, 1.0, 1, 0.12)[0, 1:]
                parts.append(_prong(rng, kick / np.linalg.norm(kick), energy * shares[j], k, 0.01))
        else:
            core = rng.uniform(0.8, 0.95)
            k = max(3, max_constituents // 4)
            parts.append(_prong(rng, axis, energy * core, k, 0.01))
            parts.append(_prong(rng, axis, energy * (1 - core), 2 * k, 0.15))
        cons = np.vstack(parts)
        jets.append(Jet(cons, label))
    return jets
