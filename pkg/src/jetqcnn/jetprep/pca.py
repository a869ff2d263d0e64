"""PCA compression of flattened jet images and feature scaling."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

log = logging.getLogger(__name__)

N_COMPONENTS = 4
MIN_SAMPLES = 5


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray
    feature_min: np.ndarray | None = None
    feature_max: np.ndarray | None = None
    standardized: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X.reshape(-1, self.mean.size) - self.mean) @ self.components.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z) @ self.components + self.mean

    def to_json(self) -> str:
        doc = {
            "n_components": self.n_components,
            "standardized": self.standardized,
            "mean": self.mean.tolist(),
            "components": self.components.ravel().tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "feature_min": None if self.feature_min is None else self.feature_min.tolist(),
            "feature_max": None if self.feature_max is None else self.feature_max.tolist(),
        }
        return json.dumps(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PCAModel":
        doc = json.loads(text)
        mean = np.array(doc["mean"], dtype=float)
        comps = np.array(doc["components"], dtype=float).reshape(doc["n_components"], mean.size)
        opt = lambda v: None if v is None else np.array(v, dtype=float)  # noqa: E731
        return cls(mean, comps, np.array(doc["explained_variance"], dtype=float),
                   opt(doc["feature_min"]), opt(doc["feature_max"]), bool(doc["standardized"]))


def pca_fit(X, n_components: int = N_COMPONENTS) -> PCAModel:
    """Principal directions of the centred rows of ``X`` (no variance scaling).

    Each component's sign is fixed so that its largest-magnitude entry is
    positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        X = X.reshape(len(X), -1)
    n, d = X.shape
    if n_components < 1 or n_components > d:
        raise ConfigurationError(f"n_components must be in [1, {d}], got {n_components}")
    if n < max(MIN_SAMPLES, n_components):
        raise ConfigurationError(f"need at least {max(MIN_SAMPLES, n_components)} samples, got {n}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:n_components]
    pivot = np.argmax(np.abs(comps), axis=1)
    comps = comps * np.sign(comps[np.arange(n_components), pivot])[:, None]
    var = s[:n_components] ** 2 / (n - 1)
    return PCAModel(mean, comps, var)


def fit_feature_range(model: PCAModel, X_train) -> PCAModel:
    feats = model.transform(X_train)
    model.feature_min = feats.min(axis=0)
    model.feature_max = feats.max(axis=0)
    return model


def normalize_features(values, lo, hi, out_range=(0.0, np.pi)) -> tuple[np.ndarray, int]:
    """Affine map [lo, hi] -> out_range per column, clamped; returns (features, n_clamped)."""
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    span = np.asarray(hi, dtype=float) - lo
    safe = np.where(span > 0, span, 1.0)
    unit = np.where(span > 0, (values - lo) / safe, 0.0)
    a, b = out_range
    scaled = a + unit * (b - a)
    clipped = np.clip(scaled, a, b)
    n_clamped = int(np.count_nonzero(clipped != scaled))
    if n_clamped:
        log.info("clamped %d feature values into [%g, %g]", n_clamped, a, b)
    return clipped, n_clamped


def features(model: PCAModel, X, out_range=(0.0, np.pi)) -> tuple[np.ndarray, int]:
    if model.feature_min is None:
        raise ConfigurationError("feature range not fitted")
    return normalize_features(model.transform(X), model.feature_min, model.feature_max, out_range)


def split_train_test(labels, fraction: float = 0.8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded stratified split; returns (train_indices, test_indices).

    The train size is round(fraction * n); per-class quotas use largest
    remainders so class proportions match to within one sample.
    """
    labels = np.asarray(labels)
    n = labels.size
    if n == 0:
        raise ConfigurationError("cannot split an empty dataset")
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"fraction must be in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    counts = np.array([(labels == c).sum() for c in classes])
    exact = counts * fraction
    quota = np.floor(exact).astype(int)
    left = int(round(fraction * n)) - quota.sum()
    for i in np.argsort(-(exact - quota), kind="stable")[:left]:
        quota[i] += 1
    train, test = [], []
    for c, q in zip(classes, quota):
        idx = rng.permutation(np.flatnonzero(labels == c))
        train.append(idx[:q])
        test.append(idx[q:])
    train = rng.permutation(np.concatenate(train))
    test = rng.permutation(np.concatenate(test))
    if test.size == 0:
        log.warning("split fraction %g leaves an empty test set", fraction)
    return train, test
