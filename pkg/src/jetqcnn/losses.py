"""Batch-mean losses, their prediction gradients, and accuracy."""
from __future__ import annotations

import enum

import numpy as np

from .errors import ConfigurationError, InputError

PROB_EPS = 1e-7


class LossKind(str, enum.Enum):
    HINGE = "H"
    MSE = "M"
    CROSS_ENTROPY = "C"

    @property
    def signed_labels(self) -> bool:
        return self is not LossKind.CROSS_ENTROPY


_ALIASES = {
    "h": LossKind.HINGE, "hinge": LossKind.HINGE,
    "m": LossKind.MSE, "mse": LossKind.MSE,
    "c": LossKind.CROSS_ENTROPY, "ce": LossKind.CROSS_ENTROPY,
    "crossentropy": LossKind.CROSS_ENTROPY, "cross-entropy": LossKind.CROSS_ENTROPY,
    "cross_entropy": LossKind.CROSS_ENTROPY,
}


def parse_loss(name) -> LossKind:
    if isinstance(name, LossKind):
        return name
    try:
        return _ALIASES[str(name).lower()]
    except KeyError:
        raise ConfigurationError(f"unknown loss {name!r}; allowed: hinge, mse, crossentropy") from None


def to_signed(labels01) -> np.ndarray:
    return 2.0 * np.asarray(labels01, dtype=float) - 1.0


def to_binary(labels_pm) -> np.ndarray:
    return ((np.asarray(labels_pm) + 1) // 2).astype(int)


def labels_for(kind: LossKind, labels01) -> np.ndarray:
    """Labels in the domain ``kind`` consumes, from stored {0, 1} labels."""
    return to_signed(labels01) if parse_loss(kind).signed_labels else np.asarray(labels01, dtype=float)


def _check(kind, y, pred):
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if y.shape != pred.shape or y.size == 0:
        raise InputError(f"labels {y.shape} and predictions {pred.shape} must match and be nonempty")
    if kind.signed_labels:
        if not np.all(np.abs(y) == 1.0):
            raise InputError(f"{kind.name} expects labels in {{-1, +1}}")
    else:
        if not np.all((y == 0.0) | (y == 1.0)):
            raise InputError("cross-entropy expects labels in {0, 1}")
        if np.any((pred < 0.0) | (pred > 1.0)):
            raise InputError("cross-entropy expects predictions in [0, 1]")
    return y, pred


def loss(kind, y, pred) -> float:
    kind = parse_loss(kind)
    y, pred = _check(kind, y, pred)
    if kind is LossKind.MSE:
        return float(np.mean((y - pred) ** 2))
    if kind is LossKind.HINGE:
        return float(np.mean(np.maximum(0.0, 1.0 - y * pred)))
    p = np.clip(pred, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_grad(kind, y, pred) -> np.ndarray:
    """d(batch-mean loss)/d(prediction_i). Hinge uses 0 at the kink."""
    kind = parse_loss(kind)
    y, pred = _check(kind, y, pred)
    n = y.size
    if kind is LossKind.MSE:
        return 2.0 * (pred - y) / n
    if kind is LossKind.HINGE:
        return np.where(1.0 - y * pred > 0.0, -y, 0.0) / n
    inside = (pred > PROB_EPS) & (pred < 1.0 - PROB_EPS)
    p = np.clip(pred, PROB_EPS, 1.0 - PROB_EPS)
    return np.where(inside, -(y / p - (1.0 - y) / (1.0 - p)), 0.0) / n


def accuracy(y, pred, kind) -> float:
    """Fraction correct. Signed losses classify by sign (0 counts as wrong);
    cross-entropy predicts class 1 when p > 0.5."""
    kind = parse_loss(kind)
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if y.size == 0:
        raise InputError("accuracy of an empty set")
    if kind.signed_labels:
        return float(np.mean(y * pred > 0.0))
    return float(np.mean((pred > 0.5).astype(float) == y))
