"""Small classical CNN for 2x2 inputs with hand-written backpropagation.

Layers: Conv2d (F filters, 2x2 kernel, valid, stride 1) + ReLU -> MaxPool
over the single 1x1 cell (an identity, kept to mirror the usual
conv/pool/flatten/dense stack) -> flatten -> Dense(D) + ReLU -> Dense(1) with
tanh (hinge, MSE) or sigmoid (cross-entropy) output.

Parameter count: 4F + F (conv) + F*D + D (dense) + D + 1 (output); F=4 gives
33 for D=2 and 51 for D=5.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError


def parameter_count(filters: int, dense: int) -> int:
    if filters < 1 or dense < 1:
        raise ConfigurationError("filters and dense width must be positive")
    return 4 * filters + filters + filters * dense + dense + dense + 1


@dataclass
class CNNModel:
    conv_w: np.ndarray  # (F, 2, 2)
    conv_b: np.ndarray  # (F,)
    w1: np.ndarray  # (F, D)
    b1: np.ndarray  # (D,)
    w2: np.ndarray  # (D,)
    b2: float
    output: str = "tanh"  # or "sigmoid"

    @property
    def filters(self) -> int:
        return self.conv_w.shape[0]

    @property
    def dense(self) -> int:
        return self.w1.shape[1]

    @property
    def n_params(self) -> int:
        return parameter_count(self.filters, self.dense)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.conv_w.ravel(), self.conv_b, self.w1.ravel(), self.b1,
                               self.w2, [self.b2]])

    @classmethod
    def from_vector(cls, vec, filters: int = 4, dense: int = 2, output: str = "tanh") -> "CNNModel":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (parameter_count(filters, dense),):
            raise ShapeError(f"expected {parameter_count(filters, dense)} weights, got {vec.shape}")
        F, D = filters, dense
        cuts = np.cumsum([4 * F, F, F * D, D, D])
        cw, cb, w1, b1, w2, b2 = np.split(vec, cuts)
        return cls(cw.reshape(F, 2, 2), cb, w1.reshape(F, D), b1, w2, float(b2[0]), output)

    @classmethod
    def init(cls, rng: np.random.Generator, filters: int = 4, dense: int = 2,
             output: str = "tanh") -> "CNNModel":
        F, D = filters, dense
        return cls(rng.uniform(-0.5, 0.5, (F, 2, 2)), np.zeros(F),
                   rng.uniform(-0.5, 0.5, (F, D)), np.zeros(D),
                   rng.uniform(-0.5, 0.5, D), 0.0, output)

    def to_json(self) -> str:
        doc = {"filters": self.filters, "dense": self.dense, "output": self.output,
               "weights": self.to_vector().tolist()}
        return json.dumps(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CNNModel":
        doc = json.loads(text)
        return cls.from_vector(doc["weights"], doc["filters"], doc["dense"], doc["output"])


def _as_batch(images) -> np.ndarray:
    x = np.asarray(images, dtype=float)
    if x.shape[-2:] == (2, 2):
        x = x.reshape(*x.shape[:-2], 4)
    if x.shape[-1] != 4:
        raise ConfigurationError(f"CNN input must be 2x2 (or 4 features), got {x.shape}")
    return np.atleast_2d(x)


def _activate(o, output):
    if output == "sigmoid":
        return 1.0 / (1.0 + np.exp(-o))
    return np.tanh(o)


def forward_cache(model: CNNModel, images):
    x = _as_batch(images)
    conv = x @ model.conv_w.reshape(model.filters, 4).T + model.conv_b  # (B, F)
    a1 = np.maximum(conv, 0.0)
    pooled = a1  # 1x1 max-pool window
    flat = pooled.reshape(len(x), -1)
    z2 = flat @ model.w1 + model.b1
    a2 = np.maximum(z2, 0.0)
    o = a2 @ model.w2 + model.b2
    pred = _activate(o, model.output)
    return pred, (x, conv, flat, z2, a2, pred)


def forward(model: CNNModel, images) -> np.ndarray:
    """Predictions for a batch of 2x2 images (or a single one)."""
    return forward_cache(model, images)[0]


def backward(model: CNNModel, cache, dpred: np.ndarray) -> np.ndarray:
    """Weight gradient (flat, ``to_vector`` order) given dLoss/dprediction per sample."""
    x, conv, flat, z2, a2, pred = cache
    if model.output == "sigmoid":
        do = dpred * pred * (1.0 - pred)
    else:
        do = dpred * (1.0 - pred**2)
    g_w2 = a2.T @ do
    g_b2 = do.sum()
    dz2 = np.outer(do, model.w2) * (z2 > 0)
    g_w1 = flat.T @ dz2
    g_b1 = dz2.sum(axis=0)
    dconv = (dz2 @ model.w1.T) * (conv > 0)
    g_cw = dconv.T @ x
    g_cb = dconv.sum(axis=0)
    return np.concatenate([g_cw.ravel(), g_cb, g_w1.ravel(), g_b1, g_w2, [g_b2]])
