"""Adam, mini-batch training and grid aggregation for QCNN and CNN models."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import cnn as cnn_mod
from .circuits import CircuitSpec, CompiledCircuit, build_qcnn, parse_conv, parse_encoding
from .errors import ConfigurationError, ShapeError
from .losses import LossKind, accuracy, labels_for, loss, loss_grad, parse_loss

BATCH_SIZES = (16, 32, 64, 128)
ENCODINGS = ("TPE", "HEE1", "HEE2", "CHE")
LOSSES = ("H", "M", "C")


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.001
    seed: int = 0
    loss: LossKind = LossKind.MSE
    runs: int = 10

    def __post_init__(self):
        object.__setattr__(self, "loss", parse_loss(self.loss))
        if self.epochs < 0 or self.batch_size < 1 or self.runs < 1 or not self.learning_rate > 0:
            raise ConfigurationError(f"invalid training config {self}")


@dataclass
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray  # stored as {0, 1}
    X_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_features(self) -> int:
        return self.X_train.shape[1]


# ------------------------------------------------------------------- models

class QCNNModel:
    """Trainable wrapper around a CircuitSpec (frozen slots stay fixed)."""

    kind = "qcnn"

    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        self.circuit = CompiledCircuit(spec)

    @property
    def n_params(self) -> int:
        return self.spec.n_trainable

    @property
    def n_features(self) -> int:
        return self.spec.num_qubits

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, self.n_params)

    def prepare(self, X) -> np.ndarray:
        return self.circuit.encode(X)

    def raw(self, params, prepared) -> np.ndarray:
        return self.circuit.expectations(params, prepared)

    def predict(self, params, prepared, kind: LossKind) -> np.ndarray:
        yhat = self.raw(params, prepared)
        return (1.0 + yhat) / 2.0 if kind is LossKind.CROSS_ENTROPY else yhat

    def loss_and_grad(self, params, prepared, y, kind: LossKind):
        pred = self.predict(params, prepared, kind)
        dpred = loss_grad(kind, y, pred)
        weights = dpred / 2.0 if kind is LossKind.CROSS_ENTROPY else dpred
        full = self.circuit.shift_gradient(params, prepared, weights)
        return loss(kind, y, pred), full[self.spec.trainable_slots]


class CNNClassifier:
    kind = "cnn"

    def __init__(self, filters: int = 4, dense: int = 2):
        self.filters = filters
        self.dense = dense

    @property
    def n_params(self) -> int:
        return cnn_mod.parameter_count(self.filters, self.dense)

    n_features = 4

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return cnn_mod.CNNModel.init(rng, self.filters, self.dense).to_vector()

    def prepare(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float)

    def model(self, params, kind: LossKind) -> cnn_mod.CNNModel:
        out = "sigmoid" if kind is LossKind.CROSS_ENTROPY else "tanh"
        return cnn_mod.CNNModel.from_vector(params, self.filters, self.dense, out)

    def predict(self, params, prepared, kind: LossKind) -> np.ndarray:
        return cnn_mod.forward(self.model(params, kind), prepared)

    def loss_and_grad(self, params, prepared, y, kind: LossKind):
        m = self.model(params, kind)
        pred, cache = cnn_mod.forward_cache(m, prepared)
        return loss(kind, y, pred), cnn_mod.backward(m, cache, loss_grad(kind, y, pred))


@dataclass(frozen=True)
class ModelDescriptor:
    """Picklable description of a model; ``circuit_text`` overrides conv/encoding."""

    kind: str = "qcnn"
    conv: str = "SO4"
    encoding: str = "HEE1"
    dense: int = 2
    filters: int = 4
    circuit_text: str | None = None
    name: str | None = None

    def build(self):
        if self.kind == "cnn":
            return CNNClassifier(self.filters, self.dense)
        if self.kind != "qcnn":
            raise ConfigurationError(f"unknown model kind {self.kind!r}; allowed: qcnn, cnn")
        if self.circuit_text is not None:
            return QCNNModel(CircuitSpec.from_text(self.circuit_text))
        return QCNNModel(build_qcnn(parse_conv(self.conv), parse_encoding(self.encoding)))

    @property
    def circuit_label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "cnn":
            return f"CNN{cnn_mod.parameter_count(self.filters, self.dense)}"
        return parse_conv(self.conv).value

    @property
    def encoding_label(self) -> str:
        return "-" if self.kind == "cnn" else parse_encoding(self.encoding).value


def qcnn_gradient(spec: CircuitSpec, theta, X, y, kind) -> np.ndarray:
    """Batch-mean loss gradient over the trainable slots of ``spec``.

    ``y`` holds labels in the loss's own domain ({-1, 1} or {0, 1}).
    """
    model = QCNNModel(spec)
    kind = parse_loss(kind)
    theta = np.asarray(theta, dtype=float)
    if theta.shape == (spec.param_count,) and spec.n_trainable != spec.param_count:
        theta = theta[spec.trainable_slots]
    return model.loss_and_grad(theta, model.prepare(X), np.asarray(y, dtype=float), kind)[1]


# --------------------------------------------------------------------- Adam

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(state: AdamState, theta, grad, lr: float) -> tuple[AdamState, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape or grad.shape != state.m.shape:
        raise ShapeError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_theta


# ----------------------------------------------------------------- training

RUNLOG_HEADER = ["epoch", "train_loss", "train_acc", "test_loss", "test_acc", "wall_seconds"]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float
    wall_seconds: float


@dataclass
class RunLog:
    records: list[EpochRecord]
    config: TrainConfig
    final_params: np.ndarray
    n_params: int
    model: str = ""

    @property
    def final(self) -> EpochRecord:
        return self.records[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RUNLOG_HEADER)
        for r in self.records:
            w.writerow([r.epoch] + [_fmt(getattr(r, k)) for k in RUNLOG_HEADER[1:]])
        return buf.getvalue()

    def meta_json(self) -> str:
        cfg = asdict(self.config)
        cfg["loss"] = self.config.loss.value
        doc = {"model": self.model, "n_params": self.n_params, "config": cfg,
               "final_params": [float(v) for v in self.final_params]}
        return json.dumps(doc, indent=1) + "\n"


def _fmt(v: float) -> str:
    return "nan" if v != v else f"{v:.17g}"


def read_runlog_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and list(rows[0]) != RUNLOG_HEADER:
        raise ConfigurationError("not a run log CSV")
    return rows


def _evaluate(model, params, prepared, y01, kind):
    if len(y01) == 0:
        return float("nan"), float("nan")
    y = labels_for(kind, y01)
    pred = model.predict(params, prepared, kind)
    return loss(kind, y, pred), accuracy(y, pred, kind)


def train(model, data: Dataset, cfg: TrainConfig, clock=time.perf_counter, init=None) -> RunLog:
    """Seeded mini-batch Adam training; one record per epoch plus the initial one.

    The last, possibly smaller, batch of each epoch is used. ``clock`` feeds
    the wall_seconds column (pass ``lambda: 0.0`` for reproducible logs).
    """
    if data.X_train.shape[0] == 0:
        raise ConfigurationError("empty training set")
    if data.X_train.shape[1] != model.n_features:
        raise ConfigurationError(
            f"model expects {model.n_features} features, data has {data.X_train.shape[1]}")
    if data.X_test.size and data.X_test.shape[1] != model.n_features:
        raise ConfigurationError("test features do not match the model")
    kind = cfg.loss
    rng = np.random.default_rng(cfg.seed)
    params = model.init_params(rng) if init is None else np.array(init, dtype=float)
    tr = model.prepare(data.X_train)
    te = model.prepare(data.X_test) if data.X_test.size else data.X_test
    y_tr = labels_for(kind, data.y_train)
    start = clock()

    def record(epoch):
        trl, tra = _evaluate(model, params, tr, data.y_train, kind)
        tel, tea = _evaluate(model, params, te, data.y_test, kind)
        return EpochRecord(epoch, trl, tra, tel, tea, clock() - start)

    records = [record(0)]
    state = AdamState.zeros(params.size)
    n = len(y_tr)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            _, grad = model.loss_and_grad(params, tr[idx], y_tr[idx], kind)
            state, params = adam_step(state, params, grad, cfg.learning_rate)
        records.append(record(epoch))
    return RunLog(records, cfg, params, model.n_params, getattr(model, "kind", ""))


# --------------------------------------------------------------------- grid

def derive_seed(seed: int, run: int) -> int:
    return int(np.random.SeedSequence([seed, run]).generate_state(1)[0])


def aggregate(values) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n); 0 for a single value)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ConfigurationError("nothing to aggregate")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


GRID_HEADER = ["circuit", "loss", "encoding", "batch", "runs", "mean_acc", "stderr"]


@dataclass
class GridRow:
    circuit: str
    loss: str
    encoding: str
    batch: int
    runs: int
    mean_acc: float
    stderr: float
    logs: list = field(default_factory=list, repr=False)


def grid_csv(rows: list[GridRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_HEADER)
    for r in rows:
        w.writerow([r.circuit, r.loss, r.encoding, r.batch, r.runs, _fmt(r.mean_acc), _fmt(r.stderr)])
    return buf.getvalue()


def _run_one(args):
    desc, data, cfg, timed = args
    clock = time.perf_counter if timed else (lambda: 0.0)
    return train(desc.build(), data, cfg, clock=clock)


def run_cell(desc: ModelDescriptor, data: Dataset, cfg: TrainConfig, jobs: int = 1,
             timed: bool = False) -> list[RunLog]:
    work = [(desc, data, replace(cfg, seed=derive_seed(cfg.seed, r)), timed) for r in range(cfg.runs)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(min(jobs, len(work))) as pool:
            return list(pool.map(_run_one, work))
    return [_run_one(w) for w in work]


def run_grid(cells, data: Dataset, runs: int | None = None, jobs: int = 1,
             timed: bool = False) -> list[GridRow]:
    """Train every (ModelDescriptor, TrainConfig) cell ``runs`` times and
    aggregate the final-epoch test accuracy."""
    rows = []
    for desc, cfg in cells:
        if runs is not None:
            cfg = replace(cfg, runs=runs)
        logs = run_cell(desc, data, cfg, jobs, timed)
        mean, se = aggregate([log.final.test_acc for log in logs])
        rows.append(GridRow(desc.circuit_label, cfg.loss.value, desc.encoding_label,
                            cfg.batch_size, cfg.runs, mean, se, logs))
    return rows


def table1_cells(base: TrainConfig = TrainConfig()) -> list[tuple[ModelDescriptor, TrainConfig]]:
    """Encodings x losses at batch 32 for both circuits, plus the matched CNN rows."""
    cells = []
    for conv, dense in (("SO4", 2), ("SU4", 5)):
        for lk in LOSSES:
            cfg = replace(base, loss=lk, batch_size=32)
            for enc in ENCODINGS:
                cells.append((ModelDescriptor("qcnn", conv, enc), cfg))
            cells.append((ModelDescriptor("cnn", dense=dense), cfg))
    return cells


def table2_cells(base: TrainConfig = TrainConfig()) -> list[tuple[ModelDescriptor, TrainConfig]]:
    cells = []
    for conv, dense in (("SO4", 2), ("SU4", 5)):
        for lk in LOSSES:
            for b in BATCH_SIZES:
                cfg = replace(base, loss=lk, batch_size=b)
                cells.append((ModelDescriptor("qcnn", conv, "HEE1"), cfg))
                cells.append((ModelDescriptor("cnn", dense=dense), cfg))
    return cells
