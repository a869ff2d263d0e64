import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetqcnn import learn
from jetqcnn.circuits import ConvKind, EncodingKind, build_qcnn, forward
from jetqcnn.errors import ConfigurationError, InputError, ShapeError
from jetqcnn.losses import LossKind, accuracy, loss, loss_grad, parse_loss
from jetqcnn.toydata import separable_blobs

# ------------------------------------------------------------------- losses


@pytest.mark.parametrize("kind, y, pred, expected", [
    ("M", [1, -1, 1], [1, -1, 1], 0.0),
    ("H", [1], [0.0], 1.0),
    ("H", [1], [1.0], 0.0),
    ("C", [1], [0.5], np.log(2)),
    ("M", [1, -1], [0.5, 0.5], (0.25 + 2.25) / 2),
])
def test_loss_values(kind, y, pred, expected):
    assert loss(kind, y, pred) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind, y, pred", [
    ("M", [0, 1], [0.1, 0.2]),  # MSE wants signed labels
    ("C", [-1], [0.5]),
    ("C", [1], [1.5]),
    ("H", [1, 1], [0.1]),
])
def test_loss_domain_errors(kind, y, pred):
    with pytest.raises(InputError):
        loss(kind, y, pred)


def test_unknown_loss_name():
    with pytest.raises(ConfigurationError):
        parse_loss("huber")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["H", "M", "C"]))
def test_loss_grad_matches_finite_differences(seed, kind):
    rng = np.random.default_rng(seed)
    n = 7
    if kind == "C":
        y = rng.integers(0, 2, n).astype(float)
        pred = rng.uniform(0.05, 0.95, n)
    else:
        y = rng.choice([-1.0, 1.0], n)
        pred = rng.uniform(-0.95, 0.95, n)
    g = loss_grad(kind, y, pred)
    h = 1e-6
    for i in range(n):
        p, m = pred.copy(), pred.copy()
        p[i] += h
        m[i] -= h
        assert g[i] == pytest.approx((loss(kind, y, p) - loss(kind, y, m)) / (2 * h), abs=1e-7)


def test_hinge_gradient_vanishes_beyond_margin():
    np.testing.assert_array_equal(loss_grad("H", [1, -1], [1.0, -1.0]), 0.0)


@pytest.mark.parametrize("y, pred, kind, expected", [
    ([1, -1], [0.3, -0.2], "M", 1.0),
    ([1] * 50 + [-1] * 50, [1.0] * 100, "H", 0.5),
    ([1], [0.0], "H", 0.0),  # a zero prediction counts as wrong
    ([1, 0], [0.7, 0.5], "C", 1.0),
])
def test_accuracy(y, pred, kind, expected):
    assert accuracy(y, pred, kind) == expected


def test_accuracy_empty():
    with pytest.raises(InputError):
        accuracy([], [], "M")


# --------------------------------------------------------------------- Adam

@pytest.mark.parametrize("g", [50.0, -50.0, 1e3])
def test_adam_first_step_has_size_lr(g):
    # the step is lr * |g| / (|g| + eps): off from lr by lr * eps / |g|
    state = learn.AdamState.zeros(1)
    _, theta = learn.adam_step(state, np.array([2.0]), np.array([g]), 0.001)
    assert abs(abs(theta[0] - 2.0) - 0.001) < 1e-12


def test_adam_zero_gradient_keeps_theta():
    state = learn.AdamState.zeros(3)
    theta = np.array([1.0, -2.0, 0.5])
    for _ in range(10):
        state, new = learn.adam_step(state, theta, np.zeros(3), 0.1)
        np.testing.assert_array_equal(new, theta)


def test_adam_minimizes_parabola():
    state = learn.AdamState.zeros(1)
    theta = np.array([1.0])
    for _ in range(200):
        state, theta = learn.adam_step(state, theta, 2 * theta, 0.1)
    assert abs(theta[0]) < 1e-2


def _scalar_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return theta


def test_adam_matches_scalar_reference():
    grads = np.random.default_rng(0).normal(size=(25, 3))
    state = learn.AdamState.zeros(3)
    theta = np.zeros(3)
    for g in grads:
        state, theta = learn.adam_step(state, theta, g, 0.05)
    ref = [_scalar_adam(0.0, grads[:, i], 0.05) for i in range(3)]
    np.testing.assert_allclose(theta, ref, atol=1e-14)


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        learn.adam_step(learn.AdamState.zeros(2), np.zeros(3), np.zeros(3), 0.1)


# ------------------------------------------------- parameter-shift gradient

def fd_loss_grad(spec, theta, X, y, kind, h=1e-5):
    kind = parse_loss(kind)

    def f(t):
        yhat = np.array([forward(spec, t, x) for x in X])
        pred = (1 + yhat) / 2 if kind is LossKind.CROSS_ENTROPY else yhat
        return loss(kind, y, pred)

    g = np.zeros(spec.param_count)
    for k in range(spec.param_count):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        g[k] = (f(tp) - f(tm)) / (2 * h)
    return g


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), conv=st.sampled_from(list(ConvKind)),
       enc=st.sampled_from(list(EncodingKind)), kind=st.sampled_from(["M", "H", "C"]))
def test_parameter_shift_matches_finite_differences(seed, conv, enc, kind):
    rng = np.random.default_rng(seed)
    spec = build_qcnn(conv, enc)
    theta = rng.uniform(0, 2 * np.pi, spec.param_count)
    X = rng.uniform(0, np.pi, (4, 4))
    y01 = rng.integers(0, 2, 4)
    y = y01.astype(float) if kind == "C" else 2.0 * y01 - 1
    exact = learn.qcnn_gradient(spec, theta, X, y, kind)
    approx = fd_loss_grad(spec, theta, X, y, kind)
    assert np.abs(exact - approx).max() / max(np.abs(approx).max(), 1e-12) < 1e-5


def test_frozen_slots_absent_from_gradient():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.HEE1).freeze({0: 0.1, 5: 0.2})
    rng = np.random.default_rng(1)
    g = learn.qcnn_gradient(spec, rng.uniform(0, 6, 28), rng.uniform(0, 3, (3, 4)),
                            np.array([1.0, -1.0, 1.0]), "M")
    assert g.shape == (28,)


def test_hinge_margin_gives_zero_qcnn_gradient():
    # |yhat| <= 1, so the margin is met only at yhat = y = +-1; theta = 0 with
    # zero inputs leaves the measured qubit in |0>
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE)
    theta = np.zeros(30)
    X = np.zeros((3, 4))
    assert forward(spec, theta, X[0]) == pytest.approx(1.0, abs=1e-15)
    g = learn.qcnn_gradient(spec, theta, X, np.ones(3), "H")
    np.testing.assert_array_equal(g, 0.0)


# ----------------------------------------------------------------- training

@pytest.fixture(scope="module")
def small_blobs():
    return separable_blobs(200, 6.0, seed=3)


def test_training_is_deterministic(small_blobs):
    cfg = learn.TrainConfig(epochs=2, batch_size=16, seed=5)
    model = learn.ModelDescriptor("qcnn", "SO4", "HEE1").build()
    a = learn.train(model, small_blobs, cfg, clock=lambda: 0.0)
    b = learn.train(model, small_blobs, cfg, clock=lambda: 0.0)
    assert a.to_csv() == b.to_csv()
    assert a.meta_json() == b.meta_json()


def test_zero_epochs_has_only_initial_row(small_blobs):
    log = learn.train(learn.CNNClassifier(), small_blobs, learn.TrainConfig(epochs=0))
    assert [r.epoch for r in log.records] == [0]
    assert log.to_csv().splitlines()[0] == ",".join(learn.RUNLOG_HEADER)


def test_training_improves_cnn(small_blobs):
    cfg = learn.TrainConfig(epochs=20, batch_size=16, learning_rate=0.01, seed=1)
    log = learn.train(learn.CNNClassifier(4, 5), small_blobs, cfg, clock=lambda: 0.0)
    assert log.final.train_loss < log.records[0].train_loss
    assert log.final.test_acc >= 0.9


def test_feature_mismatch_rejected(small_blobs):
    data = learn.Dataset(small_blobs.X_train[:, :3], small_blobs.y_train,
                         small_blobs.X_test[:, :3], small_blobs.y_test)
    with pytest.raises(ConfigurationError):
        learn.train(learn.CNNClassifier(), data, learn.TrainConfig(epochs=1))


@pytest.mark.parametrize("kwargs", [dict(epochs=-1), dict(batch_size=0), dict(runs=0),
                                    dict(learning_rate=0.0), dict(loss="nope")])
def test_bad_train_config(kwargs):
    with pytest.raises(ConfigurationError):
        learn.TrainConfig(**kwargs)


def test_runlog_csv_round_trip(small_blobs):
    log = learn.train(learn.CNNClassifier(), small_blobs, learn.TrainConfig(epochs=2),
                      clock=lambda: 0.0)
    rows = learn.read_runlog_csv(log.to_csv())
    assert len(rows) == 3
    assert float(rows[-1]["test_acc"]) == log.final.test_acc


# --------------------------------------------------------------------- grid

@pytest.mark.parametrize("values, mean, se", [([0.9, 1.0], 0.95, 0.05), ([0.7], 0.7, 0.0)])
def test_aggregate(values, mean, se):
    m, s = learn.aggregate(values)
    assert m == pytest.approx(mean) and s == pytest.approx(se)


def test_table1_cells():
    cells = learn.table1_cells()
    qcnn = [(d.conv, d.encoding, c.loss, c.batch_size) for d, c in cells if d.kind == "qcnn"]
    assert len(qcnn) == 24 == len(set(qcnn))
    assert {b for *_, b in qcnn} == {32}
    cnn = [(d.dense, c.loss) for d, c in cells if d.kind == "cnn"]
    assert len(cnn) == 6


def test_table2_cells_cover_batches():
    cells = learn.table2_cells()
    assert {c.batch_size for _, c in cells} == {16, 32, 64, 128}
    assert len(cells) == 2 * 3 * 4 * 2


def test_run_grid_single_run_has_zero_stderr(small_blobs):
    cells = [(learn.ModelDescriptor("cnn"), learn.TrainConfig(epochs=1, runs=1))]
    row = learn.run_grid(cells, small_blobs)[0]
    assert row.stderr == 0.0 and row.runs == 1
    assert learn.grid_csv([row]).splitlines()[0] == ",".join(learn.GRID_HEADER)


def test_parallel_runs_match_serial(small_blobs):
    desc = learn.ModelDescriptor("cnn", dense=5)
    cfg = learn.TrainConfig(epochs=2, runs=3)
    serial = learn.run_cell(desc, small_blobs, cfg, jobs=1)
    parallel = learn.run_cell(desc, small_blobs, cfg, jobs=3)
    assert [s.to_csv() for s in serial] == [p.to_csv() for p in parallel]
    assert len({s.to_csv() for s in serial}) == 3  # per-run seeds differ


def test_blobs_are_scaled_into_encoding_range():
    d = separable_blobs(400, 6.0, seed=0)
    assert d.X_train.min() == 0.0 and d.X_train.max() == pytest.approx(np.pi)
    assert len(d.y_train) == 320 and d.y_train.sum() == 160
