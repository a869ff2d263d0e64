import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetqcnn import dea
from jetqcnn.circuits import CircuitSpec, ConvKind, EncodingKind, build_qcnn, forward, rot, simulate
from jetqcnn.errors import ConfigurationError, PreconditionError


def one_qubit(*gates, params):
    return CircuitSpec(1, tuple(gates), params, 0)


def fd_column(spec, theta, x, k, h=1e-5):
    tp, tm = theta.copy(), theta.copy()
    tp[k] += h
    tm[k] -= h
    return (simulate(spec, tp, x).amplitudes - simulate(spec, tm, x).amplitudes) / (2 * h)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.9, -2.4])
def test_ry_column_closed_form(theta):
    spec = one_qubit(rot("Y", 0, "param", 0), params=1)
    col = dea.state_jacobian_column(spec, np.array([theta]), np.zeros(1), 0)
    np.testing.assert_allclose(col, [-np.sin(theta / 2) / 2, np.cos(theta / 2) / 2], atol=1e-15)


def test_rz_on_ground_state_column():
    spec = one_qubit(rot("Z", 0, "param", 0), params=1)
    theta = 0.8
    col = dea.state_jacobian_column(spec, np.array([theta]), np.zeros(1), 0)
    expected = np.array([np.exp(-0.5j * theta), 0]) * (1j / -2)
    np.testing.assert_allclose(col, expected, atol=1e-15)
    assert np.linalg.norm(col) == pytest.approx(0.5)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_columns_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    spec = build_qcnn(ConvKind.SU4, EncodingKind.HEE1)
    theta = rng.uniform(0, 2 * np.pi, spec.param_count)
    x = rng.uniform(0, np.pi, 4)
    for k in rng.choice(spec.param_count, 4, replace=False):
        exact = dea.state_jacobian_column(spec, theta, x, int(k))
        np.testing.assert_allclose(exact, fd_column(spec, theta, x, int(k)), atol=1e-8)


def test_frozen_slot_has_no_column():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE).freeze({3: 0.0})
    with pytest.raises(PreconditionError):
        dea.state_jacobian_column(spec, np.zeros(30), np.zeros(4), 3)


def test_real_jacobian_stacks_real_and_imaginary():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE)
    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 6, 30)
    x = rng.uniform(0, 3, 4)
    J = dea.real_jacobian(spec, theta, x)
    assert J.shape == (32, 30)
    col = dea.state_jacobian_column(spec, theta, x, 0)
    np.testing.assert_allclose(J[:16, 0], col.real)
    np.testing.assert_allclose(J[16:, 0], col.imag)


def test_s_matrix_orthonormal_columns_identity():
    q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(10, 4)))
    np.testing.assert_allclose(dea.s_matrix(q), np.eye(4), atol=1e-12)


def test_s_matrix_duplicate_column_singular():
    J = np.random.default_rng(2).normal(size=(12, 3))
    J = np.column_stack([J, J[:, 1]])
    assert abs(np.linalg.eigvalsh(dea.s_matrix(J))[0]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 12), cols=st.integers(1, 8))
def test_s_matrix_spectrum_is_squared_singular_values(seed, rows, cols):
    J = np.random.default_rng(seed).normal(size=(rows, cols))
    S = dea.s_matrix(J)
    np.testing.assert_array_equal(S, S.T)
    ev = np.sort(np.linalg.eigvalsh(S))
    sv = np.linalg.svd(J, compute_uv=False)
    sq = np.sort(np.concatenate([sv**2, np.zeros(cols - sv.size)]))
    np.testing.assert_allclose(ev, sq, atol=1e-10 * max(1.0, sq.max()))
    assert ev[0] >= -1e-12 * max(1.0, sq.max())


def test_two_z_rotations_one_redundant():
    spec = one_qubit(rot("Y", 0, "const", value=0.7), rot("Z", 0, "param", 0),
                     rot("Z", 0, "param", 1), params=2)
    report = dea.redundancy_scan(spec, dea.sample_points(spec, 5, 0))
    assert report.redundant.sum() == 1
    assert report.kept == [0]


@pytest.mark.parametrize("conv, kept", [(ConvKind.SU4, 31), (ConvKind.SO4, 25)])
def test_qcnn_redundancy_counts(conv, kept):
    spec = build_qcnn(conv, EncodingKind.HEE1)
    start = time.perf_counter()
    report = dea.redundancy_scan(spec, dea.sample_points(spec, 5, seed=0))
    assert time.perf_counter() - start < 60
    assert len(report.kept) == kept
    assert len(report.redundant_slots) == spec.param_count - kept
    assert report.unstable == []
    if conv is ConvKind.SU4:
        assert report.achieved_rank == dea.state_space_dim(4) == 31


def test_scan_errors():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE)
    with pytest.raises(ConfigurationError):
        dea.redundancy_scan(spec, [])
    with pytest.raises(ConfigurationError):
        dea.redundancy_scan(spec, dea.sample_points(spec, 1), tol=0.0)


def test_report_json_fields():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.HEE1)
    report = dea.redundancy_scan(spec, dea.sample_points(spec, 2, seed=4))
    doc = json.loads(report.to_json())
    assert doc["kept"] == report.kept
    assert doc["points"] == 2
    assert len(doc["kept"]) + len(doc["redundant"]) == 30


def test_prune_preserves_forward():
    spec = build_qcnn(ConvKind.SU4, EncodingKind.HEE1)
    points = dea.sample_points(spec, 5, seed=0)
    report = dea.redundancy_scan(spec, points)
    theta = points[0][0]
    pruned = dea.prune(spec, report, theta)
    assert pruned.n_trainable == 31
    kept = theta[pruned.trainable_slots]
    rng = np.random.default_rng(9)
    for x in rng.uniform(0, np.pi, (20, 4)):
        assert forward(pruned, kept, x) == pytest.approx(forward(spec, theta, x), abs=1e-12)


def test_prune_with_nothing_redundant_is_identity():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE)
    report = dea.RedundancyReport(np.zeros(30, dtype=bool), 30, [], 1e-10, 31)
    assert dea.prune(spec, report, np.zeros(30)) == spec


def test_prune_mismatch():
    spec = build_qcnn(ConvKind.SO4, EncodingKind.TPE)
    report = dea.RedundancyReport(np.zeros(48, dtype=bool), 30, [], 1e-10, 31)
    with pytest.raises(ConfigurationError):
        dea.prune(spec, report, np.zeros(30))
