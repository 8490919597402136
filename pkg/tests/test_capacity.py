import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from capax import (
    CapacityConfig,
    CPOperator,
    Method,
    NotSupported,
    SingularEvaluation,
    SingularMatrix,
    cap,
    cap0,
    cap_direct_pd,
    cap_unitary_search,
    cap_via_scaling,
    capacity_ratio,
    haar_unitary,
    identity_channel,
    report_to_dict,
    report_to_json,
    scaling_step,
    trace_channel,
)
from capax.capacity import ScalingState, _marginal_residuals
from conftest import make_op


def test_cap0_identity_is_one():
    report = cap0(identity_channel(3))
    assert abs(report.value - 1.0) <= 1e-10
    assert report.witness is not None
    assert_allclose(report.witness["x"], np.eye(3), atol=1e-9)


def test_cap0_trace_channel():
    report = cap0(trace_channel(2, 2))
    assert abs(report.value - 2.0) <= 1e-10
    assert report.method is Method.PSI_UNITARY


def test_cap0_single_kraus_diagonal():
    t = CPOperator((np.diag([1.0, 2.0]).astype(complex),))
    assert abs(cap0(t).value - 2.0) <= 1e-10


def test_cap0_witness_reproduces_value():
    report = cap0(trace_channel(2, 2))
    ratio = capacity_ratio(trace_channel(2, 2), report.witness["x"])
    assert abs(ratio - report.value) <= 1e-9


def test_direct_identity_and_diagonal():
    assert abs(cap_direct_pd(identity_channel(2)).value - 1.0) <= 1e-8
    t = CPOperator((np.diag([1.0, 2.0]).astype(complex),))
    assert abs(cap_direct_pd(t).value - 2.0) <= 1e-6


def test_direct_degenerate_rank_one():
    """A Kraus map whose image is rank deficient has capacity zero."""
    t = CPOperator((np.diag([1.0, 0.0]).astype(complex),))
    report = cap_direct_pd(t)
    assert report.value == 0.0
    assert "Degenerate" in report.flags


def test_direct_witness_reproduces_value():
    t = make_op(3, 3, 2, seed=7)
    report = cap_direct_pd(t)
    ratio = capacity_ratio(t, report.witness["x"])
    assert abs(ratio - report.value) <= 1e-8 * max(report.value, 1.0)


def test_scaling_identity_converges_immediately():
    report = cap_via_scaling(identity_channel(3))
    assert report.iterations == 0
    assert abs(report.value - 1.0) <= 1e-12


def test_scaling_single_unitary_kraus(rng):
    u = haar_unitary(3, rng)
    report = cap_via_scaling(CPOperator((u,)))
    assert abs(report.value - 1.0) <= 1e-10


def test_scaling_agrees_with_direct():
    for seed in (1, 2, 3):
        t = make_op(3, 3, 2, seed=seed)
        direct = cap_direct_pd(t).value
        scaled = cap_via_scaling(t)
        assert "NoConvergence" not in scaled.flags
        assert abs(scaled.value - direct) <= 1e-6 * max(direct, 1.0)


def test_scaling_witness_is_exact():
    """value equals the capacity ratio at the scaling witness by construction."""
    t = make_op(2, 2, 3, seed=4)
    report = cap_via_scaling(t)
    ratio = capacity_ratio(t, report.witness["x"])
    assert abs(ratio - report.value) <= 1e-10 * max(report.value, 1.0)


def test_scaling_requires_square():
    with pytest.raises(NotSupported):
        cap_via_scaling(make_op(2, 3, 2, seed=5))


def test_scaling_step_reduces_residual():
    t = make_op(2, 2, 2, seed=6)
    r_row, r_col = _marginal_residuals(t)
    state = ScalingState(t, 0.0, 0, r_row, r_col, np.eye(2, dtype=complex))
    stepped = scaling_step(state, "row")
    assert stepped.row_residual <= 1e-10  # the row marginal is now exactly balanced
    assert stepped.step == 1


def test_unitary_search_matches_direct():
    t = make_op(2, 2, 2, seed=8)
    direct = cap_direct_pd(t).value
    searched = cap_unitary_search(t, restarts=4, seed=0)
    assert abs(searched.value - direct) <= 1e-5 * max(direct, 1.0)


def test_unitary_search_bounded_by_cap0():
    """The unitary search starts at the identity, so it never exceeds cap0."""
    for seed in (10, 11):
        t = make_op(2, 2, 2, seed=seed)
        assert cap_unitary_search(t, restarts=2).value <= cap0(t).value + 1e-8


def test_cap_facade_homogeneity():
    t = make_op(2, 2, 2, seed=12)
    base = cap(t).value
    for c in (0.5, 2.0, 10.0):
        scaled = cap(CPOperator(tuple(np.sqrt(c) * a for a in t.kraus))).value
        assert abs(scaled - c * base) <= 1e-8 * max(c * base, 1.0)


def test_cap_facade_cross_checks():
    t = make_op(2, 2, 2, seed=13)
    cfg = CapacityConfig(check_psi=True, check_scaling=True, restarts_unitary=3)
    report = cap(t, cfg)
    assert set(report.cross_checks) == {
        "psi_unitary",
        "psi_unitary_delta",
        "scaling",
        "scaling_delta",
    }
    assert report.cross_checks["psi_unitary_delta"] <= 1e-4 * max(report.value, 1.0)
    assert report.cross_checks["scaling_delta"] <= 1e-4 * max(report.value, 1.0)


def test_cap_invariant_under_conjugation(rng):
    t = make_op(2, 2, 2, seed=14)
    base = cap_direct_pd(t).value
    for _ in range(3):
        u = haar_unitary(2, rng)
        from capax import conjugate_unitary

        conj = cap_direct_pd(conjugate_unitary(t, u)).value
        assert abs(conj - base) <= 1e-6 * max(base, 1.0)


def test_diagonal_restriction_upper_bounds_cap():
    for seed in (15, 16, 17):
        t = make_op(2, 2, 2, seed=seed)
        assert cap_direct_pd(t).value <= cap0(t).value + 1e-8


def test_capacity_ratio_rejects_bad_input():
    t = trace_channel(2, 2)
    with pytest.raises(SingularMatrix):
        capacity_ratio(t, np.diag([1.0, -1.0]).astype(complex))
    with pytest.raises(SingularMatrix):
        capacity_ratio(t, np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex))
    rank_one = CPOperator((np.diag([1.0, 0.0]).astype(complex),))
    with pytest.raises(SingularEvaluation):
        capacity_ratio(rank_one, np.eye(2, dtype=complex))


def test_capacity_ratio_closed_form():
    t = identity_channel(2)
    x = np.diag([2.0, 8.0]).astype(complex)
    assert abs(capacity_ratio(t, x) - 1.0) <= 1e-12


def test_report_serialization():
    report = cap_direct_pd(make_op(2, 2, 2, seed=18))
    payload = report_to_dict(report)
    text = json.dumps(payload, sort_keys=True)
    assert json.loads(text)["method"] == "direct_pd"
    assert report_to_json(report) == text


def test_single_kraus_general_closed_form(rng):
    """One Kraus matrix A gives capacity |det A|^(2/n)."""
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a /= np.linalg.norm(a, 2)
    t = CPOperator((a,))
    expected = abs(np.linalg.det(a)) ** (2.0 / 3.0)
    assert abs(cap_direct_pd(t).value - expected) <= 1e-6 * expected
    assert abs(cap_via_scaling(t).value - expected) <= 1e-8 * expected
