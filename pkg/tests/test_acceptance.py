"""End-to-end acceptance checks.

Each test covers one acceptance criterion and prints a visible one-line
PASS/FAIL verdict (straight to the real stdout so the log always shows it),
then asserts. The shared corpus is regenerated deterministically from fixed
seeds; instances keep m <= n*K so the determinant polynomial is not
identically zero and relative tolerances stay meaningful.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import minimize as scipy_minimize

from capax import (
    CapacityConfig,
    CompactFamily,
    CPOperator,
    ExpSumProblem,
    HullTag,
    apply,
    cap_direct_pd,
    cap_unitary_search,
    cap_via_scaling,
    classify_hull,
    conjugate_unitary,
    d_cauchy_binet,
    d_interpolate,
    d_leibniz,
    diag_problem,
    entropy_dual,
    evaluate_poly,
    haar_unitary,
    identity_channel,
    near_minimizer,
    phi_eval,
    psi_minimize,
    random_cp,
    random_direction,
    run_probe,
    scaling_direction,
    semicontinuity_bound,
    trace_channel,
)


_CAPSYS = None


@pytest.fixture(autouse=True)
def _capture_handle(capsys):
    # pytest captures at the file descriptor level, so even sys.__stdout__
    # writes get swallowed; disabling capture around the verdict line keeps
    # it visible in the plain `pytest -v` log.
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}: {detail}"
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line, file=sys.__stdout__, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def _make_corpus(count: int = 200):
    ops = []
    for i in range(count):
        rng = np.random.default_rng(5000 + i)
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        k_min = math.ceil(m / n)
        k = int(rng.integers(k_min, 5))
        ops.append(random_cp(n, m, k, scale=1.0 / np.sqrt(n * k), rng=rng))
    return ops


@pytest.fixture(scope="module")
def corpus():
    return _make_corpus()


_COEFF_CACHE: dict = {}


def _coeff_triple(i: int, t: CPOperator):
    if i not in _COEFF_CACHE:
        _COEFF_CACHE[i] = (d_leibniz(t), d_cauchy_binet(t), d_interpolate(t))
    return _COEFF_CACHE[i]


def test_criterion_01_three_route_agreement(corpus):
    """All three coefficient routes agree entrywise on the corpus."""
    start = time.perf_counter()
    worst = 0.0
    for i, t in enumerate(corpus):
        ref, cb, fit = _coeff_triple(i, t)
        for other in (cb.values, fit.values):
            gaps = np.abs(ref.values - other)
            bounds = 1e-12 + 1e-9 * np.maximum(np.abs(ref.values), np.abs(other))
            worst = max(worst, float((gaps / bounds).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1.0 and elapsed <= 60.0
    _report(
        1,
        ok,
        f"{len(corpus)} operators, worst gap at {worst:.3f} of tolerance, "
        f"{elapsed:.1f}s (limit 60s)",
    )


def test_criterion_02_nonnegativity(corpus):
    """Leibniz coefficients are nonnegative up to roundoff; the squared-
    minor route is nonnegative exactly."""
    worst_leibniz = 0.0
    worst_cb = 0.0
    for i, t in enumerate(corpus):
        ref, cb, _ = _coeff_triple(i, t)
        worst_leibniz = min(worst_leibniz, float(ref.values.min()))
        worst_cb = min(worst_cb, float(cb.values.min()))
    ok = worst_leibniz >= -1e-10 and worst_cb >= 0.0
    _report(
        2,
        ok,
        f"min leibniz coefficient {worst_leibniz:.2e} (floor -1e-10), "
        f"min squared-minor coefficient {worst_cb:.2e} (floor 0)",
    )


def test_criterion_03_polynomial_identity(corpus):
    """The extracted polynomial reproduces det(T(diag(lam))) pointwise."""
    worst = 0.0
    for i, t in enumerate(corpus):
        ref, _, _ = _coeff_triple(i, t)
        rng = np.random.default_rng(9000 + i)
        jarr = np.array(ref.indices, dtype=float)
        for _ in range(20):
            lam = np.exp(rng.uniform(-1.0, 1.0, size=t.n))
            value = evaluate_poly(ref, lam)
            direct = np.linalg.det(apply(t, np.diag(lam).astype(complex))).real
            s_abs = float(np.abs(ref.values) @ np.prod(lam**jarr, axis=1))
            bound = 1e-9 * max(s_abs, abs(direct), abs(value))
            worst = max(worst, abs(value - direct) / bound)
    ok = worst <= 1.0
    _report(3, ok, f"20 evaluations per operator, worst at {worst:.3f} of tolerance")


def _oracle_psi(prob: ExpSumProblem) -> float:
    """Independent derivative-free check value for Psi: simplex search on
    Phi from a grid of starts."""
    starts = [np.zeros(prob.dim)]
    for i in range(prob.dim):
        e = np.zeros(prob.dim)
        e[i] = 0.7
        starts.extend([e, -e])
    best = np.inf
    for y0 in starts:
        res = scipy_minimize(
            lambda y: phi_eval(prob, y),
            y0,
            method="Nelder-Mead",
            options={"maxiter": 5000, "fatol": 1e-14, "xatol": 1e-10},
        )
        best = min(best, float(res.fun))
    return best


def test_criterion_04_psi_against_independent_search():
    """The Newton route matches a derivative-free simplex oracle."""
    count = 0
    worst = 0.0
    seed = 0
    start = time.perf_counter()
    while count < 50:
        seed += 1
        rng = np.random.default_rng(3000 + seed)
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 4))
        k = int(rng.integers(math.ceil(m / n), 4))
        t = random_cp(n, m, k, scale=1.0 / np.sqrt(n * k), rng=rng)
        prob = diag_problem(t)
        if classify_hull(prob).tag is not HullTag.INTERIOR_ZERO:
            continue
        ours = psi_minimize(prob).value
        oracle = _oracle_psi(prob)
        worst = max(worst, abs(ours - oracle) / max(oracle, 1e-30))
        count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6
    _report(
        4,
        ok,
        f"50 interior problems, worst relative gap to simplex oracle "
        f"{worst:.2e} (tol 1e-6), {elapsed:.1f}s",
    )


def test_criterion_05_closed_forms():
    checks = []

    for n in (2, 3):
        v = cap_direct_pd(identity_channel(n)).value
        checks.append(("identity", abs(v - 1.0), 1e-8))

    tr = trace_channel(2, 2)
    checks.append(("trace direct", abs(cap_direct_pd(tr).value - 2.0), 1e-6))
    checks.append(("trace scaling", abs(cap_via_scaling(tr).value - 2.0), 1e-6))
    checks.append(
        ("trace psi", abs(cap_unitary_search(tr, restarts=2).value - 2.0), 1e-6)
    )

    diag = CPOperator((np.diag([1.0, 2.0]).astype(complex),))
    checks.append(("single diag kraus", abs(cap_direct_pd(diag).value - 2.0), 1e-6))

    rng = np.random.default_rng(404)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a /= np.linalg.norm(a, 2)
    expected = abs(np.linalg.det(a)) ** (2.0 / 3.0)
    got = cap_direct_pd(CPOperator((a,))).value
    checks.append(("single kraus det power", abs(got - expected) / expected, 1e-6))

    t = random_cp(2, 2, 2, scale=0.5, rng=11)
    base = cap_direct_pd(t).value
    for c in (0.5, 2.0, 10.0):
        scaled = cap_direct_pd(CPOperator(tuple(np.sqrt(c) * k for k in t.kraus))).value
        checks.append((f"homogeneity c={c}", abs(scaled - c * base) / (c * base), 1e-8))

    failures = [name for name, gap, tol in checks if gap > tol]
    worst = max(gap / tol for _, gap, tol in checks)
    _report(
        5,
        not failures,
        f"{len(checks)} closed-form checks, worst at {worst:.3f} of tolerance"
        + (f", failing: {failures}" if failures else ""),
    )


def test_criterion_06_route_agreement():
    """Direct descent, unitary search, and marginal scaling agree on
    random square operators."""
    start = time.perf_counter()
    worst_psi = 0.0
    worst_scaling = 0.0
    for i in range(30):
        rng = np.random.default_rng(7000 + i)
        n = 2 if i % 2 == 0 else 3
        k = int(rng.integers(2, 4))
        t = random_cp(n, n, k, scale=1.0 / np.sqrt(n * k), rng=rng)
        direct = cap_direct_pd(t).value
        psi = cap_unitary_search(t, restarts=4, seed=0).value
        scaled = cap_via_scaling(t).value
        worst_psi = max(worst_psi, abs(psi - direct) / max(direct, 1e-30))
        worst_scaling = max(worst_scaling, abs(scaled - direct) / max(direct, 1e-30))
    elapsed = time.perf_counter() - start
    ok = worst_psi <= 1e-4 and worst_scaling <= 1e-3 and elapsed <= 300.0
    _report(
        6,
        ok,
        f"30 square operators: direct vs unitary-search {worst_psi:.2e} "
        f"(tol 1e-4), direct vs scaling {worst_scaling:.2e} (tol 1e-3), "
        f"{elapsed:.1f}s (limit 300s)",
    )


def test_criterion_07_unitary_invariance():
    """Capacity is invariant under unitary conjugation of the input."""
    worst = 0.0
    for i in range(20):
        rng = np.random.default_rng(8000 + i)
        k = int(rng.integers(1, 4))
        t = random_cp(2, 2, k, scale=1.0 / np.sqrt(2 * k), rng=rng)
        base = cap_direct_pd(t).value
        if base <= 1e-12:
            continue
        for _ in range(10):
            u = haar_unitary(2, rng)
            conj = cap_direct_pd(conjugate_unitary(t, u)).value
            worst = max(worst, abs(conj - base) / base)
    ok = worst <= 1e-6
    _report(7, ok, f"20 operators x 10 conjugations, worst relative drift {worst:.2e} (tol 1e-6)")


def test_criterion_08_entropy_duality():
    """The maximum-entropy value closes the gap against log Psi, and the
    trace channel recovers its exact optimizer."""
    worst_gap = 0.0
    count = 0
    seed = 0
    while count < 50:
        seed += 1
        rng = np.random.default_rng(1500 + seed)
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 4))
        k = int(rng.integers(math.ceil(m / n), 4))
        t = random_cp(n, m, k, scale=1.0 / np.sqrt(n * k), rng=rng)
        prob = diag_problem(t)
        if classify_hull(prob).tag is not HullTag.INTERIOR_ZERO:
            continue
        p, value = entropy_dual(prob, np.zeros(prob.dim))
        dual = math.log(psi_minimize(prob, tol=1e-11).value)
        worst_gap = max(worst_gap, abs(value - dual))
        count += 1

    trace_prob = diag_problem(trace_channel(2, 2))
    p, value = entropy_dual(trace_prob, np.zeros(2))
    p_gap = float(np.abs(p - np.array([0.25, 0.5, 0.25])).max())
    v_gap = abs(value - math.log(4.0))
    ok = worst_gap <= 1e-6 and p_gap <= 1e-9 and v_gap <= 1e-10
    _report(
        8,
        ok,
        f"50 problems, worst duality gap {worst_gap:.2e} (tol 1e-6); trace "
        f"optimizer off by {p_gap:.2e} (tol 1e-9), value off by {v_gap:.2e} (tol 1e-10)",
    )


def test_criterion_09_semicontinuity():
    """The lower bound (1 - delta/delta0) Psi holds for every sampled
    perturbation of every base problem."""
    bases = []
    seed = 0
    while len(bases) < 20:
        seed += 1
        rng = np.random.default_rng(2500 + seed)
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 4))
        k = int(rng.integers(math.ceil(m / n), 4))
        t = random_cp(n, m, k, scale=1.0 / np.sqrt(n * k), rng=rng)
        prob = diag_problem(t)
        positive = prob.d[prob.d > 0]
        if positive.size == 0 or positive.min() < 1e-6:
            continue
        bases.append(prob)

    total = passed = 0
    for b, prob in enumerate(bases):
        delta0 = float(prob.d[prob.d > 0].min())
        delta = 0.4 * delta0
        rng = np.random.default_rng(4500 + b)
        for _ in range(25):
            shift = rng.uniform(-1.0, 1.0, size=prob.d.shape) * (0.9 * delta)
            d_new = np.maximum(prob.d + shift, 0.0)
            ok, _ = semicontinuity_bound(prob, d_new, delta)
            total += 1
            passed += int(ok)
    ok = passed == total
    _report(9, ok, f"{passed}/{total} perturbation checks hold (need all)")


def test_criterion_10_probe_family():
    """Random nearby perturbations show a clean power law, and the scaling
    direction shows exponent one."""
    family = CompactFamily(2, 2, 2, radius=2.0, seed=42)
    root = np.random.SeedSequence(6200)
    fitted = 0
    good = 0
    decay_ok = True
    runs = 10
    start = time.perf_counter()
    for child in root.spawn(runs):
        rng = np.random.default_rng(child)
        base = family.sample(rng)
        run = run_probe(base, random_direction(base, rng))
        if run.fitted_alpha is None:
            continue
        fitted += 1
        if run.fitted_alpha >= 0.05 and run.r_squared >= 0.9:
            good += 1
        dcap = run.samples[:, 2]
        if dcap.max() > 0 and dcap[-1] > 1e-2 * dcap.max():
            decay_ok = False

    base = family.sample(np.random.default_rng(77))
    scaling_run = run_probe(base, scaling_direction(base))
    alpha = scaling_run.fitted_alpha
    elapsed = time.perf_counter() - start
    ok = (
        fitted > 0
        and good >= 0.8 * runs
        and decay_ok
        and alpha is not None
        and 0.99 <= alpha <= 1.01
    )
    _report(
        10,
        ok,
        f"{good}/{runs} probes fit with alpha >= 0.05 and r2 >= 0.9 (need 80%), "
        f"smallest-scale samples decayed below 1e-2 of peak: {decay_ok}, "
        f"scaling-direction alpha {alpha:.4f} (window [0.99, 1.01]), {elapsed:.1f}s",
    )


def test_criterion_11_near_minimizer_growth():
    """For boundary problems the near-minimizer norm grows linearly in
    log(1/delta)."""
    deltas = 10.0 ** -np.arange(2, 9)
    slopes = []
    worst_r2 = 1.0
    for i in range(10):
        rng = np.random.default_rng(3300 + i)
        a, b = rng.uniform(0.5, 2.0, size=2)
        off_count = int(rng.integers(1, 4))
        rows = [[-a, 0.0], [b, 0.0]]
        for _ in range(off_count):
            rows.append([rng.uniform(-1.5, 1.5), -rng.uniform(0.5, 2.0)])
        d = np.exp(rng.standard_normal(len(rows)))
        prob = ExpSumProblem(np.array(rows), d)
        assert classify_hull(prob).tag is HullTag.BOUNDARY_ZERO
        psi = psi_minimize(prob).value
        norms = []
        for delta in deltas:
            y, norm = near_minimizer(prob, float(delta))
            assert phi_eval(prob, y) <= psi + delta * (1 + 1e-9)
            norms.append(norm)
        x = np.log(1.0 / deltas)
        slope, intercept = np.polyfit(x, norms, 1)
        pred = slope * x + intercept
        ss_res = float(np.sum((np.array(norms) - pred) ** 2))
        ss_tot = float(np.sum((np.array(norms) - np.mean(norms)) ** 2))
        r2 = 1.0 - ss_res / ss_tot
        slopes.append(slope)
        worst_r2 = min(worst_r2, r2)
    ok = worst_r2 >= 0.95
    _report(
        11,
        ok,
        f"10 boundary problems, norm-vs-log(1/delta) worst r2 {worst_r2:.4f} "
        f"(need 0.95), median slope {np.median(slopes):.3f}",
    )
