"""Capacity of a completely positive operator.

cap(T) is the infimum of det(T(X))^(1/m) / det(X)^(1/n) over positive
definite X. Three routes are implemented:

* ``cap_direct_pd``: quasi-Newton descent over unit-determinant positive
  matrices X = exp(H) with H traceless Hermitian;
* ``cap_unitary_search``: cap(T) = inf_U cap0(T_U) where cap0 restricts X
  to diagonal matrices and reduces to a weighted exponential sum, so the
  outer search runs over unitaries only;
* ``cap_via_scaling``: alternate row and column marginal normalization
  (square case only), accumulating determinant corrections.

All routes return a CapacityReport carrying the value, a witness when one
exists, solver residuals, and flags for degenerate or non-converged runs.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .coeffs import d_leibniz
from .cpop import CPOperator, apply, conjugate_unitary, dual_apply
from .errors import (
    CapaxError,
    NotSupported,
    SingularEvaluation,
    SingularMarginal,
    SingularMatrix,
)
from .expsum import ExpSumProblem, HullTag, psi_minimize
from .linalg import eigh, expm_hermitian, hermitian_part, psd_inv_sqrt

__all__ = [
    "Method",
    "CapacityConfig",
    "CapacityReport",
    "ScalingState",
    "diag_problem",
    "cap0",
    "cap_direct_pd",
    "cap_unitary_search",
    "scaling_step",
    "cap_via_scaling",
    "cap",
    "capacity_ratio",
    "report_to_dict",
    "report_to_json",
]


class Method(str, enum.Enum):
    PSI_UNITARY = "psi_unitary"
    DIRECT_PD = "direct_pd"
    SCALING = "scaling"


@dataclass(frozen=True)
class CapacityConfig:
    tol: float = 1e-9
    psi_tol: float = 1e-10
    restarts_direct: int = 4
    restarts_unitary: int = 8
    seed: int = 0
    check_psi: bool = False
    check_scaling: bool = False
    scaling_max_steps: int = 2000
    scaling_residual_tol: float = 1e-8
    degenerate_drop: float = 40.0


@dataclass(frozen=True)
class CapacityReport:
    value: float
    method: Method
    residual: float
    iterations: int
    witness: dict | None = None
    flags: tuple[str, ...] = ()
    cross_checks: dict = field(default_factory=dict)


def diag_problem(t: CPOperator) -> ExpSumProblem:
    """Exponential-sum form of the diagonal restriction.

    det(T(diag(lam))) is a polynomial with coefficient vector d over the
    degree-m multi-indices j; substituting lam_i = exp(y_i) and dividing by
    the homogeneous normalization gives Phi_d over exponents u_j = j - (m/n) 1.
    """
    cv = d_leibniz(t)
    jarr = np.array(cv.indices, dtype=float)
    u = jarr - (cv.m / cv.n) * np.ones(cv.n)
    return ExpSumProblem(u, cv.values)


def capacity_ratio(t: CPOperator, x) -> float:
    """det(T(X))^(1/m) / det(X)^(1/n) for a positive definite X."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (t.n, t.n):
        raise SingularMatrix(f"x must be {t.n} x {t.n}, got {x.shape}")
    scale = float(np.abs(x).max(initial=0.0))
    if np.abs(x - x.conj().T).max(initial=0.0) > 1e-10 * max(scale, 1.0):
        raise SingularMatrix("x must be Hermitian")
    wx, _ = eigh(x)
    if wx.min(initial=1.0) <= 0:
        raise SingularMatrix("x must be positive definite")
    wt, _ = eigh(apply(t, x))
    if wt.min(initial=1.0) <= 0:
        raise SingularEvaluation("T(x) is singular, the ratio is not defined")
    return float(np.exp(np.sum(np.log(wt)) / t.m - np.sum(np.log(wx)) / t.n))


def _matrix_json(a: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(a, dtype=complex)]


def cap0(t: CPOperator, tol: float = 1e-10) -> CapacityReport:
    """Diagonally restricted capacity: inf over positive diagonal X.

    Solved exactly through the exponential-sum form; the witness (present
    when the infimum is attained) is the optimal diagonal matrix.
    """
    prob = diag_problem(t)
    if float(prob.d.max(initial=0.0)) <= 1e-300:
        return CapacityReport(0.0, Method.PSI_UNITARY, 0.0, 0, None, ("Degenerate",))
    res = psi_minimize(prob, tol=tol)
    value = res.value ** (1.0 / t.m)
    flags: list[str] = []
    witness = None
    if res.classification.tag is HullTag.EXTERIOR_ZERO:
        flags.append("Degenerate")
        value = 0.0
    elif res.classification.tag is HullTag.BOUNDARY_ZERO:
        flags.append("InfimumNotAttained")
    else:
        y = res.minimizer
        witness = {"x": np.diag(np.exp(y)).astype(complex), "diag_log": y.copy()}
    if not res.converged:
        flags.append("MaxIterations")
    return CapacityReport(
        float(value), Method.PSI_UNITARY, res.grad_residual, res.iterations, witness, tuple(flags)
    )


class _Degenerate(Exception):
    """Internal signal: the descent found det(T(X)) collapsing to zero."""


def _herm_basis_expand(v: np.ndarray, n: int) -> np.ndarray:
    """Traceless Hermitian matrix from n*n - 1 real coordinates (an isometry
    for the Frobenius norm)."""
    h = np.zeros((n, n), dtype=complex)
    idx = 0
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            re, im = v[idx], v[idx + 1]
            idx += 2
            h[i, j] = (re - 1j * im) * inv_sqrt2
            h[j, i] = (re + 1j * im) * inv_sqrt2
    for k in range(1, n):
        coeff = v[idx] / math.sqrt(k * (k + 1))
        idx += 1
        for i in range(k):
            h[i, i] += coeff
        h[k, k] -= k * coeff
    return h


def cap_direct_pd(
    t: CPOperator,
    tol: float = 1e-9,
    restarts: int = 4,
    seed: int = 0,
    degenerate_drop: float = 40.0,
) -> CapacityReport:
    """Minimize the capacity ratio over X = exp(H), H traceless Hermitian.

    det(X) = 1 on this chart, so the objective is (1/m) log det(T(exp H)).
    Degeneracy (capacity zero) is declared when the objective falls more
    than degenerate_drop below its value at X = I, or T(X) loses rank.
    """
    n, m = t.n, t.m
    w0, _ = eigh(apply(t, np.eye(n, dtype=complex)))
    if w0.min(initial=1.0) <= 0:
        return CapacityReport(0.0, Method.DIRECT_PD, 0.0, 0, None, ("Degenerate",))
    f_ref = float(np.sum(np.log(w0)) / m)
    floor = f_ref - degenerate_drop

    def objective(v: np.ndarray) -> float:
        x = expm_hermitian(_herm_basis_expand(v, n))
        w, _ = eigh(apply(t, x))
        if w.min(initial=1.0) <= 0:
            raise _Degenerate
        val = float(np.sum(np.log(w)) / m)
        if val < floor:
            raise _Degenerate
        return val

    dim = n * n - 1
    if dim == 0:
        return CapacityReport(
            float(np.exp(f_ref)),
            Method.DIRECT_PD,
            0.0,
            0,
            {"x": np.eye(1, dtype=complex)},
            (),
        )

    fd_step = 1e-6

    def gradient(v: np.ndarray) -> np.ndarray:
        g = np.zeros(dim)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = fd_step
            g[i] = (objective(v + e) - objective(v - e)) / (2.0 * fd_step)
        return g

    rng = np.random.default_rng(seed)
    starts = [np.zeros(dim)] + [
        0.3 * rng.standard_normal(dim) for _ in range(max(restarts - 1, 0))
    ]
    best_v, best_f = None, np.inf
    iterations = 0
    residual = np.inf
    try:
        for v0 in starts:
            res = minimize(
                objective,
                v0,
                jac=gradient,
                method="BFGS",
                options={"gtol": max(tol, 1e-8), "maxiter": 300},
            )
            iterations += int(res.nit)
            if res.fun < best_f:
                best_f = float(res.fun)
                best_v = res.x
                residual = float(np.linalg.norm(res.jac))
    except _Degenerate:
        return CapacityReport(0.0, Method.DIRECT_PD, 0.0, iterations, None, ("Degenerate",))

    x_best = expm_hermitian(_herm_basis_expand(best_v, n))
    return CapacityReport(
        float(np.exp(best_f)),
        Method.DIRECT_PD,
        residual,
        iterations,
        {"x": x_best},
        (),
    )


def _unitary_expand(v: np.ndarray, n: int) -> np.ndarray:
    """Unitary exp(i H) from n*n real coordinates for the Hermitian H."""
    h = _herm_basis_expand(v[: n * n - 1], n) if n > 1 else np.zeros((1, 1), dtype=complex)
    h = h + (v[n * n - 1] / math.sqrt(n)) * np.eye(n)
    w, vec = eigh(h)
    return (vec * np.exp(1j * w)) @ vec.conj().T


def cap_unitary_search(
    t: CPOperator,
    tol: float = 1e-9,
    restarts: int = 8,
    seed: int = 0,
    psi_tol: float = 1e-10,
    search_tol: float = 1e-8,
) -> CapacityReport:
    """cap(T) as inf over unitaries U of the diagonal capacity of T_U.

    Nelder-Mead over the unitary group (identity start plus random
    restarts), with a cheap exponential-sum solve per candidate and one
    tight solve at the winner.
    """
    n, m = t.n, t.m
    dim = n * n

    def value_at(v: np.ndarray) -> float:
        u = _unitary_expand(v, n)
        prob = diag_problem(conjugate_unitary(t, u))
        if float(prob.d.max(initial=0.0)) <= 1e-300:
            return -np.inf
        res = psi_minimize(prob, tol=search_tol, max_iter=80)
        if res.value <= 1e-300:
            return -np.inf
        return math.log(res.value) / m

    rng = np.random.default_rng(seed)
    starts = [np.zeros(dim)] + [
        0.8 * rng.standard_normal(dim) for _ in range(max(restarts - 1, 0))
    ]
    best_v, best_f = np.zeros(dim), value_at(np.zeros(dim))
    iterations = 0
    degenerate = not np.isfinite(best_f)
    if not degenerate:
        for v0 in starts:
            res = minimize(
                value_at,
                v0,
                method="Nelder-Mead",
                options={"maxiter": 200 * dim, "fatol": 1e-10, "xatol": 1e-7},
            )
            iterations += int(res.nit)
            if res.fun < best_f:
                best_f = float(res.fun)
                best_v = res.x
            if not np.isfinite(best_f):
                degenerate = True
                break
        if not degenerate:
            res = minimize(
                value_at,
                best_v,
                method="Nelder-Mead",
                options={"maxiter": 200 * dim, "fatol": 1e-11, "xatol": 1e-8},
            )
            iterations += int(res.nit)
            if res.fun < best_f:
                best_f = float(res.fun)
                best_v = res.x
            degenerate = not np.isfinite(best_f)

    if degenerate:
        return CapacityReport(
            0.0, Method.PSI_UNITARY, 0.0, iterations, None, ("Degenerate",)
        )

    u_best = _unitary_expand(best_v, n)
    final = psi_minimize(diag_problem(conjugate_unitary(t, u_best)), tol=psi_tol)
    value = final.value ** (1.0 / m)
    flags: list[str] = []
    witness = None
    if final.classification.tag is HullTag.INTERIOR_ZERO:
        y = final.minimizer
        x = u_best @ np.diag(np.exp(y)).astype(complex) @ u_best.conj().T
        witness = {"x": hermitian_part(x), "unitary": u_best, "diag_log": y.copy()}
    else:
        flags.append("InfimumNotAttained")
    if not final.converged:
        flags.append("MaxIterations")
    return CapacityReport(
        float(value),
        Method.PSI_UNITARY,
        final.grad_residual,
        iterations,
        witness,
        tuple(flags),
    )


@dataclass(frozen=True)
class ScalingState:
    """One snapshot of the alternating marginal normalization.

    col_transform accumulates the right factors applied to the input side,
    so X = R R* converts a balanced state back into a witness for the
    original operator.
    """

    op: CPOperator
    log_correction: float
    step: int
    row_residual: float
    col_residual: float
    col_transform: np.ndarray


def _marginal_residuals(op: CPOperator) -> tuple[float, float]:
    n, m = op.n, op.m
    q = apply(op, np.eye(n, dtype=complex))
    p = dual_apply(op, np.eye(m, dtype=complex))
    r_row = float(np.linalg.norm(q - np.eye(m)) / math.sqrt(m))
    r_col = float(np.linalg.norm(p - np.eye(n)) / math.sqrt(n))
    return r_row, r_col


def _log_det_pd(h: np.ndarray, context: str) -> float:
    w, _ = eigh(h)
    if float(w.min()) <= 1e-12 * max(float(w.max()), 1e-300):
        raise SingularMarginal(f"{context} marginal is numerically singular")
    return float(np.sum(np.log(w)))


def scaling_step(state: ScalingState, side: str) -> ScalingState:
    """Normalize one marginal (side "row" or "col") and track corrections."""
    op = state.op
    if side == "row":
        q = apply(op, np.eye(op.n, dtype=complex))
        log_det = _log_det_pd(q, "row")
        s = psd_inv_sqrt(q)
        kraus = tuple(s @ a for a in op.kraus)
        new_op = CPOperator(kraus)
        log_corr = state.log_correction + log_det / op.m
        col_t = state.col_transform
    elif side == "col":
        p = dual_apply(op, np.eye(op.m, dtype=complex))
        log_det = _log_det_pd(p, "column")
        s = psd_inv_sqrt(p)
        kraus = tuple(a @ s for a in op.kraus)
        new_op = CPOperator(kraus)
        log_corr = state.log_correction + log_det / op.n
        col_t = state.col_transform @ s
    else:
        raise CapaxError(f"unknown scaling side {side!r}")
    r_row, r_col = _marginal_residuals(new_op)
    return ScalingState(new_op, log_corr, state.step + 1, r_row, r_col, col_t)


def cap_via_scaling(
    t: CPOperator, max_steps: int = 2000, residual_tol: float = 1e-8
) -> CapacityReport:
    """Capacity through alternating marginal normalization (square case).

    The determinant corrections accumulated along the way recover the
    capacity of the original operator once both marginals are balanced;
    the witness is exact for the reported value by construction.
    """
    if t.n != t.m:
        raise NotSupported("marginal scaling needs square operators (n == m)")
    r_row, r_col = _marginal_residuals(t)
    state = ScalingState(t, 0.0, 0, r_row, r_col, np.eye(t.n, dtype=complex))
    sides = ("row", "col")
    steps = 0
    while max(state.row_residual, state.col_residual) > residual_tol and steps < max_steps:
        state = scaling_step(state, sides[steps % 2])
        steps += 1
    flags: list[str] = []
    if max(state.row_residual, state.col_residual) > residual_tol:
        flags.append("NoConvergence")
    w, _ = eigh(apply(state.op, np.eye(t.n, dtype=complex)))
    if w.min(initial=1.0) <= 0:
        raise SingularMarginal("final row marginal lost positivity")
    value = float(np.exp(state.log_correction + np.sum(np.log(w)) / t.m))
    x = hermitian_part(state.col_transform @ state.col_transform.conj().T)
    residual = float(max(state.row_residual, state.col_residual))
    return CapacityReport(
        value, Method.SCALING, residual, steps, {"x": x}, tuple(flags)
    )


def cap(t: CPOperator, config: CapacityConfig | None = None) -> CapacityReport:
    """Best-effort capacity with optional independent cross-checks.

    The primary route is the direct positive definite descent; enabling
    check_psi or check_scaling records agreement data from the other
    routes in cross_checks without changing the reported value.
    """
    cfg = config or CapacityConfig()
    report = cap_direct_pd(
        t,
        tol=cfg.tol,
        restarts=cfg.restarts_direct,
        seed=cfg.seed,
        degenerate_drop=cfg.degenerate_drop,
    )
    cross: dict = {}
    if cfg.check_psi:
        other = cap_unitary_search(
            t,
            tol=cfg.tol,
            restarts=cfg.restarts_unitary,
            seed=cfg.seed,
            psi_tol=cfg.psi_tol,
        )
        cross["psi_unitary"] = other.value
        cross["psi_unitary_delta"] = abs(other.value - report.value)
    if cfg.check_scaling and t.n == t.m:
        other = cap_via_scaling(
            t, max_steps=cfg.scaling_max_steps, residual_tol=cfg.scaling_residual_tol
        )
        cross["scaling"] = other.value
        cross["scaling_delta"] = abs(other.value - report.value)
    if cross:
        report = replace(report, cross_checks=cross)
    return report


def report_to_dict(report: CapacityReport) -> dict:
    witness = None
    if report.witness is not None:
        witness = {}
        for key, val in report.witness.items():
            arr = np.asarray(val)
            if arr.ndim == 2:
                witness[key] = _matrix_json(arr)
            else:
                witness[key] = [float(v) for v in np.asarray(arr, dtype=float)]
    return {
        "value": report.value,
        "method": report.method.value,
        "residual": report.residual,
        "iterations": report.iterations,
        "witness": witness,
        "flags": list(report.flags),
        "cross_checks": {k: float(v) for k, v in report.cross_checks.items()},
    }


def report_to_json(report: CapacityReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True)
