"""Optimization kernels on the probability simplex and on the alpha interval."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

SIMPLEX_TOL = 1e-12
GOLDEN = (math.sqrt(5) - 1) / 2


class OptInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if np.any(c < -SIMPLEX_TOL) or abs(c.sum() - 1) > SIMPLEX_TOL * max(1, c.size):
            raise OptInputError("point is not on the simplex")
        c = np.clip(c, 0.0, None)
        c /= c.sum()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dimension(self) -> int:
        return self.coords.size


@dataclass(frozen=True, eq=False)
class OptReport:
    optimum: SimplexPoint
    value: float
    gap: float
    iterations: int
    converged: bool

    @property
    def x(self) -> np.ndarray:
        return self.optimum.coords


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def project_rows(m) -> np.ndarray:
    return np.array([project_simplex(row) for row in np.asarray(m, float)])


def frank_wolfe_gap(x, g) -> float:
    """``<g, x> - min_i g_i``; bounds suboptimality of a convex objective."""
    return float(g @ x - g.min())


def minimize_convex_on_simplex(fun: Callable, grad: Callable, dim: int | None = None,
                               x0=None, tol: float = 1e-9, max_iter: int = 10_000) -> OptReport:
    """Projected gradient descent with Armijo backtracking.

    Steps start from a Barzilai-Borwein estimate. Stops once the Frank-Wolfe
    gap, an upper bound on ``f(x) - min f`` for convex ``f``, falls below ``tol``.
    """
    if tol <= 0:
        raise OptInputError("tol must be positive")
    if x0 is None:
        if dim is None:
            raise OptInputError("need dim or x0")
        x = np.full(dim, 1.0 / dim)
    else:
        x = project_simplex(x0)
    fx = float(fun(x))
    if math.isnan(fx):
        raise OptInputError("objective returned NaN")
    g = np.asarray(grad(x), float)
    if np.any(np.isnan(g)):
        raise OptInputError("gradient returned NaN")
    step = 1.0 / max(np.abs(g).max(), 1.0)
    gap = frank_wolfe_gap(x, g)
    it = 0
    while gap > tol and it < max_iter:
        it += 1
        t = step
        while True:
            xn = project_simplex(x - t * g)
            fn = float(fun(xn))
            if math.isnan(fn):
                raise OptInputError("objective returned NaN")
            if fn <= fx + g @ (xn - x) + (xn - x) @ (xn - x) / (2 * t) + 1e-15 * (1 + abs(fx)):
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            break
        gn = np.asarray(grad(xn), float)
        s = xn - x
        y = gn - g
        sy = s @ y
        step = (s @ s) / sy if sy > 1e-300 else t * 2
        step = min(max(step, 1e-12), 1e6)
        x, fx, g = xn, fn, gn
        gap = frank_wolfe_gap(x, g)
    return OptReport(SimplexPoint(x), fx, max(gap, 0.0), it, gap <= tol)


def minimize_separable_on_simplex(dphi: Callable, dim: int, floor: float = 1e-12,
                                  rounds: int = 10, fan: int = 32) -> np.ndarray:
    """KKT point of ``sum_i phi_i(x_i)`` on the simplex for convex ``phi_i``.

    ``dphi(X)`` maps an array of shape ``(m, dim)`` to the derivatives
    ``phi_i'(X[:, i])``. The multiplier is located by a fan of ``fan``
    candidates per round; each candidate's coordinates come from a log-scale
    bisection of ``phi_i'(x_i) = lam`` on ``[floor, 1]``.
    """
    lo_t, hi_t = math.log(floor), 0.0

    def x_of(lams):
        lams = np.asarray(lams, float)[:, None]
        a = np.full((lams.shape[0], dim), lo_t)
        b = np.full_like(a, hi_t)
        for _ in range(48):
            m = (a + b) / 2
            below = dphi(np.exp(m)) < lams
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return np.exp((a + b) / 2)

    ref = np.asarray(dphi(np.full((1, dim), 1.0 / dim)), float)[0]
    lam_lo, lam_hi = float(ref.min()), float(ref.max())
    if not (math.isfinite(lam_lo) and math.isfinite(lam_hi)):
        raise OptInputError("derivative is not finite at the barycentre")
    for _ in range(rounds):
        if lam_hi - lam_lo <= 1e-15 * max(1.0, abs(lam_lo)):
            break
        lams = np.linspace(lam_lo, lam_hi, fan + 2)
        sums = x_of(lams).sum(axis=1)
        i = int(np.searchsorted(sums, 1.0))      # sums is non-decreasing in lam
        i = min(max(i, 1), fan + 1)
        lam_lo, lam_hi = float(lams[i - 1]), float(lams[i])
    x = x_of([(lam_lo + lam_hi) / 2])[0]
    return x / x.sum()


class AlphaOpt(NamedTuple):
    alpha: float
    value: float
    at_boundary: bool
    evaluations: int


def maximize_over_alpha(g: Callable[[float], float], lo: float = 1.0, hi: float = 2.0,
                        tol: float = 1e-8, grid: int = 41) -> AlphaOpt:
    """Grid scan then golden-section refinement around the best grid point.

    Without unimodality the refinement can only improve on the best grid value.
    """
    alphas = np.linspace(lo, hi, grid)
    vals = np.array([g(float(a)) for a in alphas])
    i = int(np.argmax(vals))
    best_a, best_v = float(alphas[i]), float(vals[i])
    n_eval = grid
    left = float(alphas[max(i - 1, 0)])
    right = float(alphas[min(i + 1, grid - 1)])
    if right > left:
        x1 = right - GOLDEN * (right - left)
        x2 = left + GOLDEN * (right - left)
        f1, f2 = g(x1), g(x2)
        n_eval += 2
        while right - left > tol:
            if f1 >= f2:
                right, x2, f2 = x2, x1, f1
                x1 = right - GOLDEN * (right - left)
                f1 = g(x1)
            else:
                left, x1, f1 = x1, x2, f2
                x2 = left + GOLDEN * (right - left)
                f2 = g(x2)
            n_eval += 1
        for a_c, v_c in ((x1, f1), (x2, f2)):
            if v_c > best_v:
                best_a, best_v = float(a_c), float(v_c)
    span = hi - lo
    at_boundary = min(best_a - lo, hi - best_a) <= max(tol, 1e-9 * span) * 10
    return AlphaOpt(best_a, best_v, bool(at_boundary), n_eval)


# ---------------------------------------------------------------------------
# exponent duality check

class ExchangeResult(NamedTuple):
    lhs: float
    rhs: float
    alpha_star: float
    zeta_star: float
    at_boundary: bool
    rhs_literal: float


def exchange_rhs(j, R: float) -> tuple[float, float, np.ndarray]:
    """``min_{q: q_A=p_A} D(q_{B|A}||p_{B|A}|p_A) + (1/2)[H(A|B)_q - R]_+`` via a conic solver.

    Solved as ``min t`` subject to ``t >= f0`` and ``t >= f1`` where ``f0`` is the
    divergence and ``f1`` adds the half conditional entropy term; both are convex
    when ``q_A`` is fixed. Returns (value in bits, zeta from the dual, optimal joint).
    """
    import cvxpy as cp

    P = np.asarray(j.table, float)
    pa = P.sum(axis=1)
    na, nb = P.shape
    mask = P > 0
    logP = np.where(mask, np.log(np.where(mask, P, 1.0)), 0.0)
    Q = cp.Variable((na, nb), nonneg=True)
    qb = cp.sum(Q, axis=0)
    neg_h_ab = -cp.sum(cp.entr(Q))          # sum Q ln Q
    div = neg_h_ab - cp.sum(cp.multiply(Q, logP))
    # H(A|B)_q = H(AB)_q - H(B)_q, and D + H/2 stays convex with q_A fixed
    lin = cp.sum(cp.multiply(Q, logP))
    f1 = -0.5 * cp.sum(cp.entr(Q)) - lin - 0.5 * cp.sum(cp.entr(qb)) - 0.5 * R * math.log(2)
    t = cp.Variable()
    c0 = t >= div
    c1 = t >= f1
    cons = [cp.sum(Q, axis=1) == pa, c0, c1]
    if (~mask).any():
        cons.append(cp.multiply(Q, (~mask).astype(float)) == 0)
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"conic solver status {prob.status}")
    lam1 = float(c1.dual_value) if c1.dual_value is not None else 0.0
    return float(prob.value) / math.log(2), 0.5 * min(max(lam1, 0.0), 1.0), np.clip(Q.value, 0, None)


def minimax_exchange_check(j, R: float, tol: float = 1e-6) -> ExchangeResult:
    """Both sides of the exponent duality.

    The left side maximizes ``(1/alpha')(H(A) - I^c_alpha - R)`` over alpha in
    [1, 2] using the certified Csiszar routine. The right side is an independent
    conic program. ``rhs_literal`` evaluates ``[H(A|B)_q/2 - R]_+`` at the
    minimizer of the right side for comparison.
    """
    from . import measures
    from .prob import JointDistribution, cond_entropy

    if R < 0:
        raise OptInputError("R must be non-negative")
    h_a = entropy_bits(j.p_a)

    def g(a):
        if a <= 1.0:
            return 0.0
        ic = measures.csiszar_mi(j, a, tol=tol * 1e-2).value
        return (1 - 1 / a) * (h_a - ic - R)

    opt = maximize_over_alpha(g, 1.0, 2.0, tol=1e-7)
    rhs, zeta, Q = exchange_rhs(j, R)
    qj = JointDistribution(Q / Q.sum())
    div = sum(j.p_a[i] * _kl_row(qj.channel_rows[i], j.channel_rows[i])
              for i in range(j.shape[0]) if j.p_a[i] > 0)
    rhs_literal = div + max(0.5 * cond_entropy(qj) - R, 0.0)
    return ExchangeResult(opt.value, rhs, opt.alpha, zeta, opt.at_boundary, rhs_literal)


def entropy_bits(p) -> float:
    p = np.asarray(p, float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _kl_row(r, w) -> float:
    nz = r > 0
    return float((r[nz] * np.log2(r[nz] / np.maximum(w[nz], 1e-300))).sum())
