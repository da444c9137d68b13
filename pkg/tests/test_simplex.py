import math

import numpy as np
import pytest

from vvcorr import simplex as S
from vvcorr.prob import JointDistribution, random_channel, random_joint


def test_simplex_point_validation():
    p = S.SimplexPoint([0.2, 0.8])
    assert p.dimension == 2
    with pytest.raises(S.OptInputError):
        S.SimplexPoint([0.5, 0.6])
    with pytest.raises(S.OptInputError):
        S.SimplexPoint([1.1, -0.1])


def test_projection_lands_on_simplex():
    gen = np.random.default_rng(0)
    for _ in range(100):
        v = gen.normal(size=5) * 3
        w = S.project_simplex(v)
        assert abs(w.sum() - 1) < 1e-12 and w.min() >= 0
        # optimality: no simplex vertex is closer to v than the projection by a descent step
        for e in np.eye(5):
            assert (v - w) @ (e - w) <= 1e-10


def test_linear_objective_hits_vertex():
    c = np.array([0.3, -1.0, 2.0])
    r = S.minimize_convex_on_simplex(lambda q: c @ q, lambda q: c, dim=3, tol=1e-10)
    assert r.converged and np.allclose(r.x, [0, 1, 0], atol=1e-9)
    assert math.isclose(r.value, -1.0, abs_tol=1e-9)


def test_kl_to_uniform():
    u = np.full(3, 1 / 3)

    def f(q):
        q = np.maximum(q, 1e-12)
        return float((q * np.log(q / u)).sum())

    def g(q):
        return np.log(np.maximum(q, 1e-12) / u) + 1

    r = S.minimize_convex_on_simplex(f, g, x0=[0.7, 0.2, 0.1], tol=1e-10)
    assert r.converged and np.allclose(r.x, u, atol=1e-5) and abs(r.value) < 1e-9


def test_renyi2_average_matches_grid_oracle():
    ch = random_channel(7, 3, 3)
    W = ch.rows
    pa = np.full(3, 1 / 3)

    def f(q):
        q = np.maximum(q, 1e-12)
        return float(sum(pa[x] * math.log2((W[x] ** 2 / q).sum()) for x in range(3)))

    def g(q):
        q = np.maximum(q, 1e-12)
        return -sum(pa[x] * (W[x] ** 2 / q ** 2) / (W[x] ** 2 / q).sum() for x in range(3)) / math.log(2)

    r = S.minimize_convex_on_simplex(f, g, dim=3, tol=1e-10)
    step = 1e-3
    best = math.inf
    for a in np.arange(step, 1, step):
        for b in np.arange(step, 1 - a, step):
            best = min(best, f(np.array([a, b, 1 - a - b])))
    assert r.value <= best + 1e-12 and best - r.value < 1e-4


def test_tighter_tol_never_worse():
    c = np.array([1.0, 2.0, 0.5, 3.0])

    def f(q):
        return float(((q - 0.1 * c) ** 2).sum() + c @ q)

    def g(q):
        return 2 * (q - 0.1 * c) + c

    loose = S.minimize_convex_on_simplex(f, g, dim=4, tol=1e-4)
    tight = S.minimize_convex_on_simplex(f, g, dim=4, tol=1e-10)
    assert tight.value <= loose.value + 1e-15


def test_nan_objective_rejected():
    with pytest.raises(S.OptInputError):
        S.minimize_convex_on_simplex(lambda q: float("nan"), lambda q: q, dim=2)
    with pytest.raises(S.OptInputError):
        S.minimize_convex_on_simplex(lambda q: 0.0, lambda q: q, dim=2, tol=0)


def test_separable_solver_kkt():
    w = np.array([0.5, 0.3, 0.2])
    # phi_i(x) = w_i^2 / x has its simplex minimum at x proportional to w
    x = S.minimize_separable_on_simplex(lambda X: -(w ** 2) / X ** 2, 3)
    assert np.allclose(x, w, atol=1e-9)


def test_maximize_over_alpha_examples():
    r = S.maximize_over_alpha(lambda a: -(a - 1.5) ** 2)
    assert abs(r.alpha - 1.5) < 1e-6 and not r.at_boundary
    r = S.maximize_over_alpha(lambda a: 3.0)
    assert r.value == 3.0
    r = S.maximize_over_alpha(lambda a: a)
    assert r.at_boundary and abs(r.alpha - 2.0) < 1e-6


def test_exponent_curve_against_fine_grid():
    from vvcorr.measures import csiszar_mi
    from vvcorr.prob import entropy

    j = random_channel(3, 2, 2).joint([0.4, 0.6])
    R = 0.1
    fn = lambda a: 0.0 if a <= 1 else (1 - 1 / a) * (entropy(j.p_a) - csiszar_mi(j, a, tol=1e-10).value - R)
    r = S.maximize_over_alpha(fn)
    brute = max(fn(a) for a in np.arange(1.0, 2.0 + 1e-12, 1e-3))
    assert abs(r.value - brute) < 2e-3 and r.value >= brute - 1e-9


def test_exchange_large_rate_saturates():
    j = random_joint(1, (2, 2))
    res = S.minimax_exchange_check(j, 5.0)
    assert abs(res.lhs) < 1e-9 and abs(res.rhs) < 1e-6


def test_exchange_identity_channel_zero_rate():
    # with B = A every alpha gives H(A) - I^c = 0, and q = p makes the right side 0
    j = JointDistribution.identity_coupling([0.5, 0.5])
    res = S.minimax_exchange_check(j, 0.0)
    assert abs(res.lhs) < 1e-6 and abs(res.rhs) < 1e-6


def test_exchange_random_binary_channel():
    j = random_channel(11, 2, 2).joint([0.5, 0.5])
    res = S.minimax_exchange_check(j, 0.1)
    assert abs(res.lhs - res.rhs) < 1e-3
    assert 0 <= res.zeta_star <= 0.5
    with pytest.raises(S.OptInputError):
        S.minimax_exchange_check(j, -0.1)
