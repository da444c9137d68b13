"""Small-dimension quantum support: Schatten and (1, alpha) norms, V_2/W_2, Haar decoupling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .measures import Certificate, MeasureResult, as_alpha
from .prob import as_generator, as_seeded, map_trials

HERM_TOL = 1e-10


class QuantumInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != math.prod(dims):
            raise QuantumInputError(f"matrix shape {m.shape} does not match factors {dims}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix(Operator):
    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        if np.abs(m - m.conj().T).max() > HERM_TOL:
            raise QuantumInputError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > HERM_TOL:
            raise QuantumInputError("density matrix trace is not 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -HERM_TOL:
            raise QuantumInputError("density matrix is not PSD")

    @classmethod
    def pure(cls, psi, dims) -> "DensityMatrix":
        psi = np.asarray(psi, complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def from_classical(cls, table) -> "DensityMatrix":
        """Diagonal embedding of a joint table on A x B (A first)."""
        t = np.asarray(table, float)
        return cls(np.diag(t.ravel()).astype(complex), t.shape)


@dataclass(frozen=True, eq=False)
class CQState:
    weights: np.ndarray
    states: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, float)
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise QuantumInputError("weights must form a distribution")
        sts = tuple(s if isinstance(s, DensityMatrix) else DensityMatrix(s, (np.shape(s)[0],))
                    for s in self.states)
        if len(sts) != w.size or len({s.dim for s in sts}) != 1:
            raise QuantumInputError("need one conditional state of common size per weight")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", sts)

    def to_density(self) -> DensityMatrix:
        """``sum_a p(a) |a><a| (x) rho_a`` with the classical register first."""
        na, db = self.weights.size, self.states[0].dim
        out = np.zeros((na * db, na * db), complex)
        for a, (p, s) in enumerate(zip(self.weights, self.states)):
            out[a * db:(a + 1) * db, a * db:(a + 1) * db] = p * s.matrix
        return DensityMatrix(out, (na, db))


# ---------------------------------------------------------------------------
# basic linear algebra

def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    m = np.asarray(m)
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    for k, i in enumerate(sorted(drop, reverse=True)):
        cur = n - k
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = math.prod(dims[i] for i in keep)
    return t.reshape(d, d)


def permute_factors(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator; ``order`` lists old factor indices."""
    m = np.asarray(m)
    n = len(dims)
    t = m.reshape(tuple(dims) * 2)
    t = t.transpose(list(order) + [n + i for i in order])
    d = math.prod(dims)
    return t.reshape(d, d)


def swap_operator(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f


def schatten_norm(m, p) -> float:
    mat = m.matrix if isinstance(m, Operator) else np.asarray(m)
    p = float(p)
    if p < 1:
        raise QuantumInputError("Schatten p must be >= 1")
    s = np.linalg.svd(mat, compute_uv=False)
    if math.isinf(p):
        return float(s.max())
    return float((s ** p).sum() ** (1.0 / p))


def herm_power(m, s: float, floor: float = 0.0) -> np.ndarray:
    """``m^s`` for Hermitian PSD ``m``; negative powers use the support only."""
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    if s < 0:
        keep = w > max(floor, 1e-14)
        ws = np.zeros_like(w)
        ws[keep] = w[keep] ** s
    else:
        ws = w ** s
    return (v * ws) @ v.conj().T


def _herm_from_params(theta, d):
    h = np.zeros((d, d), complex)
    h[np.diag_indices(d)] = theta[:d]
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    h[iu] = theta[d:d + k] + 1j * theta[d + k:d + 2 * k]
    h = h + np.triu(h, 1).conj().T
    return h


def state_neg_power(theta, d, s) -> np.ndarray:
    """``sigma^{-s}`` for ``sigma = exp(H)/tr exp(H)`` with ``H`` built from ``theta``."""
    w, v = np.linalg.eigh(_herm_from_params(theta, d))
    w = w - w.max()
    logz = math.log(np.exp(w).sum())
    ws = np.exp(-s * (w - logz))
    return (v * ws) @ v.conj().T


def state_from_params(theta, d) -> np.ndarray:
    w, v = np.linalg.eigh(_herm_from_params(theta, d))
    e = np.exp(w - w.max())
    return (v * (e / e.sum())) @ v.conj().T


def _minimize_over_states(obj, d, n_vars, restarts, rng, tol):
    """Minimize ``obj(list of sigma^{-s}-parameter vectors)`` with L-BFGS from several starts."""
    gen = as_generator(rng)
    npar = d * d
    vals = []
    best = (math.inf, None)
    for r in range(restarts):
        x0 = np.zeros(n_vars * npar) if r == 0 else gen.normal(scale=1.0, size=n_vars * npar)
        res = minimize(lambda x: obj([x[i * npar:(i + 1) * npar] for i in range(n_vars)]), x0,
                       method="L-BFGS-B", options={"ftol": tol * 1e-3, "gtol": tol * 1e-2,
                                                   "maxiter": 2000})
        v = float(res.fun)
        vals.append(v)
        if v < best[0]:
            best = (v, res.x)
    return best[0], np.array(vals)


@dataclass(frozen=True)
class NormResult(MeasureResult):
    dispersion: float = 0.0


def vv_norm_1alpha(m, dims: tuple[int, int], alpha, tol: float = 1e-7, restarts: int = 8,
                   rng=0, psd: bool | None = None) -> NormResult:
    """``||M||_(1, alpha)`` for ``M`` on ``B (x) A``: 1-norm on the outer factor B.

    The infimum over ``sigma_B, tau_B`` is approached from above, so the value is
    an upper bound; the certificate lower bound is ``d_A^{-1/alpha'} ||M||_1``.
    PSD input uses a single density matrix (``sigma = tau``).
    """
    mat = m.matrix if isinstance(m, Operator) else np.asarray(m, complex)
    a = as_alpha(alpha)
    db, da = int(dims[0]), int(dims[1])
    if db * da != mat.shape[0] or db * da > 64:
        raise QuantumInputError("need matching dims and total dimension <= 64")
    if not 1 <= a.value <= 4:
        raise QuantumInputError("alpha must lie in [1, 4]")
    one = schatten_norm(mat, 1)
    lower = da ** (-a.inv_conjugate) * one
    if a.value == 1:
        return NormResult(one, Certificate(one, one), 0, True, None, 0.0)
    s = a.inv_conjugate / 2
    eye_a = np.eye(da)
    if psd is None:
        herm = np.abs(mat - mat.conj().T).max() <= HERM_TOL
        psd = herm and np.linalg.eigvalsh((mat + mat.conj().T) / 2).min() >= -HERM_TOL
    if psd:
        def obj(ps):
            L = np.kron(state_neg_power(ps[0], db, s), eye_a)
            return schatten_norm(L @ mat @ L, a.value)
        n_vars = 1
    else:
        def obj(ps):
            L = np.kron(state_neg_power(ps[0], db, s), eye_a)
            R = np.kron(state_neg_power(ps[1], db, s), eye_a)
            return schatten_norm(L @ mat @ R, a.value)
        n_vars = 2
    val, vals = _minimize_over_states(obj, db, n_vars, restarts, rng, tol)
    disp = float(vals.max() - vals.min())
    return NormResult(val, Certificate(min(lower, val), val), restarts, True, None, disp)


def vv_norm_classical_outer(blocks, alpha) -> float:
    """``sum_b ||M_b||_alpha`` for a block-diagonal operator with classical outer factor."""
    a = as_alpha(alpha).value
    return float(sum(schatten_norm(b, a) for b in blocks))


# ---------------------------------------------------------------------------
# V_2 and W_2

def _marginals(rho, dims):
    return partial_trace(rho, dims, [0]), partial_trace(rho, dims, [1])


def v2_w2_quantum(rho, which: str = "V", tol: float = 1e-7, restarts: int = 8, rng=0) -> NormResult:
    """``V_2(A;B)`` or ``W_2(A|B)`` from the two-trace expression, ``rho`` on ``A (x) B``."""
    mat = rho.matrix if isinstance(rho, Operator) else np.asarray(rho, complex)
    dims = rho.dims if isinstance(rho, Operator) else None
    if dims is None or len(dims) != 2:
        raise QuantumInputError("need a bipartite state with factor dims (d_A, d_B)")
    da, db = dims
    if da * db > 64 or max(da, db) > 8:
        raise QuantumInputError("dimensions too large")
    rho_a, rho_b = _marginals(mat, dims)
    if which.upper() == "V":
        ra = herm_power(rho_a, -0.5)
        offset = 1.0
    elif which.upper() == "W":
        ra = np.eye(da)
        offset = 1.0 / da
    else:
        raise QuantumInputError("which must be 'V' or 'W'")

    def obj(ps):
        t = state_neg_power(ps[0], db, 0.5)
        sg = state_neg_power(ps[1], db, 0.5)
        first = np.trace(np.kron(ra, t) @ mat @ np.kron(ra, sg) @ mat).real
        second = np.trace(t @ rho_b @ sg @ rho_b).real
        return first - offset * second

    val, vals = _minimize_over_states(obj, db, 2, restarts, rng, tol)
    v = math.sqrt(max(val, 0.0))
    disp = math.sqrt(max(vals.max(), 0.0)) - v
    return NormResult(v, Certificate(0.0, v), restarts, True, None, disp)


def v2_w2_norm_route(rho, which: str = "V", tol: float = 1e-7, restarts: int = 8, rng=0) -> NormResult:
    """The same quantity as a (1, 2)-norm of the shifted operator on ``B (x) A``."""
    mat = rho.matrix
    da, db = rho.dims
    rho_a, rho_b = _marginals(mat, rho.dims)
    rho_ba = permute_factors(mat, (da, db), (1, 0))
    if which.upper() == "V":
        g = np.kron(np.eye(db), herm_power(rho_a, -0.25))
        x = g @ rho_ba @ g - np.kron(rho_b, herm_power(rho_a, 0.5))
    else:
        x = rho_ba - np.kron(rho_b, np.eye(da) / da)
    return vv_norm_1alpha(x, (db, da), 2, tol=tol, restarts=restarts, rng=rng, psd=False)


def sibson_mi_quantum(rho, alpha, tol: float = 1e-7, restarts: int = 4, rng=0) -> float:
    """``alpha' log ||Gamma_{rho_A}^{-1/alpha'}(rho_BA)||_(1, alpha)`` via the PSD path."""
    a = as_alpha(alpha)
    mat = rho.matrix
    da, db = rho.dims
    rho_a, _ = _marginals(mat, rho.dims)
    rho_ba = permute_factors(mat, (da, db), (1, 0))
    g = np.kron(np.eye(db), herm_power(rho_a, -a.inv_conjugate / 2))
    nrm = vv_norm_1alpha(g @ rho_ba @ g, (db, da), a, tol=tol, restarts=restarts, rng=rng, psd=True)
    return a.conjugate * math.log2(nrm.value)


# ---------------------------------------------------------------------------
# Haar averages and decoupling

def haar_unitary(rng, d: int) -> np.ndarray:
    gen = as_generator(rng)
    z = (gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def twirl_coefficients(m, d: int) -> tuple[float, float]:
    """``(a, b)`` with ``E[(U(x)U) M (U(x)U)^dag] = a I + b F``."""
    f = swap_operator(d)
    tm = np.trace(m)
    tmf = np.trace(m @ f)
    sol = np.linalg.solve(np.array([[d * d, d], [d, d * d]], complex), np.array([tm, tmf]))
    return complex(sol[0]), complex(sol[1])


@dataclass
class SecondMomentReport:
    deviation: float
    bound: float
    trials: int
    coefficients: tuple

    @property
    def holds(self) -> bool:
        return self.deviation <= self.bound


def haar_second_moment_check(m, d: int, trials: int = 10_000, rng=0) -> SecondMomentReport:
    """Monte Carlo twirl of ``M`` against its closed form; ``M`` is scaled to unit Frobenius norm."""
    m = np.asarray(m, complex)
    m = m / np.linalg.norm(m)
    a, b = twirl_coefficients(m, d)
    target = a * np.eye(d * d) + b * swap_operator(d)
    gen = as_seeded(rng)
    acc = np.zeros_like(m)
    for i in range(trials):
        u = haar_unitary(gen.trial(i), d)
        uu = np.kron(u, u)
        acc += uu @ m @ uu.conj().T
    dev = float(np.linalg.norm(acc / trials - target))
    return SecondMomentReport(dev, 5 / math.sqrt(trials), trials, (a, b))


def apply_kraus(kraus, x) -> np.ndarray:
    return sum(k @ x @ k.conj().T for k in kraus)


def partial_trace_kraus(d_a0: int, d_c: int) -> list[np.ndarray]:
    """Kraus operators of ``tr_C`` on ``A = A0 (x) C``."""
    out = []
    for c in range(d_c):
        bra = np.zeros((1, d_c))
        bra[0, c] = 1
        out.append(np.kron(np.eye(d_a0), bra))
    return out


def projection_kraus(d_a: int, d_a0: int) -> list[np.ndarray]:
    """``(d_A/d_A0) P (.) P`` with ``P`` onto the first ``d_A0`` basis vectors."""
    p = np.zeros((d_a0, d_a))
    p[np.arange(d_a0), np.arange(d_a0)] = 1
    return [math.sqrt(d_a / d_a0) * p]


def gamma_of_map(kraus, d_a: int, d_a0: int) -> float:
    """``tr(F_{A0 A0'} (Phi (x) Phi)(F_{A A'}))`` for a CP map given by Kraus operators."""
    kraus = [np.asarray(k, complex) for k in kraus]
    if any(k.shape != (d_a0, d_a) for k in kraus):
        raise QuantumInputError("Kraus operators must map A to A0")
    img = apply_kraus(kraus, np.eye(d_a) / d_a)
    if np.abs(img - np.eye(d_a0) / d_a0).max() > 1e-10:
        raise QuantumInputError("map does not send I/d_A to I/d_A0")
    fa = swap_operator(d_a)
    kk = [np.kron(ki, kj) for ki in kraus for kj in kraus]
    out = apply_kraus(kk, fa)
    return float(np.trace(swap_operator(d_a0) @ out).real)


def conditional_w(rho_a0b, d_a0: int, d_b: int, alpha, tol=1e-7, restarts=2, rng=0) -> float:
    """``W_alpha(A0|B)`` for ``alpha`` in {1, 2}; ``rho`` on ``A0 (x) B``."""
    a = as_alpha(alpha).value
    rho_b = partial_trace(rho_a0b, (d_a0, d_b), [1])
    if a == 1:
        return schatten_norm(rho_a0b - np.kron(np.eye(d_a0) / d_a0, rho_b), 1)
    if a == 2:
        op = Operator(rho_a0b, (d_a0, d_b))
        return v2_w2_quantum(op, "W", tol=tol, restarts=restarts, rng=rng).value
    raise QuantumInputError("only alpha in {1, 2} is supported here")


@dataclass
class DecouplingMCReport:
    alpha: float
    gamma: float
    factor: float
    w_in: float
    rhs: float
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def stderr(self) -> float:
        return float(self.values.std(ddof=1) / math.sqrt(len(self.values))) if len(self.values) > 1 else 0.0

    @property
    def holds(self) -> bool:
        return self.mean <= self.rhs + 3 * self.stderr


def decoupling_mc(rho: DensityMatrix, kraus, d_a0: int, alpha, trials: int = 1000, rng=0,
                  restarts: int = 2, rhs_restarts: int = 16, workers: int = 1) -> DecouplingMCReport:
    """Haar average of ``W_alpha(A0|B)`` after ``Phi (x) id`` versus the decoupling bound.

    Per-trial values are optimizer upper bounds, which can only raise the mean.
    """
    a = as_alpha(alpha)
    if a.value not in (1.0, 2.0):
        raise QuantumInputError("alpha must be 1 or 2")
    d_a, d_b = rho.dims
    if d_a > 6 or d_b > 4:
        raise QuantumInputError("need d_A <= 6 and d_B <= 4")
    kraus = [np.asarray(k, complex) for k in kraus]
    gam = gamma_of_map(kraus, d_a, d_a0)
    factor = ((gam - d_a / d_a0) / (d_a ** 2 - 1)) ** a.inv_conjugate if a.value > 1 else 1.0
    w_in = conditional_w(rho.matrix, d_a, d_b, a, restarts=rhs_restarts, rng=12345)
    rhs = 2.0 ** (2.0 / a.value - 1.0) * factor * w_in
    kb = [np.kron(k, np.eye(d_b)) for k in kraus]
    seeded = as_seeded(rng)

    def one(i, gen):
        u = np.kron(haar_unitary(gen, d_a), np.eye(d_b))
        out = apply_kraus(kb, u @ rho.matrix @ u.conj().T)
        return conditional_w(out, d_a0, d_b, a, restarts=restarts, rng=gen)

    vals = np.array(map_trials(one, seeded, trials, workers))
    return DecouplingMCReport(a.value, gam, factor, w_in, rhs, vals)
