"""Block Renyi information over type classes, binning exponents and a tiny wiretap code."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .prob import (Channel, Distribution, JointDistribution, SizeError, TypeClassSpec,
                   as_seeded, compositions, entropy, map_trials, shannon_mi,
                   type_class_uniform_joint)
from .measures import as_alpha, csiszar_mi, sibson_mi, v_alpha
from .binning import (BinningTrialStats, apply_binning, exhaustive_feasible,
                      iter_regular_partitions, sample_regular_binning)
from . import simplex

LN2 = math.log(2.0)
MAX_JOINT_STATES = 5_000_000


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact block Sibson information through joint types

def _log_f_for_btype(row_counts, col_counts, logw_alpha):
    """log of sum over joint types N with the given margins of
    prod_b [N_B(b)! / prod_a N(a,b)!] * prod_{a,b} W(b|a)^{alpha N(a,b)}  (natural log).
    """
    na = len(row_counts)
    states = {tuple(row_counts): 0.0}
    work = 0
    for b, nb in enumerate(col_counts):
        lf_nb = gammaln(nb + 1)
        nxt: dict[tuple, list] = {}
        for rem, lv in states.items():
            for split in compositions(nb, na) if na > 1 else [(nb,)]:
                if any(s > r for s, r in zip(split, rem)):
                    continue
                term = lf_nb
                dead = False
                for a, s in enumerate(split):
                    if s:
                        lw = logw_alpha[a, b]
                        if lw == -math.inf:
                            dead = True
                            break
                        term += s * lw - gammaln(s + 1)
                if dead:
                    continue
                key = tuple(r - s for r, s in zip(rem, split))
                nxt.setdefault(key, []).append(lv + term)
                work += 1
        if work > MAX_JOINT_STATES:
            raise SizeError("joint-type enumeration exceeds budget")
        states = {k: float(logsumexp(v)) for k, v in nxt.items()}
    zero = tuple(0 for _ in row_counts)
    return states.get(zero, -math.inf)


def log2_sibson_block_norm(spec: TypeClassSpec, ch: Channel, alpha) -> float:
    """``(1/alpha') I_alpha(A^n; B^n)`` in bits for ``A^n`` uniform on the type class."""
    a = as_alpha(alpha).value
    if not 1 < a < math.inf:
        raise ValueError("block Sibson information needs finite alpha > 1")
    na, nb = ch.shape
    if spec.alphabet_size != na:
        raise ValueError("type alphabet does not match the channel")
    if max(na, nb) > 4 or spec.n > 40:
        raise SizeError("joint-type enumeration supports |A|,|B| <= 4 and n <= 40")
    with np.errstate(divide="ignore"):
        logw_alpha = a * np.log(ch.rows)
    n = spec.n
    log_t = float(gammaln(n + 1) - sum(gammaln(c + 1) for c in spec.counts))
    terms = []
    for col in compositions(n, nb):
        log_tb = float(gammaln(n + 1) - sum(gammaln(c + 1) for c in col))
        lf = _log_f_for_btype(spec.counts, col, logw_alpha)
        if lf > -math.inf:
            terms.append(log_tb + lf / a)
    total = float(logsumexp(terms)) - log_t / a
    return total / LN2


def block_sibson_mi(spec: TypeClassSpec, ch: Channel, alpha) -> float:
    """Exact ``(1/n) I_alpha(A^n; B^n)`` in bits per symbol."""
    a = as_alpha(alpha)
    return max(a.conjugate * log2_sibson_block_norm(spec, ch, a), 0.0) / spec.n


def block_sibson_mi_bruteforce(spec: TypeClassSpec, ch: Channel, alpha) -> float:
    """Same quantity by listing the type class explicitly; an oracle for small n."""
    _, joint = type_class_uniform_joint(spec, ch)
    return sibson_mi(joint, alpha) / spec.n


@dataclass
class BlockMIRecord:
    n: int
    block_mi: float
    limit: float

    @property
    def deviation(self) -> float:
        return abs(self.block_mi - self.limit)


def block_mi_ladder(p_a, ch: Channel, alpha, ns) -> list[BlockMIRecord]:
    j = ch.joint(np.asarray(p_a, float))
    limit = csiszar_mi(j, alpha, tol=1e-12).value
    return [BlockMIRecord(n, block_sibson_mi(TypeClassSpec.from_type(p_a, n), ch, alpha), limit)
            for n in ns]


# ---------------------------------------------------------------------------
# exponents

def binning_exponent(j: JointDistribution, R: float, alpha) -> float:
    a = as_alpha(alpha)
    ic = csiszar_mi(j, a, tol=1e-12).value
    return a.inv_conjugate * (entropy(j.p_a) - ic - R)


@dataclass
class ExponentCurve:
    rate: float
    alphas: np.ndarray
    values: np.ndarray
    alpha_star: float
    e_star: float
    at_boundary: bool


def exponent_curve(j: JointDistribution, R: float, alphas=None, tol: float = 1e-9) -> ExponentCurve:
    if alphas is None:
        alphas = np.linspace(1.0, 2.0, 21)
    alphas = np.asarray(alphas, float)
    vals = np.array([0.0 if a == 1 else binning_exponent(j, R, a) for a in alphas])
    opt = simplex.maximize_over_alpha(lambda a: 0.0 if a <= 1 else binning_exponent(j, R, a),
                                      1.0, 2.0, tol=tol)
    return ExponentCurve(R, alphas, vals, opt.alpha, max(opt.value, vals.max()), opt.at_boundary)


@dataclass
class OptimizedExponent:
    alpha: float
    value: float
    rhs: float
    at_boundary: bool

    @property
    def agrees(self) -> bool:
        return abs(self.value - self.rhs) <= 1e-3


def optimized_exponent(j: JointDistribution, R: float, tol: float = 1e-6) -> OptimizedExponent:
    res = simplex.minimax_exchange_check(j, R, tol)
    return OptimizedExponent(res.alpha_star, res.lhs, res.rhs, res.at_boundary)


def wiretap_exponent(px: Distribution, ch_y: Channel, ch_z: Channel, R: float, alpha) -> float:
    a = as_alpha(alpha)
    iy = shannon_mi(ch_y.joint(px))
    ic = csiszar_mi(ch_z.joint(px), a, tol=1e-12).value
    return a.inv_conjugate * (iy - ic - R)


def resolvability_alpha_form(j: JointDistribution, R_prime: float, alpha) -> float:
    a = as_alpha(alpha)
    if a.value == 1:
        return 0.0
    return a.inv_conjugate * (R_prime - sibson_mi(j, a))


def resolvability_lambda_form(j: JointDistribution, R_prime: float, lam: float) -> float:
    """``(lam/2) R' - log E_Y[(E[2^{lam/(2-lam) i(X;Y)} | Y])^{(2-lam)/2}]`` with i in bits."""
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    t = j.table
    pa, pb = j.p_a, j.p_b
    keep_b = pb > 0
    post = j.posterior_cols[:, keep_b]
    outer = np.outer(pa, pb[keep_b])
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(t[:, keep_b] > 0, np.log2(t[:, keep_b] / outer), 0.0)
    inner = (post * np.exp2(lam / (2 - lam) * dens)).sum(axis=0)
    outer_mean = (pb[keep_b] * inner ** ((2 - lam) / 2)).sum()
    return lam / 2 * R_prime - math.log2(outer_mean)


def resolvability_exponent_sibson(j: JointDistribution, R_prime: float, tol: float = 1e-9):
    """Maximum over alpha in [1, 2] of ``(1/alpha')(R' - I^s_alpha)``; returns an AlphaOpt."""
    if R_prime < 0:
        raise ValueError("R' must be non-negative")
    return simplex.maximize_over_alpha(lambda a: resolvability_alpha_form(j, R_prime, a),
                                       1.0, 2.0, tol=tol)


# ---------------------------------------------------------------------------
# finite-n certification of regular binning on a type class

@dataclass
class FiniteNReport:
    n: int
    k: int
    alpha: float
    rate: float
    stats: BinningTrialStats
    exact_mean: float | None
    bound_exact_v: float
    bound: float

    @property
    def holds(self) -> bool:
        ok = self.stats.mean <= self.bound + 3 * self.stats.stderr + 1e-12
        if self.exact_mean is not None:
            ok &= self.exact_mean <= self.bound + 1e-12
        return bool(ok)


def finite_n_binning_certify(spec: TypeClassSpec, ch: Channel, k: int, alpha, trials: int = 1000,
                             rng=0, workers: int = 1) -> FiniteNReport:
    """Mean ``V_alpha(A0; B^n)`` for random k-to-1 binning of the type class.

    ``bound`` is ``2^{2/alpha-1} k^{-1/alpha'} (2^{I_alpha(A^n;B^n)/alpha'} + 1)``
    with the exact block information; ``bound_exact_v`` uses the exact
    ``V_alpha(A^n; B^n)`` in place of the sandwich step.
    """
    a = as_alpha(alpha)
    rng = as_seeded(rng)
    if spec.size > 10_000:
        raise SizeError("type class too large for explicit enumeration")
    size = spec.size
    if size % k:
        raise ConfigError(f"k={k} does not divide |T_n| = {size}")
    _, joint = type_class_uniform_joint(spec, ch)
    pref = 2.0 ** (2.0 / a.value - 1.0) * k ** (-a.inv_conjugate)
    norm = log2_sibson_block_norm(spec, ch, a)
    bound = pref * (2.0 ** norm + 1.0)
    bound_v = pref * v_alpha(joint, a)

    def one(i, gen):
        return v_alpha(apply_binning(joint, sample_regular_binning(gen, size, k)), a)

    vals = np.array(map_trials(one, rng, trials, workers))
    exact = None
    if exhaustive_feasible(size, k):
        exact = float(np.mean([v_alpha(apply_binning(joint, f), a)
                               for f in iter_regular_partitions(size, k)]))
    rate = math.log2(size / k) / spec.n
    return FiniteNReport(spec.n, k, a.value, rate, BinningTrialStats(vals, rng.master_seed),
                         exact, bound_v, bound)


def exponent_rate_rows(p_a, ch: Channel, n: int, alpha, trials: int = 200, rng=0):
    """Rows ``(n, alpha, R, exponent, empirical_minus_log_mean/n)`` over all divisors k."""
    a = as_alpha(alpha)
    spec = TypeClassSpec.from_type(p_a, n)
    j = ch.joint(np.asarray(p_a, float))
    rows = []
    for k in range(1, spec.size + 1):
        if spec.size % k:
            continue
        rep = finite_n_binning_certify(spec, ch, k, a, trials, rng)
        mean = rep.exact_mean if rep.exact_mean is not None else rep.stats.mean
        emp = -math.log2(mean) / n if mean > 0 else math.inf
        rows.append((n, a.value, rep.rate, binning_exponent(j, rep.rate, a), emp))
    return rows


EXPONENT_COLUMNS = ("n", "alpha", "R", "exponent", "empirical_minus_log_mean/n")


def write_exponent_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("#schema=1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXPONENT_COLUMNS)
    for r in rows:
        w.writerow([str(r[0])] + [repr(float(x)) for x in r[1:]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# wiretap mini code

@dataclass(frozen=True)
class RateSplit:
    n: int
    k1: int
    k2: int
    k3: int
    constraints: dict = field(default_factory=dict, compare=False)

    @property
    def rates(self) -> tuple[float, float, float]:
        return tuple(math.log2(k) / self.n for k in (self.k1, self.k2, self.k3))

    @property
    def size(self) -> int:
        return self.k1 * self.k2 * self.k3


def _factor_triples(size: int):
    for k1 in range(2, size + 1):
        if size % k1:
            continue
        rest = size // k1
        for k2 in range(2, rest + 1):
            if rest % k2 == 0 and rest // k2 >= 2:
                yield k1, k2, rest // k2


def admissible_splits(px: Distribution, ch_y: Channel, ch_z: Channel, n: int, alpha) -> list[RateSplit]:
    """Every factorization ``k1 k2 k3 = |T_n(p_X)|`` (all factors >= 2) meeting
    ``R3 > H(X|Y)`` and ``R1 + R3 < H(X) - I^c_alpha(X;Z)``, with ``R_i = log2(k_i)/n``.
    """
    spec = TypeClassSpec.from_type(px.probs, n)
    jy = ch_y.joint(px)
    h_x = entropy(px.probs)
    h_xy = h_x - shannon_mi(jy)
    ic = csiszar_mi(ch_z.joint(px), alpha, tol=1e-12).value
    cap = h_x - ic
    out = []
    for k1, k2, k3 in _factor_triples(spec.size):
        r1, r3 = math.log2(k1) / n, math.log2(k3) / n
        if r3 > h_xy + 1e-12 and r1 + r3 < cap - 1e-12:
            out.append(RateSplit(n, k1, k2, k3, {"H(X|Y)": h_xy, "H(X)-Ic(X;Z)": cap,
                                                 "R1+R3": r1 + r3, "R3": r3}))
    return out


def choose_split(px: Distribution, ch_y: Channel, ch_z: Channel, n: int, alpha,
                 search: int = 12) -> RateSplit:
    """Admissible split with the largest message rate; ties go to the smaller k3.

    With no admissible split, the error names the nearest block lengths that have one.
    """
    try:
        splits = admissible_splits(px, ch_y, ch_z, n, alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if splits:
        return max(splits, key=lambda s: (s.k1, -s.k3))
    near = []
    for m in range(1, n + search + 1):
        if m == n:
            continue
        try:
            if admissible_splits(px, ch_y, ch_z, m, alpha):
                near.append(m)
        except ValueError:
            continue
    near.sort(key=lambda m: (abs(m - n), m))
    hint = f"; nearest feasible n: {near[0]}" if near else ""
    raise ConfigError(f"no admissible rate split at n={n}{hint}")


@dataclass
class WiretapReport:
    split: RateSplit
    alpha: float
    eps: float
    leakage: BinningTrialStats          # average over u of V_alpha(M; Z^n | U=u)
    error: BinningTrialStats            # average over u of ML error of X^n from (U, Y^n)
    joint_good: np.ndarray              # per trial: some u meets both conditions
    bound: float

    @property
    def leakage_ok(self) -> bool:
        return self.leakage.mean <= self.bound + 3 * self.leakage.stderr + 1e-12

    @property
    def joint_fraction(self) -> float:
        return float(np.mean(self.joint_good))


def wiretap_minicode_sim(px: Distribution, ch_y: Channel, ch_z: Channel, n: int,
                         split: RateSplit | None = None, alpha=2.0, trials: int = 200,
                         rng=0, eps: float = 0.1, workers: int = 1) -> WiretapReport:
    """Random relabelings ``X^n -> (M, G, U)`` of the type class, evaluated exactly.

    The leakage bound is ``2^{2(2/alpha-1)} k2^{-1/alpha'} (2^{I_alpha(X^n;Z^n)/alpha'} + 1)``:
    binning by ``(M, U)`` forgets ``G`` (a k2-to-1 map) and conditioning on the
    uniform ``U`` costs one more ``2^{2/alpha-1}``.
    """
    if n > 8:
        raise ConfigError("wiretap simulation supports n <= 8")
    a = as_alpha(alpha)
    rng = as_seeded(rng)
    if split is None:
        split = choose_split(px, ch_y, ch_z, n, a)
    spec = TypeClassSpec.from_type(px.probs, n)
    if split.size != spec.size or split.n != n:
        raise ConfigError(f"split does not factor |T_n| = {spec.size}")
    size = spec.size
    _, jz = type_class_uniform_joint(spec, ch_z)
    _, jy = type_class_uniform_joint(spec, ch_y)
    wz = jz.table * size
    wy = jy.table * size
    k1, k2, k3 = split.k1, split.k2, split.k3
    pref = 2.0 ** (2 * (2.0 / a.value - 1.0)) * k2 ** (-a.inv_conjugate)
    bound = pref * (2.0 ** log2_sibson_block_norm(spec, ch_z, a) + 1.0)

    def one(i, gen):
        perm = gen.permutation(size)        # codeword x has label perm[x]
        idx = np.argsort(perm)              # idx[label] = codeword
        labels = idx.reshape(k1, k2, k3)    # labels[m, g, u]
        leaks = np.empty(k3)
        errs = np.empty(k3)
        for u in range(k3):
            cw = labels[:, :, u]
            pmz = wz[cw].sum(axis=1) / (k1 * k2)
            leaks[u] = v_alpha(JointDistribution(pmz / pmz.sum()), a)
            py = wy[cw.ravel()] / (k1 * k2)
            errs[u] = 1.0 - py.max(axis=0).sum()
        good = bool(np.any((errs <= eps) & (leaks <= bound)))
        return leaks.mean(), errs.mean(), good

    res = map_trials(one, rng, trials, workers)
    leak = np.array([r[0] for r in res])
    err = np.clip(np.array([r[1] for r in res]), 0.0, 1.0)
    good = np.array([r[2] for r in res])
    return WiretapReport(split, a.value, eps, BinningTrialStats(leak, rng.master_seed),
                         BinningTrialStats(err, rng.master_seed), good, bound)
