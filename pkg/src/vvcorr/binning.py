"""Regular binning, linear hashing and the decoupling / privacy-amplification experiments."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .prob import JointDistribution, SeededRng, as_generator, as_seeded, map_trials, shannon_mi
from .measures import as_alpha, hayashi_cond_entropy, v_alpha, w_alpha, sibson_mi

EXHAUSTIVE_LIMIT = 100_000
CSV_COLUMNS = ("seed", "trial", "alpha", "k_or_ell", "v_alpha", "bound", "slack")


class BinningError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BinningMap:
    table: np.ndarray
    bin_size: int
    regularity: int | None = None
    tag: str = "regular"

    def __post_init__(self):
        t = np.array(self.table, dtype=np.int64)
        if t.ndim != 1 or t.size == 0:
            raise BinningError("map table must be a non-empty vector")
        if t.min() < 0 or t.max() >= self.bin_size:
            raise BinningError("bin index out of range")
        if self.regularity is not None:
            counts = np.bincount(t, minlength=self.bin_size)
            if np.any(counts != self.regularity):
                raise BinningError(f"map is not {self.regularity}-to-1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def source_size(self) -> int:
        return self.table.size

    @classmethod
    def identity(cls, size: int) -> "BinningMap":
        return cls(np.arange(size), size, 1)

    @classmethod
    def constant(cls, size: int) -> "BinningMap":
        return cls(np.zeros(size, dtype=np.int64), 1, size)


@dataclass
class BinningTrialStats:
    values: np.ndarray
    seed: int = 0

    @property
    def trials(self) -> int:
        return int(len(self.values))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def stderr(self) -> float:
        n = len(self.values)
        return float(np.std(self.values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    @property
    def minimum(self) -> float:
        return float(np.min(self.values))

    @property
    def maximum(self) -> float:
        return float(np.max(self.values))


def _check_divides(source_size: int, k: int) -> int:
    if k < 1 or source_size % k:
        raise BinningError(f"k={k} does not divide source size {source_size}")
    return source_size // k


def sample_regular_binning(rng, source_size: int, k: int) -> BinningMap:
    """Uniform k-to-1 map: random permutation followed by integer division by k."""
    m = _check_divides(source_size, k)
    perm = as_generator(rng).permutation(source_size)
    return BinningMap(perm // k, m, k)


def apply_binning(j: JointDistribution, f: BinningMap) -> JointDistribution:
    if f.source_size != j.shape[0]:
        raise BinningError("map source size does not match |A|")
    out = np.zeros((f.bin_size, j.shape[1]))
    np.add.at(out, f.table, j.table)
    return JointDistribution(out)


def labeled_map_count(source_size: int, k: int) -> int:
    m = _check_divides(source_size, k)
    return math.factorial(source_size) // math.factorial(k) ** m


def iter_regular_partitions(source_size: int, k: int) -> Iterator[BinningMap]:
    """Every k-to-1 map up to relabeling of bins, one per unordered partition.

    Any quantity invariant under bin relabeling has the same average over this
    list as over all labeled k-to-1 maps, since every partition has m! labelings.
    """
    m = _check_divides(source_size, k)
    labels = -np.ones(source_size, dtype=np.int64)

    def rec(block: int):
        if block == m:
            yield BinningMap(labels.copy(), m, k)
            return
        free = np.flatnonzero(labels < 0)
        first, rest = free[0], free[1:]
        labels[first] = block
        for combo in _combinations(rest, k - 1):
            labels[list(combo)] = block
            yield from rec(block + 1)
            labels[list(combo)] = -1
        labels[first] = -1

    yield from rec(0)


def _combinations(items, r):
    import itertools

    return itertools.combinations(items.tolist(), r)


def exhaustive_feasible(source_size: int, k: int, limit: int = EXHAUSTIVE_LIMIT) -> bool:
    return labeled_map_count(source_size, k) <= limit


def exhaustive_mean(j: JointDistribution, k: int, fn) -> float:
    vals = [fn(apply_binning(j, f)) for f in iter_regular_partitions(j.shape[0], k)]
    return float(np.mean(vals))


def _mc_values(j, k, fn, trials, rng: SeededRng, sampler=None, workers=1):
    if sampler is None:
        def sampler(gen):
            return sample_regular_binning(gen, j.shape[0], k)

    def one(i, gen):
        return fn(apply_binning(j, sampler(gen)))

    return np.array(map_trials(one, rng, trials, workers), dtype=float)


def _is_uniform(p, tol=1e-12) -> bool:
    return bool(np.abs(p - 1.0 / p.size).max() <= tol)


# ---------------------------------------------------------------------------
# decoupling for regular binning

@dataclass
class DecouplingReport:
    alpha: float
    k: int
    v_stats: BinningTrialStats | None
    w_stats: BinningTrialStats
    v_bound: float | None
    w_bound: float
    exact_v: float | None = None
    exact_w: float | None = None
    identity_residual: float = 0.0

    @property
    def holds(self) -> bool:
        ok = self.w_stats.mean <= self.w_bound + 3 * self.w_stats.stderr + 1e-12
        if self.exact_w is not None:
            ok &= self.exact_w <= self.w_bound + 1e-12
        if self.v_stats is not None:
            ok &= self.v_stats.mean <= self.v_bound + 3 * self.v_stats.stderr + 1e-12
            if self.exact_v is not None:
                ok &= self.exact_v <= self.v_bound + 1e-12
        return bool(ok)


def decoupling_bound_check(j: JointDistribution, k: int, alpha, trials: int = 1000,
                           rng=0, workers: int = 1) -> DecouplingReport:
    """Monte Carlo (and exact, when small) mean of ``W_alpha(A0|B)`` and ``V_alpha(A0;B)``.

    The W bound is ``2^{2/alpha-1} W_alpha(A|B)``. The V bound
    ``2^{2/alpha-1} k^{-1/alpha'} V_alpha(A;B)`` needs uniform ``p_A`` and is
    skipped otherwise.
    """
    a = as_alpha(alpha)
    rng = as_seeded(rng)
    na = j.shape[0]
    m = _check_divides(na, k)
    pref = 2.0 ** (2.0 / a.value - 1.0)
    uniform = _is_uniform(j.p_a)
    w_bound = pref * w_alpha(j, a)
    v_bound = pref * k ** (-a.inv_conjugate) * v_alpha(j, a) if uniform else None

    def pair(jb):
        return v_alpha(jb, a), w_alpha(jb, a)

    def one(i, gen):
        return pair(apply_binning(j, sample_regular_binning(gen, na, k)))

    vals = np.array(map_trials(one, rng, trials, workers), dtype=float).reshape(trials, 2)
    w_stats = BinningTrialStats(vals[:, 1], rng.master_seed)
    v_stats = BinningTrialStats(vals[:, 0], rng.master_seed) if uniform else None
    resid = 0.0
    if uniform:
        resid = float(np.abs(vals[:, 0] - m ** a.inv_conjugate * vals[:, 1]).max())
    rep = DecouplingReport(a.value, k, v_stats, w_stats, v_bound, w_bound, identity_residual=resid)
    if exhaustive_feasible(na, k):
        ex = np.array([pair(apply_binning(j, f)) for f in iter_regular_partitions(na, k)])
        rep.exact_w = float(ex[:, 1].mean())
        if uniform:
            rep.exact_v = float(ex[:, 0].mean())
    return rep


def erasure_tightness(sizes, k: int, alpha, eps: float = 0.5) -> list[tuple[int, float]]:
    """Ratio ``E_f V_alpha(A0;B) / V_alpha(A;B)`` for the uniform erasure family.

    Every k-to-1 map gives the same value on this family, so one map suffices.
    """
    from .prob import Channel

    out = []
    for size in sizes:
        j = Channel.erasure(size, eps).joint(np.full(size, 1.0 / size))
        f = BinningMap(np.arange(size) // k, size // k, k)
        out.append((size, v_alpha(apply_binning(j, f), alpha) / v_alpha(j, alpha)))
    return out


# ---------------------------------------------------------------------------
# linear hashing over GF(2)

def gf2_rank(rows: list[int]) -> int:
    rows = list(rows)
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


def sample_linear_hash(rng, k_bits: int, out_bits: int) -> BinningMap:
    """Uniformly random full-rank ``out_bits x k_bits`` matrix over GF(2), as a map on ints."""
    if not 0 <= out_bits <= k_bits <= 20:
        raise BinningError("need 0 <= out_bits <= k_bits <= 20")
    gen = as_generator(rng)
    while True:
        rows = [int(x) for x in gen.integers(0, 2 ** k_bits, size=out_bits)]
        if gf2_rank(rows) == out_bits:
            break
    src = np.arange(2 ** k_bits, dtype=np.int64)
    out = np.zeros_like(src)
    for i, r in enumerate(rows):
        parity = np.zeros_like(src)
        x = src & r
        while np.any(x):
            parity ^= x & 1
            x >>= 1
        out |= parity << i
    return BinningMap(out, 2 ** out_bits, 2 ** (k_bits - out_bits), tag="hash")


# ---------------------------------------------------------------------------
# privacy amplification

@dataclass
class PrivacyAmpReport:
    alpha: float
    ell: int
    key_bits: int
    v_stats: BinningTrialStats
    tv_stats: BinningTrialStats
    v_bound: float
    tv_bound: float
    tv_bound_alpha2: float | None

    @property
    def mean_ok(self) -> bool:
        return self.v_stats.mean <= self.v_bound + 3 * self.v_stats.stderr

    @property
    def existence_ok(self) -> bool:
        return self.v_stats.minimum <= self.v_bound and self.tv_stats.minimum <= self.tv_bound

    @property
    def tv_ok(self) -> bool:
        ok = self.tv_stats.mean <= self.tv_bound + 3 * self.tv_stats.stderr
        if self.tv_bound_alpha2 is not None:
            ok &= self.tv_stats.mean <= self.tv_bound_alpha2 + 3 * self.tv_stats.stderr
        return bool(ok)

    @property
    def holds(self) -> bool:
        return bool(self.mean_ok and self.existence_ok and self.tv_ok)


def privacy_amp_experiment(j: JointDistribution, ell: int, alpha, trials: int = 1000,
                           rng=0, family: str = "regular", workers: int = 1) -> PrivacyAmpReport:
    """Shorten a uniform ``k``-bit key by ``ell`` bits with random 2^ell-to-1 maps."""
    a = as_alpha(alpha)
    rng = as_seeded(rng)
    na = j.shape[0]
    kb = int(round(math.log2(na)))
    if 2 ** kb != na or not _is_uniform(j.p_a):
        raise BinningError("privacy amplification needs uniform A on {0,1}^k")
    if kb > 12 or not 0 <= ell <= kb:
        raise BinningError("need k <= 12 and 0 <= ell <= k")
    ap_inv = a.inv_conjugate
    v_bound = 2.0 ** (2.0 / a.value - 1.0) * 2.0 ** (-ell * ap_inv) * v_alpha(j, a)
    tv_bound = 2.0 ** (-ell * ap_inv) * (2.0 ** (ap_inv * sibson_mi(j, a)) + 1.0)
    tv2 = 2.0 ** (-ell / 2) * 2.0 ** (sibson_mi(j, 2) / 2) if a.value == 2 else None

    def sampler(gen):
        if family == "hash":
            return sample_linear_hash(gen, kb, kb - ell)
        return sample_regular_binning(gen, na, 2 ** ell)

    def one(i, gen):
        jb = apply_binning(j, sampler(gen))
        return v_alpha(jb, a), v_alpha(jb, 1)

    vals = np.array(map_trials(one, rng, trials, workers), dtype=float).reshape(trials, 2)
    return PrivacyAmpReport(a.value, ell, kb, BinningTrialStats(vals[:, 0], rng.master_seed),
                            BinningTrialStats(vals[:, 1], rng.master_seed), v_bound, tv_bound, tv2)


def log_slope(ells, means) -> float:
    """Least-squares slope of ``log2(mean)`` against ``ell``."""
    x = np.asarray(ells, float)
    y = np.log2(np.asarray(means, float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# comparison with the collision-entropy bound

@dataclass
class HayashiReport:
    lhs_mean: float
    lhs_stderr: float
    rhs: float
    exact_lhs: float | None

    @property
    def holds(self) -> bool:
        ok = self.lhs_mean <= self.rhs + 3 * self.lhs_stderr + 1e-12
        if self.exact_lhs is not None:
            ok &= self.exact_lhs <= self.rhs + 1e-12
        return bool(ok)


def hayashi_comparison(j: JointDistribution, k: int, alpha, trials: int = 1000, rng=0,
                       workers: int = 1) -> HayashiReport:
    """Mean of ``2^{-H~_alpha(A0|B)}`` against ``2^{-H~_alpha(A|B)} + |A0|^{1-alpha}``."""
    a = as_alpha(alpha).value
    if not 1 < a <= 2:
        raise BinningError("alpha must lie in (1, 2]")
    rng = as_seeded(rng)
    m = _check_divides(j.shape[0], k)
    rhs = 2.0 ** (-hayashi_cond_entropy(j, a)) + m ** (1.0 - a)

    def fn(jb):
        return 2.0 ** (-hayashi_cond_entropy(jb, a))

    vals = _mc_values(j, k, fn, trials, rng, workers=workers)
    stats = BinningTrialStats(vals, rng.master_seed)
    exact = exhaustive_mean(j, k, fn) if exhaustive_feasible(j.shape[0], k) else None
    return HayashiReport(stats.mean, stats.stderr, rhs, exact)


# ---------------------------------------------------------------------------
# bit dropping

def drop_bit_map(k_bits: int, i: int) -> BinningMap:
    src = np.arange(2 ** k_bits, dtype=np.int64)
    low = src & ((1 << i) - 1)
    high = src >> (i + 1)
    return BinningMap((high << i) | low, 2 ** (k_bits - 1), 2, tag="drop")


@dataclass
class ShearerReport:
    best_dropped_bit: int
    best_subset: tuple[int, ...]
    values: list[float]
    full_mi: float
    ratio: float
    bound: float

    @property
    def holds(self) -> bool:
        return min(self.values) <= self.bound + 1e-9


def shearer_search(j: JointDistribution) -> ShearerReport:
    """Try every single-bit deletion and keep the one with least ``I(A_S;B)``."""
    na = j.shape[0]
    kb = int(round(math.log2(na)))
    if 2 ** kb != na or not _is_uniform(j.p_a) or kb < 1 or kb > 12:
        raise BinningError("need uniform A on {0,1}^k with 1 <= k <= 12")
    full = shannon_mi(j)
    vals = [shannon_mi(apply_binning(j, drop_bit_map(kb, i))) for i in range(kb)]
    best = int(np.argmin(vals))
    ratio = vals[best] / full if full > 0 else 0.0
    subset = tuple(b for b in range(kb) if b != best)
    return ShearerReport(best, subset, vals, full, ratio, (kb - 1) / kb * full)


# ---------------------------------------------------------------------------
# CSV logs

def trial_rows(stats: BinningTrialStats, alpha: float, k_or_ell: int, bound: float):
    for i, v in enumerate(stats.values):
        yield (stats.seed, i, alpha, k_or_ell, float(v), bound, bound - float(v))


def write_trial_csv(rows, fh=None) -> str:
    buf = io.StringIO() if fh is None else fh
    buf.write("#schema=1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue() if fh is None else ""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))
