"""Finite probability objects, type classes and seeded randomness.

Everything here is immutable once built. Tables are stored as float64 numpy
arrays with the writeable flag cleared, so they can be shared freely between
threads.

Conventions
-----------
* A joint table has rows indexed by the first variable ``A`` and columns by
  the second variable ``B``.
* A channel is a row-stochastic matrix ``W[a, b] = p(b|a)``.
* Conditioning on a zero-probability row yields the uniform distribution; the
  row is flagged as degenerate. Measures weight such rows by ``p(a) = 0`` so
  the choice never changes a value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

PROB_TOL = 1e-12
PARSE_TOL = 1e-9
DEFAULT_BUDGET = 2_000_000


class SizeError(ValueError):
    """Raised when an explicit enumeration would exceed the memory budget."""


class TypeSpecError(ValueError):
    """Raised for malformed type-class specifications."""


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_probs(arr: np.ndarray, tol: float, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{what} has negative entries")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"{what} sums to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class Distribution:
    probs: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.probs)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("distribution must be a non-empty vector")
        _check_probs(arr, PROB_TOL, "distribution")
        object.__setattr__(self, "probs", arr)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))

    def entropy(self) -> float:
        return entropy(self.probs)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic conditional table ``rows[a, b] = p(b|a)``."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.rows)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError("channel must be a non-empty matrix")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("channel has negative or non-finite entries")
        dev = np.abs(arr.sum(axis=1) - 1.0).max()
        if dev > PROB_TOL:
            raise ValueError(f"channel rows deviate from 1 by {dev!r}")
        object.__setattr__(self, "rows", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    def joint(self, p_a: Distribution | np.ndarray) -> "JointDistribution":
        pa = p_a.probs if isinstance(p_a, Distribution) else np.asarray(p_a, float)
        return JointDistribution(pa[:, None] * self.rows)

    def compose(self, other: "Channel") -> "Channel":
        """Return the cascade ``self`` followed by ``other``."""
        return Channel(self.rows @ other.rows)

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls(np.eye(size))

    @classmethod
    def bsc(cls, flip: float) -> "Channel":
        return cls([[1 - flip, flip], [flip, 1 - flip]])

    @classmethod
    def erasure(cls, size: int, eps: float) -> "Channel":
        """Erasure channel on ``size`` symbols; the erasure symbol is the last column."""
        rows = np.zeros((size, size + 1))
        rows[np.arange(size), np.arange(size)] = 1 - eps
        rows[:, size] = eps
        return cls(rows)

    @classmethod
    def constant(cls, n_in: int, out: Sequence[float]) -> "Channel":
        return cls(np.tile(np.asarray(out, float), (n_in, 1)))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    table: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.table)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError("joint table must be a non-empty matrix")
        _check_probs(arr, PROB_TOL, "joint table")
        object.__setattr__(self, "table", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape

    @cached_property
    def p_a(self) -> np.ndarray:
        return _frozen(self.table.sum(axis=1))

    @cached_property
    def p_b(self) -> np.ndarray:
        return _frozen(self.table.sum(axis=0))

    @cached_property
    def _cond(self) -> tuple[np.ndarray, np.ndarray]:
        return _row_normalize(self.table)

    @property
    def channel_rows(self) -> np.ndarray:
        """``p(b|a)`` as an array; zero rows are uniform."""
        return self._cond[0]

    @property
    def degenerate_rows(self) -> np.ndarray:
        return self._cond[1]

    @cached_property
    def posterior_cols(self) -> np.ndarray:
        """``p(a|b)`` laid out as ``[a, b]``; zero columns are uniform."""
        cond, _ = _row_normalize(self.table.T)
        return _frozen(cond.T)

    def channel(self) -> Channel:
        return Channel(self.channel_rows)

    def transpose(self) -> "JointDistribution":
        return JointDistribution(self.table.T)

    def marginal_a(self) -> Distribution:
        return Distribution(self.p_a)

    def marginal_b(self) -> Distribution:
        return Distribution(self.p_b)

    def process(self, phi: Channel | None = None, psi: Channel | None = None) -> "JointDistribution":
        """Push ``A`` through ``phi`` and ``B`` through ``psi``."""
        t = self.table
        if phi is not None:
            t = phi.rows.T @ t
        if psi is not None:
            t = t @ psi.rows
        t = np.clip(t, 0.0, None)
        return JointDistribution(t / t.sum())

    @classmethod
    def product(cls, p_a, p_b) -> "JointDistribution":
        return cls(np.outer(np.asarray(p_a, float), np.asarray(p_b, float)))

    @classmethod
    def identity_coupling(cls, p_a) -> "JointDistribution":
        return cls(np.diag(np.asarray(p_a, float)))


def _row_normalize(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sums = table.sum(axis=1)
    degenerate = sums <= 0
    out = np.empty_like(table)
    ok = ~degenerate
    out[ok] = table[ok] / sums[ok, None]
    out[degenerate] = 1.0 / table.shape[1]
    return _frozen(out), _frozen(degenerate).astype(bool)


def marginals(j: JointDistribution) -> tuple[Distribution, Distribution]:
    return j.marginal_a(), j.marginal_b()


def entropy(p) -> float:
    """Shannon entropy in bits."""
    p = np.asarray(p, float).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def shannon_mi(j: JointDistribution) -> float:
    t = j.table
    outer = np.outer(j.p_a, j.p_b)
    nz = t > 0
    return float(max((t[nz] * np.log2(t[nz] / outer[nz])).sum(), 0.0))


def cond_entropy(j: JointDistribution) -> float:
    """H(A|B) in bits."""
    return entropy(j.table) - entropy(j.p_b)


def kl_divergence(p, q) -> float:
    """D(p||q) in bits; infinite when supp p is not inside supp q."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    nz = p > 0
    if np.any(q[nz] <= 0):
        return math.inf
    return float((p[nz] * np.log2(p[nz] / q[nz])).sum())


# ---------------------------------------------------------------------------
# text format

def parse_joint(text: str) -> JointDistribution:
    """Parse ``"<|A|> <|B|>"`` followed by ``|A|`` rows of ``|B|`` numbers."""
    lines = [ln for ln in (l.split("#", 1)[0].strip() for l in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty distribution file")
    try:
        dims = [int(x) for x in lines[0].split()]
    except ValueError as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    if len(dims) != 2 or min(dims) < 1:
        raise ValueError(f"header must hold two positive sizes, got {lines[0]!r}")
    na, nb = dims
    rows = lines[1:]
    if len(rows) != na:
        raise ValueError(f"expected {na} rows, found {len(rows)}")
    table = np.empty((na, nb))
    for i, row in enumerate(rows):
        vals = row.split()
        if len(vals) != nb:
            raise ValueError(f"row {i} has {len(vals)} entries, expected {nb}")
        table[i] = [float(v) for v in vals]
    if np.any(table < 0):
        raise ValueError("negative probability in distribution file")
    total = table.sum()
    if abs(total - 1.0) > PARSE_TOL:
        raise ValueError(f"probabilities sum to {total!r}")
    return JointDistribution(table / total)


def format_joint(j: JointDistribution) -> str:
    na, nb = j.shape
    lines = [f"{na} {nb}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in j.table]
    return "\n".join(lines) + "\n"


def load_joint(path) -> JointDistribution:
    with open(path, encoding="utf-8") as fh:
        return parse_joint(fh.read())


# ---------------------------------------------------------------------------
# i.i.d. extensions and type classes

def iid_extension(j: JointDistribution, n: int, budget: int = DEFAULT_BUDGET) -> JointDistribution:
    """Joint of ``(A^n, B^n)`` in lexicographic sequence order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    na, nb = j.shape
    if (na * nb) ** n > budget:
        raise SizeError(f"{na}^{n} x {nb}^{n} table exceeds budget {budget}")
    t = j.table
    for _ in range(n - 1):
        t = np.einsum("ab,cd->acbd", t, j.table).reshape(t.shape[0] * na, t.shape[1] * nb)
    return JointDistribution(t)


def log2_multinomial(counts) -> float:
    counts = np.asarray(counts)
    return float((gammaln(counts.sum() + 1) - gammaln(counts + 1).sum()) / math.log(2))


@dataclass(frozen=True, eq=False)
class TypeClassSpec:
    """The type class of length-``n`` sequences with the given symbol counts."""

    counts: tuple[int, ...]
    base_type: Distribution = field(init=False)

    def __post_init__(self):
        raw = tuple(self.counts)
        if not raw:
            raise TypeSpecError("counts must be non-empty")
        for c in raw:
            if isinstance(c, (bool, np.bool_)) or not float(c).is_integer() or c < 0:
                raise TypeSpecError(f"counts must be non-negative integers, got {raw}")
        counts = tuple(int(c) for c in raw)
        if sum(counts) == 0:
            raise TypeSpecError("counts must sum to n >= 1")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "base_type", Distribution(np.array(counts) / sum(counts)))

    @classmethod
    def from_type(cls, p, n: int) -> "TypeClassSpec":
        target = np.asarray(p, float) * n
        rounded = np.rint(target)
        if np.abs(target - rounded).max() > 1e-9:
            raise TypeSpecError(f"n*p is not integral for n={n}, p={list(p)}")
        return cls(tuple(int(c) for c in rounded))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @property
    def log_size(self) -> float:
        """log2 |T_n(p)|."""
        return log2_multinomial(self.counts)

    @property
    def size(self) -> int:
        return math.factorial(self.n) // math.prod(math.factorial(c) for c in self.counts)

    def sequences(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """All sequences of the class, lexicographically sorted, one per row."""
        if self.size > budget:
            raise SizeError(f"|T_n| = {self.size} exceeds budget {budget}")
        out = []
        _fill_sequences(list(self.counts), [], self.n, out)
        return np.array(out, dtype=np.int64).reshape(len(out), self.n)


def _fill_sequences(remaining: list[int], prefix: list[int], n: int, out: list) -> None:
    if len(prefix) == n:
        out.append(tuple(prefix))
        return
    for a, c in enumerate(remaining):
        if c:
            remaining[a] -= 1
            prefix.append(a)
            _fill_sequences(remaining, prefix, n, out)
            prefix.pop()
            remaining[a] += 1


def compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ordered tuples of ``parts`` non-negative integers summing to ``n``."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def enumerate_types(alphabet: int, n: int) -> list[TypeClassSpec]:
    """Every type of length-``n`` sequences over ``alphabet`` symbols."""
    if alphabet < 1 or n < 1:
        raise ValueError("alphabet and n must be positive")
    return [TypeClassSpec(c) for c in compositions(n, alphabet)]


def sequence_channel(ch: Channel, n: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``p(b^n|a^n)`` for all input/output sequences (lexicographic order)."""
    na, nb = ch.shape
    if (na * nb) ** n > budget:
        raise SizeError("sequence channel exceeds budget")
    w = ch.rows
    for _ in range(n - 1):
        w = np.kron(w, ch.rows)
    return w


def type_class_uniform_joint(spec: TypeClassSpec, ch: Channel,
                             budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, JointDistribution]:
    """Return the type-class sequences and the joint of ``(A^n, B^n)``.

    Rows of the joint follow the order of the returned sequences; columns are
    output sequences in lexicographic order.
    """
    if spec.alphabet_size != ch.shape[0]:
        raise TypeSpecError("type alphabet does not match channel input size")
    seqs = spec.sequences(budget)
    n = spec.n
    nb = ch.shape[1]
    if len(seqs) * nb ** n > budget:
        raise SizeError("type-class joint exceeds budget")
    out_seqs = np.array(list(itertools.product(range(nb), repeat=n)), dtype=np.int64)
    logw = np.log(np.where(ch.rows > 0, ch.rows, 1.0))
    zero = ch.rows <= 0
    cond = np.zeros((len(seqs), len(out_seqs)))
    for i, s in enumerate(seqs):
        lw = logw[s[None, :], out_seqs].sum(axis=1)
        dead = zero[s[None, :], out_seqs].any(axis=1)
        cond[i] = np.where(dead, 0.0, np.exp(lw))
    table = cond / len(seqs)
    return seqs, JointDistribution(table / table.sum())


# ---------------------------------------------------------------------------
# randomness

@dataclass(frozen=True)
class SeededRng:
    """Counter-based generator streams keyed by ``(master_seed, stream_index)``.

    ``trial(i)`` depends only on the triple ``(master_seed, stream_index, i)``,
    so serial and parallel runs draw identical numbers.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master seed must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([int(self.master_seed), int(self.stream_index)])

    def trial(self, index: int) -> np.random.Generator:
        return np.random.default_rng([int(self.master_seed), int(self.stream_index), int(index)])

    def child(self, offset: int) -> "SeededRng":
        return SeededRng(self.master_seed, self.stream_index * 1_000_003 + offset + 1)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    return np.random.default_rng(rng)


def random_joint(rng, sizes: tuple[int, int], concentration: float = 1.0) -> JointDistribution:
    """A strictly positive random joint table (Dirichlet, smoothed to >= 1e-9)."""
    gen = as_generator(rng)
    na, nb = sizes
    if na < 1 or nb < 1:
        raise ValueError("sizes must be >= 1")
    flat = gen.dirichlet(np.full(na * nb, float(concentration)))
    flat = np.maximum(flat, 1e-9)
    flat /= flat.sum()
    return JointDistribution(flat.reshape(na, nb))


def random_channel(rng, n_in: int, n_out: int, concentration: float = 1.0) -> Channel:
    gen = as_generator(rng)
    rows = gen.dirichlet(np.full(n_out, float(concentration)), size=n_in)
    rows = np.maximum(rows, 1e-12)
    return Channel(rows / rows.sum(axis=1, keepdims=True))


def random_distribution(rng, size: int, concentration: float = 1.0) -> Distribution:
    gen = as_generator(rng)
    p = np.maximum(gen.dirichlet(np.full(size, float(concentration))), 1e-12)
    return Distribution(p / p.sum())


def map_trials(fn, rng: SeededRng, trials: int, workers: int = 1) -> list:
    """Evaluate ``fn(index, generator)`` for every trial, ordered by index.

    Each trial gets its own generator keyed by the trial index, so the result
    does not depend on ``workers``.
    """
    if workers <= 1:
        return [fn(i, rng.trial(i)) for i in range(trials)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: fn(i, rng.trial(i)), range(trials)))


def as_seeded(rng) -> SeededRng:
    if isinstance(rng, SeededRng):
        return rng
    if rng is None:
        return SeededRng(0)
    return SeededRng(int(rng))
