"""Randomized property suites shared by the test-suite and ``vvcorr selftest``.

Each suite returns a :class:`CheckResult` counting violations beyond a slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import measures as M
from .prob import (Distribution, JointDistribution, SeededRng, as_seeded, random_channel,
                   random_distribution, random_joint)

SLACK = 1e-9


@dataclass
class CheckResult:
    name: str
    cases: int
    violations: int
    worst: float            # largest excess of lhs over rhs seen

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.cases} cases, {self.violations} violations, worst excess {self.worst:.3e}"


class _Tally:
    def __init__(self, name, slack=SLACK):
        self.name, self.slack = name, slack
        self.cases = self.violations = 0
        self.worst = -math.inf

    def le(self, lhs, rhs):
        """Record the check ``lhs <= rhs``."""
        ex = float(lhs - rhs)
        self.worst = max(self.worst, ex)
        if ex > self.slack:
            self.violations += 1

    def done(self) -> CheckResult:
        return CheckResult(self.name, self.cases, self.violations, self.worst)


def _sizes(gen, lo=2, hi=5):
    return int(gen.integers(lo, hi + 1)), int(gen.integers(lo, hi + 1))


def _concentration(gen):
    return float(gen.choice([0.2, 1.0, 5.0]))


def sandwich_monotonicity_suite(cases: int = 10_000, rng=0) -> CheckResult:
    """Monotonicity of V and scaled W in alpha, the Sibson sandwich and its sharper alpha=2 form."""
    t = _Tally("sandwich/monotonicity")
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        j = random_joint(gen, _sizes(gen), _concentration(gen))
        a1, a2 = np.sort(gen.uniform(1.0, 4.0, size=2))
        na = j.shape[0]
        t.le(M.v_alpha(j, a1), M.v_alpha(j, a2))
        t.le(na ** (1 - 1 / a1) * M.w_alpha(j, a1), na ** (1 - 1 / a2) * M.w_alpha(j, a2))
        a = float(gen.uniform(1.0, 2.0)) + 1e-6
        s = 2.0 ** ((1 - 1 / a) * M.sibson_mi(j, a))
        v = M.v_alpha(j, a)
        t.le(s - 1, v)
        t.le(v, s + 1)
        s2 = 2.0 ** (0.5 * M.sibson_mi(j, 2))
        v2 = M.v_alpha(j, 2)
        t.le(v2, s2)
        t.le(s2 - 1, v2)
        t.cases += 1
    return t.done()


def dpi_suite(cases: int = 1000, rng=0, fmi: bool = True) -> CheckResult:
    """Data processing for V, W (B-side only) and f-MIs on chains C - A - B - D."""
    t = _Tally("data processing")
    seeded = as_seeded(rng)
    fkl = M.kl_function()
    for i in range(cases):
        gen = seeded.trial(i)
        j = random_joint(gen, _sizes(gen, 2, 4), _concentration(gen))
        na, nb = j.shape
        phi = random_channel(gen, na, int(gen.integers(2, 5)), _concentration(gen))
        psi = random_channel(gen, nb, int(gen.integers(2, 5)), _concentration(gen))
        a = float(gen.choice([1.0, 1.5, 2.0, 3.0, math.inf]))
        jp = j.process(phi, psi)
        t.le(M.v_alpha(jp, a), M.v_alpha(j, a) + 1e-12)
        if not math.isinf(a):
            t.le(M.w_alpha(j.process(None, psi), a), M.w_alpha(j, a) + 1e-12)
        if fmi:
            # closed forms of I_f for both function families; every tenth case
            # also runs the generic minimizer against them
            fa = float(gen.choice([1.5, 2.0]))
            for phi_a, psi_b in ((phi, None), (None, psi)):
                jq = j.process(phi_a, psi_b)
                t.le(M.tsallis_mi(jq, fa), M.tsallis_mi(j, fa) + 1e-12)
                t.le(M.shannon_mi(jq), M.shannon_mi(j) + 1e-12)
            if i % 10 == 0:
                t.le(abs(M.f_mutual_information(j, M.tsallis_function(fa), tol=1e-10).value
                         - M.tsallis_mi(j, fa)), 0.0)
                t.le(abs(M.f_mutual_information(j, fkl, tol=1e-10).value - M.shannon_mi(j)), 0.0)
        t.cases += 1
    return t.done()


def fmi_ordering_suite(cases: int = 200, rng=0) -> CheckResult:
    t = _Tally("f-MI ordering")
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        j = random_joint(gen, _sizes(gen, 2, 4), _concentration(gen))
        fs = M.tsallis_function(float(gen.choice([1.5, 2.0]))) if i % 2 else M.kl_function()
        ifm = M.f_mutual_information(j, fs, tol=1e-10).value
        pv = M.f_mi_pv(j, fs, tol=1e-10).value
        ckz = M.f_mi_ckz(j, fs)
        t.le(ifm, pv)
        t.le(pv, ckz)
        t.cases += 1
    return t.done()


def tsallis_identity_suite(cases: int = 1000, rng=0, tol: float = 1e-10) -> CheckResult:
    """``sqrt(tsallis_mi(j, 2)) == v_alpha(j, 2)``; the recorded excess is the absolute difference."""
    t = _Tally("tsallis identity", slack=tol)
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        j = random_joint(gen, _sizes(gen, 2, 6), _concentration(gen))
        t.le(abs(math.sqrt(M.tsallis_mi(j, 2)) - M.v_alpha(j, 2)), 0.0)
        t.cases += 1
    return t.done()


def semantic_security_suite(cases: int = 1000, rng=0) -> CheckResult:
    t = _Tally("semantic security")
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        na, nb = _sizes(gen, 2, 5)
        ch = random_channel(gen, na, nb, _concentration(gen))
        pa = random_distribution(gen, na, _concentration(gen))
        qa = random_distribution(gen, na, _concentration(gen))
        if i % 3 == 0:
            # q_A concentrated on part of supp(p_A)
            q = qa.probs.copy()
            q[gen.integers(na)] = 0.0
            qa = Distribution(q / q.sum())
        lhs, rhs = M.semantic_security_gap(ch, pa, qa)
        t.le(lhs, rhs)
        t.cases += 1
    return t.done()


def conditional_suite(cases: int = 500, rng=0) -> CheckResult:
    """Conditional V inequalities with A, C independent and uniform."""
    t = _Tally("conditional V")
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        na, nc, nb = int(gen.integers(2, 4)), int(gen.integers(2, 4)), int(gen.integers(2, 5))
        w = gen.dirichlet(np.full(nb, _concentration(gen)), size=(na, nc))
        p = w / (na * nc)
        a = float(gen.choice([1.0, 1.25, 1.5, 2.0, 3.0]))
        cond = M.conditional_v_alpha(p, a)
        merged = M.v_alpha_merged(p, a)
        side = M.v_alpha_side(p, a)
        if a <= 2:
            t.le(cond, 2.0 ** (2 / a - 1) * merged)
        # the |C| exponent is +1/alpha' after rescaling the W-form triangle
        # inequality; with a minus sign it already fails for B = A
        t.le(merged, nc ** (1 - 1 / a) * cond + side)
        t.cases += 1
    return t.done()


def csiszar_suite(cases: int = 200, rng=0, gap_tol: float = 1e-6) -> CheckResult:
    """Duality gap of the Csiszar routine; the recorded excess is the gap itself."""
    t = _Tally("csiszar duality gap", slack=gap_tol)
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        na, nb = _sizes(gen, 2, 5)
        ch = random_channel(gen, na, nb, _concentration(gen))
        pa = random_distribution(gen, na)
        a = [1.25, 1.5, 2.0][i % 3]
        res = M.csiszar_mi(ch.joint(pa), a)
        t.le(res.certificate.gap, 0.0)
        t.cases += 1
    return t.done()


def swap_identity_suite(cases: int = 100, rng=0) -> CheckResult:
    from .quantum import swap_operator

    t = _Tally("swap identity", slack=1e-12)
    seeded = as_seeded(rng)
    for i in range(cases):
        gen = seeded.trial(i)
        d = int(gen.integers(1, 5))
        m = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
        n = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
        lhs = np.trace(swap_operator(d) @ np.kron(m, n))
        t.le(abs(lhs - np.trace(m @ n)), 0.0)
        t.cases += 1
    return t.done()


def erasure_closed_form_suite(tol: float = 1e-12) -> CheckResult:
    """V and W of a uniform input through an erasure channel against their closed forms."""
    from .prob import Channel

    t = _Tally("erasure closed forms", slack=tol)
    for eps in (0.1, 0.5, 0.9):
        for size in (2, 4, 8):
            j = Channel.erasure(size, eps).joint(np.full(size, 1.0 / size))
            for a in (1.2, 1.5, 2.0):
                t.le(abs(M.v_alpha(j, a) - M.erasure_v_closed_form(size, eps, a)), 0.0)
                t.le(abs(M.w_alpha(j, a) - M.erasure_w_closed_form(size, eps, a)), 0.0)
                t.cases += 1
    return t.done()


def exact_decoupling_suite() -> CheckResult:
    """Exhaustive 2-to-1 binning of a uniform 4-symbol ``A`` observed exactly by ``B``."""
    from .binning import decoupling_bound_check
    from .prob import JointDistribution

    t = _Tally("exact decoupling", slack=1e-12)
    j = JointDistribution.identity_coupling(np.full(4, 0.25))
    rep = decoupling_bound_check(j, 2, 2.0, trials=10, rng=0)
    t.le(abs(rep.exact_v - 1.0), 0.0)
    t.le(rep.exact_v, rep.v_bound)
    t.cases = 1
    return t.done()


def run_all(seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    """Every suite at reduced size ``scale`` (1.0 = the acceptance sizes)."""
    s = lambda n: max(int(n * scale), 1)
    root = SeededRng(seed)
    return [
        sandwich_monotonicity_suite(s(10_000), root.child(1)),
        dpi_suite(s(1000), root.child(2)),
        fmi_ordering_suite(s(200), root.child(3)),
        tsallis_identity_suite(s(1000), root.child(4)),
        semantic_security_suite(s(1000), root.child(5)),
        conditional_suite(s(500), root.child(6)),
        csiszar_suite(s(200), root.child(7)),
        swap_identity_suite(s(100), root.child(8)),
        erasure_closed_form_suite(),
        exact_decoupling_suite(),
    ]
