"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from vvcorr import binning, checks, exponents, measures, quantum, simplex
from vvcorr.prob import (Channel, JointDistribution, SeededRng, random_channel, random_distribution,
                         random_joint)

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_01_erasure_closed_forms(report_criterion):
    def work():
        res = checks.erasure_closed_form_suite(tol=1e-12)
        j = Channel.erasure(2, 0.5).joint([0.5, 0.5])
        return res, measures.v_alpha(j, 2), measures.w_alpha(j, 2)

    (res, v2, w2), dt = timed(work)
    ok = (res.passed and res.cases == 27 and abs(v2 - 0.5) <= 1e-12
          and abs(w2 - math.sqrt(2) / 4) <= 1e-12 and dt < 1.0)
    report_criterion(1, ok, f"{res.cases} cases, max |err| {max(res.worst, 0):.1e}, V2={v2!r}, W2={w2!r}, {dt:.2f}s")
    assert ok


def test_criterion_02_tsallis_identity(report_criterion):
    res, dt = timed(lambda: checks.tsallis_identity_suite(1000, rng=SeededRng(2), tol=1e-10))
    ok = res.passed and res.cases == 1000 and dt < 5.0
    report_criterion(2, ok, f"{res.cases} joints, max |err| {res.worst:.1e}, {dt:.2f}s")
    assert ok


def test_criterion_03_csiszar_certification(report_criterion):
    def work():
        res = checks.csiszar_suite(200, rng=SeededRng(3), gap_tol=1e-6)
        ident = measures.csiszar_mi(JointDistribution.identity_coupling([0.5, 0.5]), 2)
        return res, ident.value

    (res, ident), dt = timed(work)
    ok = res.passed and res.cases == 200 and abs(ident - 1.0) <= 1e-6 and dt < 30.0
    report_criterion(3, ok, f"max gap {res.worst:.1e} over {res.cases} channels, I_2^c(A;A)={ident:.9f}, {dt:.1f}s")
    assert ok


def test_criterion_04_sandwich_monotonicity(report_criterion):
    res, dt = timed(lambda: checks.sandwich_monotonicity_suite(10_000, rng=SeededRng(4)))
    ok = res.passed and res.cases == 10_000
    report_criterion(4, ok, f"{res.cases} joints, {res.violations} violations, worst excess {res.worst:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_05_data_processing(report_criterion):
    res, dt = timed(lambda: checks.dpi_suite(1000, rng=SeededRng(5)))
    ok = res.passed and res.cases == 1000
    report_criterion(5, ok, f"{res.cases} pairs, {res.violations} violations, worst excess {res.worst:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_06_exact_decoupling(report_criterion):
    def work():
        j = JointDistribution.identity_coupling(np.full(4, 0.25))
        return binning.decoupling_bound_check(j, 2, 2.0, trials=10, rng=0)

    rep, dt = timed(work)
    bound = math.sqrt(3) / math.sqrt(2)
    ok = (rep.exact_v == 1.0 or abs(rep.exact_v - 1.0) <= 1e-15) and abs(rep.v_bound - bound) <= 1e-12
    ok = ok and rep.exact_v <= rep.v_bound and dt < 1.0
    report_criterion(6, ok, f"exact mean {rep.exact_v!r} <= bound {rep.v_bound:.4f}, {dt:.2f}s")
    assert ok


def test_criterion_07_privacy_amplification(report_criterion):
    j = JointDistribution.identity_coupling(np.full(16, 1 / 16))
    ells = [1, 2, 3]

    def work():
        return [binning.privacy_amp_experiment(j, ell, 2.0, trials=10_000, rng=SeededRng(7, ell))
                for ell in ells]

    reps, dt = timed(work)
    means = [r.v_stats.mean for r in reps]
    mean_ok = all(r.mean_ok for r in reps)
    slope = binning.log_slope(ells, means)
    slope_ok = abs(slope - (-0.5)) <= 0.1
    ok = mean_ok and slope_ok and dt < 60.0
    detail = ", ".join(f"l={r.ell}: {r.v_stats.mean:.4f}<={r.v_bound:.4f}+3se" for r in reps)
    report_criterion(7, ok, f"{detail}; mean bounds {'ok' if mean_ok else 'violated'}; "
                            f"log2 slope {slope:.4f} (target -0.5 +- 0.1); {dt:.1f}s")
    assert mean_ok, "mean exceeds bound"
    assert dt < 60.0
    assert slope_ok, f"log2 slope {slope:.4f} outside -0.5 +- 0.1"


def test_criterion_08_hayashi(report_criterion):
    exact = binning.hayashi_comparison(JointDistribution.identity_coupling(np.full(4, 0.25)), 2, 2.0,
                                       trials=100, rng=0)
    seeded = SeededRng(8)
    failures = 0
    for i in range(100):
        gen = seeded.trial(i)
        na = int(gen.choice([8, 12, 16]))
        k = int(gen.choice([2, 4]))
        j = random_joint(gen, (na, int(gen.integers(2, 5))), float(gen.choice([0.2, 1.0, 5.0])))
        a = float(gen.uniform(1.05, 2.0))
        rep = binning.hayashi_comparison(j, k, a, trials=200, rng=seeded.child(i))
        failures += not (rep.lhs_mean <= rep.rhs + 3 * rep.lhs_stderr)
    ok = exact.exact_lhs is not None and exact.exact_lhs <= exact.rhs and failures == 0
    report_criterion(8, ok, f"exhaustive {exact.exact_lhs:.4f} <= {exact.rhs:.4f}; MC failures {failures}/100")
    assert ok


def test_criterion_09_block_mi(report_criterion):
    ns = [4, 8, 16, 32]
    recs, dt = timed(lambda: exponents.block_mi_ladder([0.5, 0.5], Channel.bsc(0.1), 2.0, ns))
    devs = [r.deviation for r in recs]
    mono = all(a > b for a, b in zip(devs, devs[1:]))
    env = devs[-1] <= 2 * math.log2(32) / 32
    ok = mono and env and dt < 120.0
    report_criterion(9, ok, "deviations " + ", ".join(f"{d:.4f}" for d in devs)
                     + f"; n=32 envelope {2 * math.log2(32) / 32:.4f}; {dt:.1f}s")
    assert ok


def test_criterion_10_exponent_duality(report_criterion):
    seeded = SeededRng(10)
    worst, count, bad = 0.0, 0, 0
    t0 = time.perf_counter()
    for size in (2, 3):
        for i in range(50):
            gen = seeded.child(size).trial(i)
            ch = random_channel(gen, size, size, float(gen.choice([0.5, 1.0, 3.0])))
            j = ch.joint(random_distribution(gen, size))
            for R in (0.0, 0.1, 0.3):
                res = simplex.minimax_exchange_check(j, R)
                err = abs(res.lhs - res.rhs)
                worst = max(worst, err)
                bad += err > 1e-3
                count += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and count == 300
    report_criterion(10, ok, f"{count} instances, {bad} disagreements, max |LHS-RHS| {worst:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_11_quantum(report_criterion):
    t0 = time.perf_counter()
    gen = np.random.default_rng(11)
    fact_err = 0.0
    for db, da in ((2, 2), (1, 4), (4, 1), (2, 1)):
        for _ in range(3):
            zb = gen.normal(size=(db, db)) + 1j * gen.normal(size=(db, db))
            za = gen.normal(size=(da, da)) + 1j * gen.normal(size=(da, da))
            for mb, ma in ((zb @ zb.conj().T, za @ za.conj().T), (zb + zb.conj().T, za + za.conj().T)):
                nrm = quantum.vv_norm_1alpha(np.kron(mb, ma), (db, da), 2.0).value
                target = quantum.schatten_norm(mb, 1) * quantum.schatten_norm(ma, 2)
                fact_err = max(fact_err, abs(nrm - target) / max(1.0, target))
    gammas = [
        (quantum.gamma_of_map([np.eye(4)], 4, 4), 16.0),
        (quantum.gamma_of_map(quantum.partial_trace_kraus(2, 2), 4, 2), 2 * 2 ** 2),
        (quantum.gamma_of_map(quantum.partial_trace_kraus(2, 3), 6, 2), 3 * 2 ** 2),
        (quantum.gamma_of_map(quantum.projection_kraus(4, 2), 4, 2), 16.0),
    ]
    gamma_err = max(abs(g - t) for g, t in gammas)
    m = gen.normal(size=(4, 4)) + 1j * gen.normal(size=(4, 4))
    haar = quantum.haar_second_moment_check(m, 2, trials=10_000, rng=SeededRng(11, 1))
    psi = gen.normal(size=8) + 1j * gen.normal(size=8)
    rho = quantum.DensityMatrix.pure(psi, (4, 2))
    dec = quantum.decoupling_mc(rho, quantum.partial_trace_kraus(2, 2), 2, 2.0, trials=1000,
                                rng=SeededRng(11, 2))
    dt = time.perf_counter() - t0
    ok = fact_err <= 1e-6 and gamma_err <= 1e-10 and haar.holds and dec.holds and dt < 300.0
    report_criterion(11, ok, f"factorization err {fact_err:.1e}; gamma err {gamma_err:.1e}; "
                             f"Haar dev {haar.deviation:.4f} <= {haar.bound:.4f}; "
                             f"decoupling mean {dec.mean:.4f} (se {dec.stderr:.4f}) vs RHS {dec.rhs:.4f}; {dt:.0f}s")
    assert ok


def test_criterion_12_semantic_security(report_criterion):
    res, dt = timed(lambda: checks.semantic_security_suite(1000, rng=SeededRng(12)))
    ok = res.passed and res.cases == 1000
    report_criterion(12, ok, f"{res.cases} instances, {res.violations} violations, {dt:.1f}s")
    assert ok


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "vvcorr", *map(str, args)], capture_output=True, cwd=ROOT)
    return proc.returncode, proc.stdout


def test_criterion_13_cli_determinism(report_criterion):
    runs = [
        ["measure", "--quantity", "csiszar_mi", "--alpha", "1.5", "--dist", DATA / "bsc03.txt"],
        ["binning", "--dist", DATA / "identity16.txt", "--k", "4", "--trials", "200", "--seed", "5",
         "--format", "csv"],
        ["privacy-amp", "--dist", DATA / "identity16.txt", "--ell", "1,2", "--trials", "200", "--seed", "9",
         "--family", "hash", "--format", "json"],
        ["exponent", "--dist", DATA / "bsc01.txt", "--n", "4", "--trials", "50", "--seed", "3",
         "--format", "csv"],
        ["wiretap", "--dist", DATA / "identity2.txt", "--eve", DATA / "erasure_half.txt", "--n", "6",
         "--trials", "50", "--seed", "2", "--format", "csv"],
        ["quantum-check", "--trials", "20", "--seed", "4", "--format", "json"],
        ["selftest", "--seed", "13"],
    ]
    mismatched = []
    for args in runs:
        a, b = _cli(*args), _cli(*args)
        if a != b or a[0] != 0 or not a[1]:
            mismatched.append(args[0])
    # the parallel map reduces by trial index, so worker count must not change bytes
    par = ["binning", "--dist", DATA / "identity16.txt", "--k", "2", "--trials", "100", "--seed", "1",
           "--format", "csv"]
    if _cli(*par) != _cli(*par, "--workers", "2"):
        mismatched.append("binning --workers")
    ok = not mismatched
    report_criterion(13, ok, f"{len(runs) + 1} command pairs compared, mismatches: {mismatched or 'none'}")
    assert ok
