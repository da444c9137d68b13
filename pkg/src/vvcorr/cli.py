"""Command-line entry point: ``vvcorr <subcommand> [flags]``.

Exit status is 0 on success, 2 on a configuration error and 1 when an
empirical check falls outside its bound.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import binning, checks, exponents, measures, quantum
from .prob import Distribution, SeededRng, TypeClassSpec, load_joint

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2

QUANTITIES = {
    "v_alpha": lambda j, a, tol: measures.v_alpha(j, a),
    "w_alpha": lambda j, a, tol: measures.w_alpha(j, a),
    "v_infinity": lambda j, a, tol: measures.v_infinity(j),
    "chi_square_v2": lambda j, a, tol: measures.chi_square_form_v2(j),
    "shannon_mi": lambda j, a, tol: measures.shannon_mi(j),
    "sibson_mi": lambda j, a, tol: measures.sibson_mi(j, a),
    "csiszar_mi": lambda j, a, tol: measures.csiszar_mi(j, a, tol=tol).value,
    "cond_renyi_entropy": lambda j, a, tol: measures.cond_renyi_entropy(j, a),
    "hayashi_cond_entropy": lambda j, a, tol: measures.hayashi_cond_entropy(j, a),
    "tsallis_mi": lambda j, a, tol: measures.tsallis_mi(j, a),
    "f_mi_kl": lambda j, a, tol: measures.f_mutual_information(j, measures.kl_function(), tol).value,
    "f_mi_tsallis": lambda j, a, tol: measures.f_mutual_information(
        j, measures.tsallis_function(a.value), tol).value,
    "f_mi_pv_tsallis": lambda j, a, tol: measures.f_mi_pv(j, measures.tsallis_function(a.value), tol).value,
    "f_mi_ckz_tsallis": lambda j, a, tol: measures.f_mi_ckz(j, measures.tsallis_function(a.value)),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    dist: str | None = None
    eve: str | None = None
    alpha: measures.Alpha = field(default_factory=lambda: measures.Alpha(2.0))
    quantity: str = "v_alpha"
    rate: float = 0.0
    n: list[int] = field(default_factory=list)
    k: int | None = None
    ell: list[int] = field(default_factory=list)
    trials: int = 1000
    seed: int = 0
    tol: float = 1e-9
    out: str | None = None
    fmt: str = "text"
    family: str = "regular"
    workers: int = 1

    def validate(self):
        if self.trials < 2 and self.subcommand not in ("measure", "exponent", "block-mi"):
            raise ConfigError("--trials must be at least 2")
        if not 0 <= self.seed < 2 ** 63:
            raise ConfigError("--seed must be a non-negative 64-bit integer")
        if self.tol <= 0:
            raise ConfigError("--tol must be positive")
        if self.rate < 0:
            raise ConfigError("--rate must be non-negative")
        needs_dist = {"measure", "binning", "privacy-amp", "exponent", "block-mi", "wiretap"}
        if self.subcommand in needs_dist and not self.dist:
            raise ConfigError(f"{self.subcommand} needs --dist")
        if self.subcommand == "measure" and self.quantity not in QUANTITIES:
            raise ConfigError(f"unknown quantity {self.quantity!r}; choose from {', '.join(QUANTITIES)}")
        if self.subcommand == "binning" and self.k is None:
            raise ConfigError("binning needs --k")
        if self.subcommand == "privacy-amp" and not self.ell:
            raise ConfigError("privacy-amp needs --ell")
        if self.subcommand == "block-mi" and not self.n:
            raise ConfigError("block-mi needs --n")
        if self.subcommand == "wiretap" and (not self.eve or len(self.n) != 1):
            raise ConfigError("wiretap needs --eve and a single --n")
        return self


@dataclass
class Report:
    columns: tuple
    rows: list
    summary: dict
    ok: bool = True
    text: str | None = None         # plain-text override


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _alpha(text):
    try:
        return measures.Alpha.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quantity", default="v_alpha")
    common.add_argument("--alpha", type=_alpha, default=measures.Alpha(2.0), help="decimal or 'inf'")
    common.add_argument("--dist", help="joint distribution file")
    common.add_argument("--eve", help="eavesdropper joint distribution file (wiretap)")
    common.add_argument("--rate", type=float, default=0.0)
    common.add_argument("--n", type=_int_list, default=[])
    common.add_argument("--k", type=int)
    common.add_argument("--ell", type=_int_list, default=[])
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--out")
    common.add_argument("--format", dest="fmt", choices=("text", "csv", "json"), default="text")
    common.add_argument("--family", choices=("regular", "hash"), default="regular")
    common.add_argument("--workers", type=int, default=1)
    p = argparse.ArgumentParser(prog="vvcorr", description="Correlation measures and binning experiments.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, hlp in [("measure", "evaluate one quantity on a joint table"),
                      ("binning", "decoupling bounds under random regular binning"),
                      ("privacy-amp", "key shortening against an eavesdropper"),
                      ("exponent", "binning exponent and its dual form"),
                      ("block-mi", "per-symbol Sibson information on type classes"),
                      ("wiretap", "wiretap mini-code simulation"),
                      ("quantum-check", "quantum norm and decoupling checks"),
                      ("selftest", "run the randomized property suite")]:
        sub.add_parser(name, parents=[common], help=hlp)
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items()})
    return cfg.validate()


# ---------------------------------------------------------------------------
# subcommands

def _num(x) -> float:
    return round(float(x), 12)


def run_measure(cfg: RunConfig) -> Report:
    j = load_joint(cfg.dist)
    v = QUANTITIES[cfg.quantity](j, cfg.alpha, cfg.tol)
    return Report(("quantity", "alpha", "value"), [(cfg.quantity, cfg.alpha.value, float(v))],
                  {}, True, repr(_num(v)))


def run_binning(cfg: RunConfig) -> Report:
    j = load_joint(cfg.dist)
    rep = binning.decoupling_bound_check(j, cfg.k, cfg.alpha, cfg.trials, SeededRng(cfg.seed),
                                         cfg.workers)
    stats = rep.v_stats if rep.v_stats is not None else rep.w_stats
    bound = rep.v_bound if rep.v_stats is not None else rep.w_bound
    rows = list(binning.trial_rows(stats, rep.alpha, cfg.k, bound))
    summary = {"measure": "V" if rep.v_stats is not None else "W", "mean": stats.mean,
               "stderr": stats.stderr, "bound": bound, "w_mean": rep.w_stats.mean,
               "w_bound": rep.w_bound, "exact_v": rep.exact_v, "exact_w": rep.exact_w}
    return Report(binning.CSV_COLUMNS, rows, summary, rep.holds)


def run_privacy_amp(cfg: RunConfig) -> Report:
    j = load_joint(cfg.dist)
    rows, summary, ok, means = [], {}, True, []
    for ell in cfg.ell:
        rep = binning.privacy_amp_experiment(j, ell, cfg.alpha, cfg.trials, SeededRng(cfg.seed, ell),
                                             cfg.family, cfg.workers)
        rows.extend(binning.trial_rows(rep.v_stats, rep.alpha, ell, rep.v_bound))
        summary[f"ell={ell}"] = {"mean": rep.v_stats.mean, "stderr": rep.v_stats.stderr,
                                 "bound": rep.v_bound, "min": rep.v_stats.minimum,
                                 "tv_mean": rep.tv_stats.mean, "tv_bound": rep.tv_bound}
        means.append(rep.v_stats.mean)
        ok &= rep.holds
    if len(cfg.ell) > 1 and all(m > 0 for m in means):
        summary["log2_slope"] = binning.log_slope(cfg.ell, means)
    return Report(binning.CSV_COLUMNS, rows, summary, bool(ok))


def run_exponent(cfg: RunConfig) -> Report:
    j = load_joint(cfg.dist)
    if cfg.n:
        rows = []
        ch = j.channel()
        for n in cfg.n:
            rows.extend(exponents.exponent_rate_rows(j.p_a, ch, n, cfg.alpha, cfg.trials,
                                                     SeededRng(cfg.seed, n)))
        return Report(exponents.EXPONENT_COLUMNS, rows, {"points": len(rows)})
    curve = exponents.exponent_curve(j, cfg.rate)
    dual = exponents.optimized_exponent(j, cfg.rate, tol=max(cfg.tol, 1e-9))
    rows = [(cfg.rate, float(a), float(v)) for a, v in zip(curve.alphas, curve.values)]
    summary = {"rate": cfg.rate, "alpha_star": dual.alpha, "exponent": dual.value,
               "dual_form": dual.rhs, "at_boundary": dual.at_boundary}
    return Report(("R", "alpha", "exponent"), rows, summary, dual.agrees)


def run_block_mi(cfg: RunConfig) -> Report:
    j = load_joint(cfg.dist)
    recs = exponents.block_mi_ladder(j.p_a, j.channel(), cfg.alpha, cfg.n)
    rows = [(r.n, cfg.alpha.value, r.block_mi, r.limit, r.deviation) for r in recs]
    return Report(("n", "alpha", "block_mi_per_symbol", "csiszar_mi", "deviation"), rows, {})


def run_wiretap(cfg: RunConfig) -> Report:
    jy, jz = load_joint(cfg.dist), load_joint(cfg.eve)
    if jy.shape[0] != jz.shape[0] or np.abs(jy.p_a - jz.p_a).max() > 1e-9:
        raise ConfigError("--dist and --eve must share the input marginal")
    try:
        rep = exponents.wiretap_minicode_sim(Distribution(jy.p_a), jy.channel(), jz.channel(),
                                             cfg.n[0], alpha=cfg.alpha, trials=cfg.trials,
                                             rng=SeededRng(cfg.seed), workers=cfg.workers)
    except exponents.ConfigError as exc:
        raise ConfigError(str(exc)) from exc
    s = rep.split
    rows = list(binning.trial_rows(rep.leakage, rep.alpha, s.k2, rep.bound))
    summary = {"split": [s.k1, s.k2, s.k3], "leakage_mean": rep.leakage.mean,
               "leakage_bound": rep.bound, "error_mean": rep.error.mean,
               "joint_fraction": rep.joint_fraction}
    return Report(binning.CSV_COLUMNS, rows, summary, rep.leakage_ok)


def run_quantum_check(cfg: RunConfig) -> Report:
    rows = []
    gen = SeededRng(cfg.seed).generator()

    def add(name, value, target, ok):
        rows.append((name, float(value), float(target), "pass" if ok else "fail"))

    def rand_psd(d):
        z = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
        m = z @ z.conj().T
        return m / np.trace(m).real

    mb, ma = rand_psd(2), rand_psd(2)
    nrm = quantum.vv_norm_1alpha(np.kron(mb, ma), (2, 2), 2, rng=gen)
    target = quantum.schatten_norm(mb, 1) * quantum.schatten_norm(ma, 2)
    add("product_factorization", nrm.value, target, abs(nrm.value - target) <= 1e-6)
    for name, kr, da, d0, tgt in [("gamma_identity", [np.eye(4)], 4, 4, 16.0),
                                  ("gamma_partial_trace", quantum.partial_trace_kraus(2, 2), 4, 2, 8.0),
                                  ("gamma_projection", quantum.projection_kraus(4, 2), 4, 2, 16.0)]:
        g = quantum.gamma_of_map(kr, da, d0)
        add(name, g, tgt, abs(g - tgt) <= 1e-10)
    hs = quantum.haar_second_moment_check(gen.normal(size=(4, 4)), 2, max(cfg.trials, 2), SeededRng(cfg.seed, 1))
    add("haar_second_moment", hs.deviation, hs.bound, hs.holds)
    psi = gen.normal(size=8) + 1j * gen.normal(size=8)
    rho = quantum.DensityMatrix.pure(psi, (4, 2))
    dec = quantum.decoupling_mc(rho, quantum.partial_trace_kraus(2, 2), 2, 2, max(cfg.trials, 2),
                                SeededRng(cfg.seed, 2), workers=cfg.workers)
    add("decoupling_alpha2_mean", dec.mean, dec.rhs, dec.holds)
    ok = all(r[3] == "pass" for r in rows)
    return Report(("check", "value", "target", "status"), rows, {}, ok)


def run_selftest(cfg: RunConfig) -> Report:
    results = checks.run_all(cfg.seed, scale=0.1)
    rows = [(r.name, r.cases, r.violations, r.worst) for r in results]
    text = "\n".join(r.line() for r in results)
    return Report(("suite", "cases", "violations", "worst_excess"), rows, {},
                  all(r.passed for r in results), text)


HANDLERS = {"measure": run_measure, "binning": run_binning, "privacy-amp": run_privacy_amp,
            "exponent": run_exponent, "block-mi": run_block_mi, "wiretap": run_wiretap,
            "quantum-check": run_quantum_check, "selftest": run_selftest}


# ---------------------------------------------------------------------------
# output

def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render(rep: Report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("#schema=1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rep.columns)
        for r in rep.rows:
            w.writerow([_cell(x) for x in r])
        return buf.getvalue()
    if fmt == "json":
        doc = {"schema": 1, "columns": list(rep.columns),
               "rows": [dict(zip(rep.columns, _jsonable(list(r)))) for r in rep.rows],
               "summary": _jsonable(rep.summary), "ok": bool(rep.ok)}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    if rep.text is not None:
        return rep.text + "\n"
    lines = []
    if rep.summary:
        for k, v in rep.summary.items():
            lines.append(f"{k}: {json.dumps(_jsonable(v))}")
    else:
        lines.append("  ".join(rep.columns))
        lines.extend("  ".join(_cell(x) for x in r) for r in rep.rows)
    lines.append("status: " + ("ok" if rep.ok else "VIOLATION"))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:           # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"vvcorr: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rep = HANDLERS[cfg.subcommand](cfg)
    except (OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"vvcorr: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(rep, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()
    if not rep.ok:
        print("vvcorr: contract violation: an empirical value exceeds its bound", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
