import json
import math
from pathlib import Path

import pytest

from vvcorr import cli

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *args):
    code = cli.main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_measure_v_alpha_text(capsys):
    code, out, _ = run(capsys, "measure", "--quantity", "v_alpha", "--alpha", "2", "--dist", DATA / "erasure_half.txt")
    assert code == 0 and out == "0.5\n"


def test_measure_csiszar_identity(capsys):
    code, out, _ = run(capsys, "measure", "--quantity", "csiszar_mi", "--alpha", "2", "--dist", DATA / "identity2.txt")
    assert code == 0 and abs(float(out) - 1.0) < 1e-6


def test_measure_alpha_inf_json(capsys):
    code, out, _ = run(capsys, "measure", "--quantity", "v_alpha", "--alpha", "inf",
                       "--dist", DATA / "erasure_half.txt", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["ok"] is True
    assert math.isclose(doc["rows"][0]["value"], 0.5)


def test_every_quantity_runs(capsys):
    for q in cli.QUANTITIES:
        code, out, err = run(capsys, "measure", "--quantity", q, "--alpha", "2", "--dist", DATA / "bsc01.txt")
        assert code == 0, (q, err)
        assert math.isfinite(float(out))


@pytest.mark.parametrize("args", [
    ["measure", "--quantity", "nope", "--dist", str(DATA / "bsc01.txt")],
    ["measure", "--dist", "does-not-exist.txt"],
    ["measure", "--alpha", "0.3", "--dist", str(DATA / "bsc01.txt")],
    ["binning", "--dist", str(DATA / "identity16.txt")],
    ["binning", "--dist", str(DATA / "identity16.txt"), "--k", "3"],
    ["privacy-amp", "--dist", str(DATA / "identity16.txt")],
    ["wiretap", "--dist", str(DATA / "identity2.txt"), "--eve", str(DATA / "erasure_half.txt"), "--n", "4"],
    ["measure", "--n", "a,b"],
    ["nosuchcommand"],
])
def test_config_errors_exit_two(capsys, args):
    code, out, err = run(capsys, *args)
    assert code == 2 and out == ""
    assert err.count("\n") >= 1


def test_wiretap_error_names_nearest_n(capsys):
    code, _, err = run(capsys, "wiretap", "--dist", DATA / "identity2.txt", "--eve", DATA / "erasure_half.txt",
                       "--n", "4")
    assert code == 2 and err.strip() == "vvcorr: error: no admissible rate split at n=4; nearest feasible n: 6"


def test_binning_csv_schema(capsys):
    code, out, _ = run(capsys, "binning", "--dist", DATA / "identity16.txt", "--k", "2", "--trials", "20",
                       "--format", "csv", "--seed", "3")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "#schema=1"
    assert lines[1] == "seed,trial,alpha,k_or_ell,v_alpha,bound,slack"
    assert len(lines) == 22


def test_privacy_amp_summary(capsys):
    code, out, _ = run(capsys, "privacy-amp", "--dist", DATA / "identity16.txt", "--ell", "1,2",
                       "--trials", "50", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and "log2_slope" in doc["summary"]


def test_exponent_and_block_mi(capsys):
    code, out, _ = run(capsys, "exponent", "--dist", DATA / "bsc01.txt", "--rate", "0.1", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and abs(doc["summary"]["exponent"] - doc["summary"]["dual_form"]) < 1e-3
    code, out, _ = run(capsys, "block-mi", "--dist", DATA / "bsc01.txt", "--n", "4,8", "--format", "csv")
    assert code == 0 and out.splitlines()[1] == "n,alpha,block_mi_per_symbol,csiszar_mi,deviation"


def test_wiretap_run(capsys):
    code, out, _ = run(capsys, "wiretap", "--dist", DATA / "identity2.txt", "--eve", DATA / "erasure_half.txt",
                       "--n", "6", "--trials", "20", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["split"] == [2, 5, 2]
    assert doc["summary"]["error_mean"] == 0.0


def test_quantum_check(capsys):
    code, out, _ = run(capsys, "quantum-check", "--trials", "20")
    assert code == 0 and "fail" not in out


def test_selftest_seed_seven(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "7")
    assert code == 0 and "FAIL" not in out


def test_out_file_matches_stdout(capsys, tmp_path):
    args = ["binning", "--dist", DATA / "identity16.txt", "--k", "4", "--trials", "10", "--format", "csv"]
    _, out, _ = run(capsys, *args)
    target = tmp_path / "r.csv"
    code, out2, _ = run(capsys, *args, "--out", target)
    assert code == 0 and out2 == "" and target.read_text() == out


def test_violation_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(cli.HANDLERS, "measure", lambda cfg: cli.Report(("x",), [(1.0,)], {}, False))
    code, _, err = run(capsys, "measure", "--dist", DATA / "bsc01.txt")
    assert code == 1 and "violation" in err
