import io
import json
import re
import subprocess
import sys

import pytest

from liouville.cli import EXIT_FAIL, EXIT_OK, EXIT_PRECISION, EXIT_USAGE, main

FLOAT = re.compile(r"\d\.\d|\d[eE][+-]?\d")


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stream=buf)
    return code, buf.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


def test_construct_truncation():
    code, doc = run_json("construct", "--number", "classic:10", "--trunc", "3")
    assert code == EXIT_OK and doc["value"] == "110001/1000000"
    assert "tail_bound" in doc


def test_construct_base_prefix():
    code, doc = run_json("construct", "--base", "factorial-pow2", "--count", "4")
    assert code == EXIT_OK
    assert json.dumps(doc).count("pow2") >= 4


def test_criterion_csv():
    code, text = run("criterion", "--base", "factorial-pow2", "--u", "identity", "--n-max", "6",
                     "--theta", "1/2", "--format", "csv")
    assert code == EXIT_OK
    lines = text.splitlines()
    assert lines[0] == "n,ratio_lo,ratio_hi,exceeds_theta"
    assert lines[3] == "3,4/3,4/3,true"


def test_criterion_tau_pair():
    code, doc = run_json("criterion", "--tau-pair", "1/3,2/3", "--n", "16..18")
    assert code == EXIT_OK and "3/16" in json.dumps(doc)


def test_measure_csv():
    code, text = run("measure", "--number", "classic:10", "--base", "factorial-pow:10", "--n", "2..4",
                     "--format", "csv")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "n,q_bits,dist_log2_lo,dist_log2_hi,u_lo,u_hi"
    assert len(text.splitlines()) == 4 and not FLOAT.search(text)


def test_measure_rational_hit_exits_one():
    code, doc = run_json("measure", "--number", "rat:1/4", "--base", "powers:2", "--n", "3..3",
                         "--max-bits", "256")
    assert code == EXIT_FAIL and doc["error"] == "RationalHit"


@pytest.fixture
def cert(tmp_path):
    path = tmp_path / "w.json"
    code, _ = run("witness", "emit", "--number", "classic:2", "--base", "factorial-pow2", "--n", "3..6",
                  "--out", str(path))
    assert code == EXIT_OK
    return path


def test_witness_verify_passes(cert):
    code, doc = run_json("witness", "verify", "--cert", str(cert), "--n", "3..6")
    assert code == EXIT_OK
    assert doc["all_pass"] is True
    assert doc["entries"][0] == {"n": 3, "b": {"pow2": 6}, "a": "49", "verdict": "pass"}


def test_witness_verify_tampered(cert, tmp_path):
    doc = json.loads(cert.read_text())
    doc["entries"][0]["a"] = str(int(doc["entries"][0]["a"]) + 1)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out = run_json("witness", "verify", "--cert", str(bad), "--n", "3..6")
    assert code == EXIT_FAIL and out["error"] == "CertificateError"


def test_witness_algebra_chain(cert, tmp_path):
    sq = tmp_path / "sq.json"
    code, _ = run("witness", "emit", "--number", "classic:4", "--base", "factorial-pow2", "--power", "2",
                  "--n", "3..6", "--out", str(sq))
    assert code == EXIT_OK
    steps = [
        ("combine", "--cert2", str(sq), "--mode", "sub"),
        ("combine", "--cert2", str(sq), "--mode", "mul"),
        ("reciprocal",),
        ("normalize",),
        ("rational-fn", "--p", "1,2", "--q", "0,1"),
    ]
    for name, *extra in steps:
        out = tmp_path / f"{name}.json"
        n = "3..5" if name == "rational-fn" else "3..6"
        code, _ = run("witness", name, "--cert", str(cert), *extra, "--n", n, "--out", str(out))
        assert code == EXIT_OK, name
        code, _ = run("witness", "verify", "--cert", str(out), "--n", n)
        assert code == EXIT_OK, name


def test_probe_exit_codes():
    code, _ = run("probe", "--number", "prop12:sqrt", "--base", "factorial-pow2", "--n", "5..5")
    assert code == EXIT_OK
    code, _ = run("probe", "--number", "prop12:sqrt", "--base", "factorial-pow2", "--n", "5..7")
    assert code == EXIT_FAIL


def test_gap_check():
    code, doc = run_json("gap-check", "--p", "1", "--q", "3", "--p2", "28", "--q2", "81", "--u", "2")
    assert code == EXIT_OK
    code, doc = run_json("gap-check", "--p", "1", "--q", "2", "--p2", "2", "--q2", "4", "--u", "1")
    assert code == EXIT_USAGE and doc["error"] == "HypothesisViolation"
    code, _ = run("gap-check", "--trials", "20", "--seed", "3")
    assert code == EXIT_OK


def test_companion_and_two_squares():
    assert run("companion", "--n-even", "2", "--n-odd", "2")[0] == EXIT_OK
    code, doc = run_json("two-squares", "--N", "2019", "--z-max", "3")
    assert code == EXIT_OK and doc["results"][0]["obstructed"] is True


def test_erdos_split():
    code, doc = run_json("erdos-split", "--number", "rat:1/3", "--depth", "24")
    assert code == EXIT_OK


@pytest.mark.parametrize("argv", [
    ["construct", "--number", "bogus:1"],
    ["measure", "--number", "classic:2", "--base", "factorial-pow2", "--n", "3-5"],
    ["criterion", "--theta", "0.5"],
])
def test_usage_errors(argv):
    code, text = run(*argv)
    assert code == EXIT_USAGE
    if text:
        assert json.loads(text)["exit"] == EXIT_USAGE


def test_precision_exhausted():
    code, doc = run_json("measure", "--number", "classic:2", "--base", "factorial-pow2", "--n", "6..6",
                         "--max-bits", "64")
    assert code == EXIT_PRECISION and doc["exit"] == EXIT_PRECISION


def test_short_options_rejected():
    assert run("construct", "--num", "classic:2")[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["construct", "--number", "xi-t:3/2:identity", "--bits", "128"],
    ["criterion", "--n-max", "8"],
    ["probe", "--number", "prop12:sqrt", "--base", "factorial-pow2", "--n", "4..7"],
    ["companion", "--n-even", "2", "--n-odd", "1"],
])
def test_deterministic_and_float_free(argv):
    first, second = run(*argv), run(*argv)
    assert first == second
    assert not FLOAT.search(first[1])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "liouville", "criterion", "--n-max", "4", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.splitlines()[1] == "1,2,2,true"
