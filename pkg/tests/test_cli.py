import json

import numpy as np
import pytest

from ovalcount import io
from ovalcount.cli import EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, ExperimentConfig, main, run_count
from ovalcount.errors import DomainError
from ovalcount.lattice import UnimodularLattice


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_count_fixed_z2_lattice(tmp_path):
    io.write_lattice(tmp_path / "z2.txt", UnimodularLattice.standard())
    code, out = _run(tmp_path, "o", "count", "--t", "2", "--fixed-lattice", str(tmp_path / "z2.txt"))
    assert code == EXIT_OK
    recs = io.read_jsonl(out / "count.jsonl")
    assert recs[0]["header"]["t"] == [2.0]
    assert recs[1]["count"] == 13
    assert recs[1]["normalized"] == pytest.approx(0.3066222791, abs=1e-9)


def test_count_zero_lattices(tmp_path):
    code, out = _run(tmp_path, "o", "count", "--n-lattice", "0")
    assert code == EXIT_OK
    recs = io.read_jsonl(out / "count.jsonl")
    assert len(recs) == 1 and "header" in recs[0]


def test_count_seed_determinism_and_workers(tmp_path):
    args = ["count", "--t", "5,20", "--n-lattice", "6", "--seed", "9", "--curve", "ellipse(2,1)"]
    _, a = _run(tmp_path, "a", *args)
    _, b = _run(tmp_path, "b", *args)
    _, c = _run(tmp_path, "c", *args, "--workers", "2")
    # the header echoes --out, which differs between runs
    body = lambda p: (p / "count.jsonl").read_text().split("\n", 1)[1]
    assert body(a) == body(b) == body(c)


def test_count_echo_reproduces_stream(tmp_path):
    _, a = _run(tmp_path, "a", "count", "--t", "3,8", "--n-lattice", "4", "--seed", "5", "--alpha", "0.3,0.7")
    header = io.read_jsonl(a / "count.jsonl")[0]["header"]
    echo = {k: v for k, v in header.items() if k != "curve_spec"}
    echo["alpha"] = tuple(echo["alpha"])
    run_count(ExperimentConfig(**echo))
    assert (a / "count.jsonl").read_bytes() == (tmp_path / "a" / "count.jsonl").read_bytes()


def test_exit_codes(tmp_path):
    assert _run(tmp_path, "x", "count", "--t", "5,2")[0] == EXIT_CONFIG
    assert _run(tmp_path, "x", "count", "--curve", "square")[0] == EXIT_CONFIG
    assert _run(tmp_path, "x", "bogus")[0] == EXIT_CONFIG
    assert _run(tmp_path, "x", "gap", "--t", "1e7", "--n-lattice", "1", "--A", "5")[0] == EXIT_RESOURCE


def test_count_skips_capped_samples(tmp_path):
    code, out = _run(tmp_path, "o", "count", "--t", "5,1e7", "--n-lattice", "2")
    assert code == EXIT_OK
    recs = [r for r in io.read_jsonl(out / "count.jsonl") if "header" not in r]
    assert sum("skipped" in r for r in recs) == 2
    assert sum("skipped" not in r for r in recs) == 2


def test_config_validation():
    with pytest.raises(DomainError):
        ExperimentConfig(n_lattice=-1)
    with pytest.raises(DomainError):
        ExperimentConfig(A=[0.0])


def test_gap_limit_converge_compose(tmp_path):
    code, g = _run(tmp_path, "g", "gap", "--A", "5,10", "--t", "20,40", "--n-lattice", "20")
    assert code == EXIT_OK
    rep = json.loads((g / "gap_report.json").read_text())
    assert [r["n"] for r in rep["pairs"]] == [20, 20]
    _, c = _run(tmp_path, "c", "count", "--t", "10,40", "--n-lattice", "30")
    _, l = _run(tmp_path, "l", "limit", "--A", "10", "--n-lattice", "30")
    assert (l / "limit.dist").exists() and (l / "limit_hist.csv").exists()
    args = ["converge", "--t", "10,40", "--count-file", str(c / "count.jsonl"),
            "--limit-file", str(l / "limit.dist")]
    _, v1 = _run(tmp_path, "v1", *args)
    _, v2 = _run(tmp_path, "v2", *args)
    r1 = json.loads((v1 / "converge_report.json").read_text())
    r2 = json.loads((v2 / "converge_report.json").read_text())
    assert [r["ks"] for r in r1["rows"]] == [r["ks"] for r in r2["rows"]]
    assert all(0 <= r["ks"] <= 1 and r["n"] == 30 for r in r1["rows"])


def test_siegel_and_equidist_reports(tmp_path):
    code, s = _run(tmp_path, "s", "siegel", "--n-lattice", "2000", "--radii", "1", "--epsilons", "0.2")
    assert code == EXIT_OK
    rep = json.loads((s / "siegel_report.json").read_text())
    assert rep["mean"][0]["predicted"] == pytest.approx(6 / np.pi)
    code, e = _run(tmp_path, "e", "equidist", "--n-lattice", "2000", "--t", "1000")
    rep = json.loads((e / "equidist_report.json").read_text())
    assert rep["n"] == 2000 and 0 <= rep["joint"]["p_value"] <= 1
