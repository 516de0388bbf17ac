from __future__ import annotations

import csv
import json
import math

import pytest

from dirand.cli import main, trial_rng

from .test_scenario import pr_box


def run(capsys, *argv) -> tuple[int, dict | None]:
    code = main(list(argv))
    captured = capsys.readouterr()
    if code:
        assert captured.err.startswith("error:")
    return code, (json.loads(captured.out) if captured.out.strip() else None)


def test_bell_bounds_chsh(capsys):
    code, rep = run(capsys, "bell", "bounds", "chsh")
    assert code == 0 and rep["command"] == "bell"
    res = rep["results"]
    assert res["local"] == 2.0
    assert res["quantum"] == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert res["ns"] == pytest.approx(4.0, abs=1e-6)
    assert set(rep) == {"command", "config", "seed", "results", "wall_time"}


def test_bell_bounds_mermin(capsys):
    _, rep = run(capsys, "bell", "bounds", "mermin5")
    res = rep["results"]
    assert res["local"] == 6.0
    assert res["quantum"] == pytest.approx(0.0, abs=1e-9)
    assert res["ns"] == pytest.approx(0.0, abs=1e-6)


def test_bell_eval_file(capsys, tmp_path):
    f = tmp_path / "prbox.json"
    f.write_text(pr_box().to_json())
    code, rep = run(capsys, "bell", "eval", "chsh", str(f))
    assert code == 0 and rep["results"]["value"] == pytest.approx(4.0)


@pytest.mark.parametrize("content", ["{not json", json.dumps({"scenario": {"inputs": [2], "outputs": [2]}, "table": [1, 0]})])
def test_bell_eval_bad_file_exits_nonzero(capsys, tmp_path, content):
    f = tmp_path / "bad.json"
    f.write_text(content)
    code, rep = run(capsys, "bell", "eval", "chsh", str(f))
    assert code == 1 and rep is None


def test_missing_file(capsys):
    code, _ = run(capsys, "bell", "eval", "chsh", "/nonexistent/behavior.json")
    assert code == 1


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["guess", "mermin5", "--value", "0"], 0.75),
        (["guess", "chsh", "--value", "4", "--target", "outputs:0,0"], 0.5),
        (["guess", "chsh", "--value", "2", "--target", "outputs:0,0"], 1.0),
    ],
)
def test_guess(capsys, argv, expected):
    _, rep = run(capsys, *argv)
    assert rep["results"]["bound"] == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("extractor", ["hadamard", "bpp"])
def test_extractor_sweep(capsys, extractor):
    _, rep = run(capsys, "extractor", "sweep", "--extractor", extractor, "--n", "3")
    assert rep["results"]["passed"] and rep["results"]["reports"]


def test_deor_rank_check(capsys):
    _, rep = run(capsys, "extractor", "deor-ranks", "--n", "6")
    assert rep["results"] == {"n": 6, "passed": True, "subsets_checked": 63}


def test_hash_cover_round_trip(capsys, tmp_path):
    out = tmp_path / "family.json"
    code, rep = run(capsys, "--seed", "3", "hash-cover", "construct", "--n", "3", "--out", str(out))
    assert code == 0 and rep["results"]["ok"]
    code, rep = run(capsys, "hash-cover", "verify", str(out))
    assert code == 0 and rep["results"]["ok"] and rep["results"]["checked"] == 70


def test_tree(capsys):
    _, rep = run(capsys, "tree", "--n-values", "2", "4")
    assert [r["leaves"] for r in rep["results"]["trees"]] == [12, 144]
    _, rep = run(capsys, "tree", "bounds", "--n", "100", "--R", "0.8", str(math.log2(12) / 4 + 0.05))
    low, high = rep["results"]["bounds"]
    assert low["full_cheating"]
    assert high["p_cheat"] == pytest.approx(2.0**-10)


QUADRATIC = {"protocol": "quadratic", "config": {"n": 2000}, "device": {"kind": "honest", "strategy": "chsh"}}
BOUDA = {
    "protocol": "bouda",
    "config": {"rounds": 20},
    "family": {"n": 3, "seed": 0},
    "source": {"kind": "flat", "n": 3, "support": [0, 3, 5, 6]},
    "device": {"kind": "deterministic", "assignment": [[0, 0], [0, 0], [0, 0]]},
}


def _write(tmp_path, spec) -> str:
    f = tmp_path / "config.json"
    f.write_text(json.dumps(spec))
    return str(f)


def test_protocol_quadratic(capsys, tmp_path):
    code, rep = run(capsys, "--seed", "9", "--trials", "2", "protocol", _write(tmp_path, QUADRATIC))
    assert code == 0
    summary = rep["results"]["summary"]
    assert summary["accepted"] == 2 and summary["seed_ledger_balanced"]
    assert all(v["certified_entropy"] > 0 for v in rep["results"]["verdicts"])


def test_protocol_bouda_abort_statistics(capsys, tmp_path):
    csv_path = tmp_path / "summary.csv"
    code, rep = run(capsys, "--trials", "30", "protocol", _write(tmp_path, BOUDA), "--csv", str(csv_path))
    assert code == 0
    assert rep["results"]["summary"]["accept_rate"] < 0.5
    rows = list(csv.DictReader(csv_path.open()))
    assert [int(r["trial"]) for r in rows] == list(range(30))


def test_protocol_payload_is_reproducible(capsys, tmp_path, monkeypatch):
    path = _write(tmp_path, QUADRATIC)
    _, a = run(capsys, "--seed", "4", "--trials", "3", "protocol", path)
    monkeypatch.setenv("DIRAND_THREADS", "3")
    _, b = run(capsys, "--seed", "4", "--trials", "3", "protocol", path)
    assert a["results"] == b["results"]
    _, c = run(capsys, "--seed", "5", "--trials", "3", "protocol", path)
    assert c["results"] != a["results"]


def test_trial_streams_are_independent_of_batch():
    a = trial_rng(7, 2).integers(0, 2**63)
    b = trial_rng(7, 2).integers(0, 2**63)
    assert a == b != trial_rng(7, 3).integers(0, 2**63)


@pytest.mark.parametrize(
    "spec",
    [
        {"protocol": "nope"},
        {"protocol": "quadratic", "config": {"unknown_key": 1}},
        {"protocol": "quadratic", "device": {"kind": "telepathic"}},
    ],
)
def test_protocol_bad_config(capsys, tmp_path, spec):
    code, rep = run(capsys, "protocol", _write(tmp_path, spec))
    assert code == 1 and rep is None


def test_bad_trials(capsys, tmp_path):
    assert main(["--trials", "0", "protocol", _write(tmp_path, QUADRATIC)]) == 2
