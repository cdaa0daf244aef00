"""Command-line interface: file outputs, schema, and bit-for-bit
reproducibility across thread counts."""

import csv
import filecmp
import json
import subprocess
import sys

import numpy as np
import pytest

from torusrw.cli import main
from torusrw.interlacement import read_samples_jsonl


def run(args):
    assert main(args) == 0


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_console_script_installed():
    out = subprocess.run(["torusrw", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "torusrw" in out.stdout


def test_cover_json_schema_and_thread_invariance(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    base = ["cover", "--side", "8", "--trials", "20", "--seed", "3", "--no-timing"]
    run(base + ["--threads", "1", "--out", str(a)])
    run(base + ["--threads", "3", "--out", str(b)])
    assert filecmp.cmp(a, b, shallow=False), "output must not depend on --threads"

    doc = json.loads(a.read_text())
    assert set(doc) == {"config", "meta", "results"}
    assert doc["meta"]["wallclock_s"] == 0.0
    assert doc["meta"]["seed"] == 3
    assert "threads" not in doc["config"]
    assert doc["results"]["n_completed"] == 20
    assert doc["results"]["n_flagged"] == 0


def test_cover_csv_rows_and_summary(tmp_path):
    out = tmp_path / "cover.csv"
    run(["cover", "--side", "8", "--trials", "15", "--seed", "1",
         "--format", "csv", "--out", str(out)])
    lines = out.read_text().splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    trailer = [ln for ln in lines if ln.startswith("#summary,")]
    header = data[0].split(",")
    assert "cover_time" in header and "normalized" in header
    assert len(data) == 1 + 15
    assert trailer, "summary trailer missing"
    parsed = {}
    for ln in trailer:
        _, key, raw = ln.split(",", 2)
        parsed[key] = json.loads(next(csv.reader([raw]))[0])
    assert parsed["n_completed"] == 15
    assert parsed["config"]["N"] == 8


def test_vacancy_levels(tmp_path):
    out = tmp_path / "vac.csv"
    run(["vacancy", "--side", "8", "--trials", "25", "--seed", "2",
         "--level", "0.5,1.0", "--format", "csv", "--out", str(out)])
    rows = [ln for ln in out.read_text().splitlines()
            if ln and not ln.startswith("#")]
    assert len(rows) == 1 + 25 * 2  # header + one row per (trial, level)
    assert rows[0] == "trial,u,vacant_one,vacant_pair"


def test_late_points_json(tmp_path):
    out = tmp_path / "late.json"
    run(["late-points", "--side", "8", "--trials", "10", "--seed", "4",
         "--rho", "0.3", "--out", str(out)])
    doc = json.loads(out.read_text())
    res = doc["results"]
    assert res["target_size"] > 0
    assert res["trials"] == 10
    assert res["mean_size"] >= 0


def test_last_points_negative_z(tmp_path):
    out = tmp_path / "last.json"
    run(["last-points", "--side", "8", "--trials", "10", "--seed", "5",
         "--z=-2,-1,0", "--out", str(out)])
    doc = json.loads(out.read_text())
    per_z = doc["results"]["per_z"]
    assert [entry["z"] for entry in per_z] == [-2.0, -1.0, 0.0]
    means = [entry["mean_count"] for entry in per_z]
    assert means[0] >= means[1] >= means[2]


def test_last_k_runs(tmp_path):
    out = tmp_path / "lastk.json"
    run(["last-k", "--side", "8", "--trials", "10", "--seed", "6",
         "--k", "3", "--out", str(out)])
    doc = json.loads(out.read_text())
    assert doc["results"]["k"] == 3


def test_hitting_and_bad_centers(tmp_path):
    out = tmp_path / "hit.json"
    run(["hitting", "--side", "12", "--trials", "60", "--seed", "7",
         "--box-radius", "1", "--centers", "0,0,0;6,6,6", "--out", str(out)])
    doc = json.loads(out.read_text())
    # the exact N=12 value for this pair of boxes is 0.568 (finite-size bias
    # is strong at small sides); the band just checks plumbing + scale
    assert 0.3 < doc["results"]["ratio"] < 0.9
    assert doc["results"]["ratio_ci_halfwidth"] > 0
    with pytest.raises(SystemExit):
        main(["hitting", "--side", "12", "--centers", "0,0"])


def test_excursions_default_rule_and_epsilon(tmp_path):
    out = tmp_path / "exc.json"
    run(["excursions", "--side", "10", "--trials", "5", "--seed", "8",
         "--level", "1.0", "--out", str(out)])
    doc = json.loads(out.read_text())
    assert doc["results"]["t_star"] == pytest.approx(10 * 10 / 2.0)
    out2 = tmp_path / "exc2.json"
    run(["excursions", "--side", "10", "--trials", "5", "--seed", "8",
         "--level", "1.0", "--epsilon", "0.5", "--out", str(out2)])
    doc2 = json.loads(out2.read_text())
    assert doc2["results"]["c_radius"] >= doc["results"]["c_radius"]


def test_interlacement_sample_file(tmp_path):
    out = tmp_path / "inter.json"
    samples = tmp_path / "samples.jsonl"
    run(["interlacement", "--side", "8", "--seed", "9", "--box-radius", "1",
         "--level", "1.0", "--trials", "500", "--samples", str(samples),
         "--out", str(out)])
    doc = json.loads(out.read_text())
    level = doc["results"]["levels"][0]
    assert level["n_samples"] == 500
    assert 0.0 <= level["vacancy_frequency"] <= 1.0
    batch = read_samples_jsonl(samples, 27)  # radius-1 box has 3^3 points
    assert batch.visited.shape == (500, 27)
    assert batch.visited.dtype == bool
    assert batch.u == 1.0
    assert batch.vacancy_frequency() == level["vacancy_frequency"]


def test_potential_json(tmp_path):
    out = tmp_path / "pot.json"
    run(["potential", "--table-radius", "6", "--out", str(out)])
    doc = json.loads(out.read_text())
    res = doc["results"]
    assert res["g0"] == pytest.approx(1.5163860591, abs=2e-4)
    assert res["harmonicity_residual"] < 1e-8


def test_quasistationary_json_and_sigma_csv(tmp_path):
    out = tmp_path / "qs.json"
    run(["quasistationary", "--side", "6", "--box-radius", "1", "--out", str(out)])
    doc = json.loads(out.read_text())
    res = doc["results"]
    assert 0 < res["lambda2"] < res["lambda1"] < 1
    assert res["gap"] == pytest.approx(res["lambda1"] - res["lambda2"], abs=1e-12)

    sig = tmp_path / "sigma.csv"
    run(["quasistationary", "--side", "6", "--box-radius", "1",
         "--format", "csv", "--out", str(sig)])
    with open(sig, newline="") as fh:
        rows = list(csv.DictReader(fh))
    total = sum(float(r["sigma"]) for r in rows)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_stdout_fallback(capsys):
    run(["vacancy", "--side", "8", "--trials", "5", "--seed", "1",
         "--level", "0.5", "--no-timing"])
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"config", "meta", "results"}
