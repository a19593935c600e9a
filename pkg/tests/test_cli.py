import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from ttd_beamtrain.cli import main

BASE = {"fc_hz": 28e9, "bw_hz": 400e6, "mtot": 8, "nrx": 8, "delta_tau_s": 2.5e-9}
SMALL = {"fc_hz": 28e9, "bw_hz": 400e6, "mtot": 256, "ntx": 4, "nrx": 8, "delta_tau_s": 2.5e-9,
         "experiment": {"snr_db": [0, 20], "trials": 3, "seed": 5, "pilot_counts": [8, 16],
                        "ttd_beams": 16, "k_values": [4, 16]}}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_csv(path):
    return list(csv.DictReader(open(path)))


def test_design(tmp_path, capsys):
    cfg = write(tmp_path, "c.yaml", {**BASE, "experiment": {"epsilon": 0.6}})
    assert main(["design", "--config", cfg]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["in_ss_relaxed"] == "true" and row["in_ss_strict"] == "false"
    assert row["required_relaxed"] == "8" and row["required_strict"] == ""


def test_beampattern(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["beampattern", "--config", write(tmp_path, "c.yaml", BASE), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 8 * 4096 and list(rows[0]) == ["theta_rad", "m", "f_m_hz", "gain"]


def test_sweep_reproducible(tmp_path):
    cfg = write(tmp_path, "c.yaml", SMALL)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_csv(a)) == 2 * 3 * 2
    c = tmp_path / "c.csv"
    assert main(["sweep", "--config", cfg, "--seed", "6", "--out", str(c)]) == 0
    assert a.read_bytes() != c.read_bytes()


def test_train_with_channel_file(tmp_path, capsys):
    ch = tmp_path / "ch.csv"
    ch.write_text("gain_re,gain_im,delay_s,aod_rad,aoa_rad\n0.8,0.6,1e-8,0.1,-0.3\n")
    out = tmp_path / "t.csv"
    cfg = write(tmp_path, "c.yaml", SMALL)
    assert main(["train", "--config", cfg, "--channel-file", str(ch), "--snr-db", "30", "--out", str(out)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["symbols_used"] == 1 and rec["aoa_true_rad"] == -0.3 and len(rec["rsrp"]) == 16
    assert read_csv(out)[0]["m_best"] == str(rec["m_best"])


def test_benchmark(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["benchmark", "--config", write(tmp_path, "c.yaml", SMALL), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert {r["method"] for r in rows} == {"ttd", "paa"}
    assert all(r["symbols_used"] == "1" for r in rows if r["method"] == "ttd")


def test_verify(tmp_path, capsys):
    out = tmp_path / "v.csv"
    cfg = write(tmp_path, "c.yaml", {**SMALL, "experiment": {"trials": 4}})
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    assert "max_rel_error" in capsys.readouterr().out
    assert all(float(r["max_rel_error"]) <= 1e-9 for r in read_csv(out))


def test_validation_failure_exit_code(tmp_path, capsys):
    bad = write(tmp_path, "bad.yaml", {**BASE, "delta_tau_s": 0.0})
    assert main(["design", "--config", bad]) != 0
    assert "delta_tau" in capsys.readouterr().err
    assert main(["design", "--config", str(tmp_path / "missing.yaml")]) != 0
    odd = write(tmp_path, "odd.yaml", {**BASE, "mtot": 7})
    assert main(["sweep", "--config", odd]) != 0
    junk = write(tmp_path, "junk.yaml", {**BASE, "experiment": {"colour": 1}})
    assert main(["sweep", "--config", junk]) != 0
    ch = tmp_path / "ch.csv"
    ch.write_text("1,0,x,0,0\n")
    assert main(["train", "--config", write(tmp_path, "c.yaml", SMALL), "--channel-file", str(ch)]) != 0
    assert "record 0" in capsys.readouterr().err


def test_console_script(tmp_path):
    cfg = write(tmp_path, "c.yaml", BASE)
    done = subprocess.run([sys.executable, "-m", "ttd_beamtrain.cli", "design", "--config", cfg],
                          capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("delta_tau,")
    bad = subprocess.run([sys.executable, "-m", "ttd_beamtrain.cli", "fly", "--config", cfg],
                         capture_output=True, text=True)
    assert bad.returncode != 0
