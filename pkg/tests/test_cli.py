"""End-to-end checks of the command-line front end."""

import json
import subprocess
import sys

import pytest

from heatconvex import GridFunction
from heatconvex.cli import entry
from heatconvex.transforms import ClassReport


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "heatconvex", *args],
                          capture_output=True, text=True, cwd=cwd)


def write_config(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


CLASSIFY_CFG = """
transform = power alpha=0
transform = power alpha=1
transform = power alpha=2
"""

EVOLVE_CFG = """
datum = gaussian t0=0.5
grid.lo = -4
grid.hi = 4
grid.h  = 0.03125
flow.times = 0.25
"""

VERIFY_OK_CFG = """
transform = power alpha=0
datum = exp_abs
grid.lo = -4
grid.hi = 4
grid.h  = 0.03125
flow.times = 0.05,0.1
"""

VERIFY_BAD_CFG = """
transform = power alpha=2
datum = counterexample r0=1
grid.lo = -6
grid.hi = 6
grid.h  = 0.046875
flow.times = 0.05
"""

HUNT_CFG = """
transform = power alpha=1.5
datum = counterexample r0=1
grid.lo = -6
grid.hi = 6
grid.h  = 0.09375
flow.times = 0.05,0.1
certify.refine_levels = 2
"""


def test_classify_writes_table_and_metadata(tmp_path):
    cfg = write_config(tmp_path, CLASSIFY_CFG)
    out = tmp_path / "res"
    r = run_cli("classify", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert "power[0]: preserved" in r.stdout
    assert "power[2]: not_preserved" in r.stdout

    table = (out / "classify.csv").read_text().splitlines()
    assert table[0] == ClassReport.csv_header()
    assert len(table) == 4

    meta = json.loads((out / "classify_meta.json").read_text())
    assert meta["command"] == "classify"
    assert meta["verdicts"]["power[1]"] == "preserved"
    # defaults are recorded alongside explicit settings
    assert meta["config"]["grid.h"] == pytest.approx(1 / 64)
    assert meta["config"]["certify.lambda_set"] == [0.5]
    assert meta["config"]["flow.times"] == [0.05, 0.1, 0.2]


def test_evolve_output_round_trips_and_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, EVOLVE_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    ra = run_cli("evolve", "--config", cfg, "--out", str(out_a))
    rb = run_cli("evolve", "--config", cfg, "--out", str(out_b))
    assert ra.returncode == 0, ra.stderr
    assert rb.returncode == 0

    csv_a = (out_a / "evolve_00.csv").read_bytes()
    csv_b = (out_b / "evolve_00.csv").read_bytes()
    assert csv_a == csv_b

    text = csv_a.decode()
    assert text.startswith("# t=0.25")
    u = GridFunction.from_csv(text)
    assert u.values.size == 257
    assert u.value_error < 1e-6

    meta = json.loads((out_a / "evolve_meta.json").read_text())
    assert meta["results"][0]["t"] == 0.25


def test_verify_clean_run_exits_zero(tmp_path):
    cfg = write_config(tmp_path, VERIFY_OK_CFG)
    out = tmp_path / "res"
    r = run_cli("verify", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    rows = (out / "verify.csv").read_text().splitlines()
    assert rows[0].startswith("transform,t,status")
    assert len(rows) == 3
    assert all(",false," in row for row in rows[1:])
    assert "warning" not in r.stderr


def test_verify_flags_destruction_and_warns(tmp_path):
    cfg = write_config(tmp_path, VERIFY_BAD_CFG)
    out = tmp_path / "res"
    r = run_cli("verify", "--config", cfg, "--out", str(out))
    assert r.returncode == 5
    assert "verifying anyway" in r.stderr
    assert "SIGNIFICANT" in r.stdout
    meta = json.loads((out / "verify_meta.json").read_text())
    assert meta["significant_violation"] is True


def test_hunt_reports_earliest_stable_time(tmp_path):
    cfg = write_config(tmp_path, HUNT_CFG)
    out = tmp_path / "res"
    r = run_cli("hunt", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    text = (out / "hunt_power_1.5.csv").read_text()
    assert text.splitlines()[0] == "t,level,h,status,gap,noise_floor,significant"
    assert "# earliest_significant_t=0.05" in text
    assert "# worst lambda=" in text
    meta = json.loads((out / "hunt_meta.json").read_text())
    assert meta["earliest_significant_t"]["power[1.5]"] == 0.05


def test_unknown_key_is_a_config_error(tmp_path):
    cfg = write_config(tmp_path, "grid.spacing = 0.1\n")
    r = run_cli("classify", "--config", cfg)
    assert r.returncode == 2
    assert "config error" in r.stderr


def test_classify_without_transforms_is_a_config_error(tmp_path):
    cfg = write_config(tmp_path, "datum = gaussian t0=0.5\n")
    r = run_cli("classify", "--config", cfg)
    assert r.returncode == 2


def test_bad_grid_extent_flag(tmp_path):
    cfg = write_config(tmp_path, CLASSIFY_CFG)
    r = run_cli("classify", "--config", cfg, "--grid-extent", "wide")
    assert r.returncode == 2
    assert "config error" in r.stderr


def test_schedule_beyond_existence_window_exits_four(tmp_path):
    # growth_A = 1 admits times only up to just under 1/4
    import numpy as np

    x = np.linspace(-2.0, 2.0, 33)
    u0 = GridFunction(values=np.exp(0.5 * x * x), extent=((-2.0, 2.0),),
                      growth_a=1.0, growth_A=1.0)
    datum_file = tmp_path / "datum.csv"
    datum_file.write_text(u0.to_csv())
    cfg = write_config(
        tmp_path, f"datum = csv path={datum_file}\nflow.times = 0.3\n")
    r = run_cli("evolve", "--config", cfg, "--out", str(tmp_path / "res"))
    assert r.returncode == 4
    assert "window error" in r.stderr


def test_inconclusive_classification_exits_three(tmp_path, monkeypatch):
    import heatconvex.cli as cli_mod

    real = ClassReport
    stub = real(label="stub", admissible=True, limit_at_sup=True,
                gaussian_divergent=True, gaussian_order=0.0,
                deriv_positive=None, curvature_convex=None,
                verdict="inconclusive", basis="stubbed for the exit code")
    monkeypatch.setattr(cli_mod, "classify", lambda F: stub)
    cfg = write_config(tmp_path, "transform = power alpha=1\n")
    monkeypatch.chdir(tmp_path)
    assert entry(["classify", "--config", cfg]) == 3
