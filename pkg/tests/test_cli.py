"""Command-line surface: exit codes, artifacts, determinism, formatting."""

from __future__ import annotations

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np

from lbmlab.runio import format_value


def run_cli(*argv, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "lbmlab.cli", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


def read_rows(path: Path) -> list[dict]:
    with open(path) as handle:
        return list(csv.DictReader(handle))


def test_analyze_zero_k_acm_has_three_conserved_modes(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("analyze", "--scheme", "acm", "--nu", "0.01", "--k", "0", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    csv_path = Path(proc.stdout.strip())
    assert csv_path == out / "eigenvalues.csv"
    rows = read_rows(csv_path)
    assert len(rows) == 3
    unit = [r for r in rows if abs(float(r["z_re"]) - 1.0) <= 1e-9 and abs(float(r["z_im"])) <= 1e-9]
    assert len(unit) == 3


def test_analyze_zero_k_mrt_kinetic_eigenvalues(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("analyze", "--scheme", "mrt", "--nu", "0.02", "--k", "0", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    rows = read_rows(out / "eigenvalues.csv")
    assert len(rows) == 9
    z = sorted(float(r["z_re"]) for r in rows)
    s_xx = 1.0 / (3.0 * 0.02 + 0.5)
    expected = sorted([1.0, 1.0, 1.0, 1.0 - s_xx, 1.0 - s_xx, 1.0 - s_xx, -0.3, -0.3, 0.0])
    assert np.max(np.abs(np.array(z) - np.array(expected))) <= 1e-9
    assert max(abs(float(r["z_im"])) for r in rows) <= 1e-9


def test_manifest_records_parameters_and_derived(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("analyze", "--scheme", "acm", "--nu", "0.01", "--k", "0.3", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    manifest = (out / "eigenvalues.manifest.txt").read_text()
    assert "artifact = eigenvalues" in manifest
    assert "[parameters]" in manifest and "[derived]" in manifest
    assert "scheme_kind = acm" in manifest
    assert "scheme_nu = 0.01" in manifest
    assert "analysis_direction = 1,0" in manifest
    assert "\nk = " in manifest


def test_invalid_config_key_exits_2_without_artifacts(tmp_path):
    bad = tmp_path / "run.cfg"
    bad.write_text("[scheme]\nkinnd = mrt\n")
    out = tmp_path / "out"
    proc = run_cli("analyze", "--config", str(bad), "--k", "0", "--out", str(out))
    assert proc.returncode == 2
    assert "configuration error" in proc.stderr
    assert "kinnd" in proc.stderr
    assert not out.exists()


def test_invalid_scheme_value_exits_2(tmp_path):
    proc = run_cli("analyze", "--scheme", "acm", "--nu", "0.5", "--k", "0",
                   "--out", str(tmp_path / "out"))
    assert proc.returncode == 2
    assert not (tmp_path / "out").exists()


def test_unknown_config_section_exits_2(tmp_path):
    bad = tmp_path / "run.cfg"
    bad.write_text("[turbulence]\nmodel = none\n")
    proc = run_cli("analyze", "--config", str(bad), "--k", "0", "--out", str(tmp_path / "out"))
    assert proc.returncode == 2
    assert not (tmp_path / "out").exists()


def test_missing_config_file_exits_2(tmp_path):
    proc = run_cli("analyze", "--config", str(tmp_path / "absent.cfg"), "--k", "0")
    assert proc.returncode == 2


def test_rerun_is_bit_identical(tmp_path):
    args = ("analyze", "--scheme", "mrt", "--nu", "0.02", "--direction", "2,1",
            "--k-max", "0.3", "--samples", "4")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(*args, "--out", str(a)).returncode == 0
    assert run_cli(*args, "--out", str(b)).returncode == 0
    for name in ("dispersion.csv", "dispersion.manifest.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # overwriting in place reproduces the same bytes too
    before = (a / "dispersion.csv").read_bytes()
    assert run_cli(*args, "--out", str(a)).returncode == 0
    assert (a / "dispersion.csv").read_bytes() == before


def test_values_are_printed_at_nine_significant_digits(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("analyze", "--scheme", "acm", "--nu", "0.01", "--k", "0.3", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    rows = read_rows(out / "eigenvalues.csv")
    for row in rows:
        for key, text in row.items():
            if key == "mode":
                continue
            assert text == format_value(float(text))
            mantissa = text.lstrip("-").replace(".", "").replace("e", " ").split()[0]
            assert len(mantissa.lstrip("0")) <= 9


def test_poiseuille_subcommand_end_to_end(tmp_path):
    out = tmp_path / "out"
    proc = run_cli(
        "poiseuille", "--scheme", "mrt", "--nu", "0.1", "--width", "7", "--xi", "0.5",
        "--nx", "4", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    rows = read_rows(out / "poiseuille.csv")
    assert len(rows) == 7
    assert all(float(r["u"]) > 0.0 for r in rows)
    manifest = (out / "poiseuille.manifest.txt").read_text()
    assert "xi_measured = " in manifest
    assert "parabolic = true" in manifest
    assert "channel_width = 7" in manifest


def test_shear_wave_subcommand_end_to_end(tmp_path):
    out = tmp_path / "out"
    proc = run_cli(
        "shear-wave", "--scheme", "mrt", "--nu", "0.05", "--extent", "24",
        "--multiples", "1,0", "--max-steps", "400", "--fit-start", "20", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    manifest = (out / "shear_wave.manifest.txt").read_text()
    assert "nu_effective = " in manifest
    # k = 2 pi / 24, gamma = nu k^2 to leading order
    for line in manifest.splitlines():
        if line.startswith("nu_effective = "):
            nu_eff = float(line.split(" = ")[1])
            assert abs(nu_eff / 0.05 - 1.0) <= 0.05


def test_missing_subcommand_exits_2():
    proc = run_cli()
    assert proc.returncode == 2
    proc = run_cli("interpolate")
    assert proc.returncode == 2


def test_help_exits_zero():
    proc = run_cli("--help")
    assert proc.returncode == 0
    for name in ("analyze", "shear-wave", "stokes-disk", "poiseuille", "tables", "selftest"):
        assert name in proc.stdout
