"""
Tests: batch runs on cheap configurations (no phonon bath) and the
dry-run validator.
Run from repo root: pytest tests/ -v
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import pandas as pd
import pytest

from phonocav.config import load_config
from phonocav.pipeline import CONFIG_COPY, SUMMARY_CSV, SUMMARY_JSON, run
from phonocav.verify import validate

NO_BATH = ["bath.alpha=0"]


def test_single_method_run_writes_outputs(tmp_path: Path) -> None:
    config = load_config(overrides=[*NO_BATH, 'methods=["weak"]'], out=tmp_path)
    report = run(config)
    assert report.ok
    assert report.points == 1

    folder = tmp_path / "point_0000"
    for name in ("weak_cavity.csv", "weak_cavity.json", "weak_population.csv", "weak_diagnostics.json"):
        assert (folder / name).exists(), name
    assert json.loads((tmp_path / CONFIG_COPY).read_text())["methods"] == ["weak"]

    summary = pd.read_csv(tmp_path / SUMMARY_CSV)
    assert list(summary["method"]) == ["weak"]
    assert summary.loc[0, "status"] == "ok"
    assert summary.loc[0, "perturbation_strength"] == 0.0
    assert summary.loc[0, "delta_eta"] == pytest.approx(1.0, abs=1e-2)
    rows = json.loads((tmp_path / SUMMARY_JSON).read_text())
    assert rows[0]["method"] == "weak"


def test_failing_method_does_not_stop_run(tmp_path: Path) -> None:
    config = load_config(
        overrides=[*NO_BATH, "system.omega_eg=1.0", 'methods=["weak", "polariton-polaron"]', "output.write_population=false"],
        out=tmp_path,
    )
    report = run(config)
    assert not report.ok
    assert report.failures == 1
    by_method = {r["method"]: r for r in report.rows}
    assert by_method["weak"]["status"] == "ok"
    assert by_method["polariton-polaron"]["status"] == "failed"
    assert "UnsupportedConfigurationError" in by_method["polariton-polaron"]["error"]
    assert (tmp_path / "point_0000" / "weak_cavity.csv").exists()
    assert not (tmp_path / "point_0000" / "weak_population.csv").exists()


def test_sweep_with_exact_reference(tmp_path: Path) -> None:
    config = load_config(
        overrides=[
            *NO_BATH,
            "bath.temperature=0",
            'methods=["oracle", "weak"]',
            "numerics.oracle.modes=0",
            'sweep=[{"parameter": "system.g", "values": [1.0, 2.0]}]',
            "workers=2",
        ],
        out=tmp_path,
    )
    report = run(config)
    assert report.ok
    assert report.points == 2
    weak = [r for r in report.rows if r["method"] == "weak"]
    assert [r["system.g"] for r in weak] == [1.0, 2.0]
    for r in weak:
        assert r["relative_error_cavity"] < 5e-3
        assert r["population_error"] < 1e-2
        assert math.isnan(r["bogoliubov_relative"])
    oracle = [r for r in report.rows if r["method"] == "oracle"]
    assert all(r["oracle_converged"] is True and r["oracle_dimension"] == 2 for r in oracle)
    assert (tmp_path / "point_0001" / "oracle_cavity.csv").exists()


def test_unchecked_exact_reference_withholds_errors(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    config = load_config(
        overrides=[
            *NO_BATH,
            "bath.temperature=0",
            'methods=["oracle", "weak"]',
            "numerics.oracle.modes=0",
            "numerics.oracle.check_convergence=false",
        ],
        out=tmp_path,
    )
    with caplog.at_level("WARNING", logger="phonocav.pipeline"):
        report = run(config)
    assert report.ok
    by_method = {r["method"]: r for r in report.rows}
    assert by_method["oracle"]["oracle_converged"] is None
    assert math.isnan(by_method["weak"]["relative_error_cavity"])
    assert math.isnan(by_method["weak"]["population_error"])
    assert "convergence was not checked" in caplog.text
    diagnostics = json.loads((tmp_path / "point_0000" / "oracle_diagnostics.json").read_text())
    assert diagnostics["convergence"]["converged"] is None


def test_relative_bounds_in_summary(tmp_path: Path) -> None:
    config = load_config(
        overrides=[*NO_BATH, 'methods=["weak", "polariton-polaron"]', "output.write_spectra=false"],
        out=tmp_path,
    )
    report = run(config)
    by_method = {r["method"]: r for r in report.rows}
    assert by_method["polariton-polaron"]["bogoliubov_relative"] == 0.0
    assert by_method["weak"]["bogoliubov_relative"] == pytest.approx(0.0, abs=1e-12)


def test_validate_defaults_pass(tmp_path: Path) -> None:
    result = validate(load_config(out=tmp_path))
    assert result["passed"]
    assert result["problems"] == 0
    assert any(c["name"].startswith("quadrature") for c in result["checks"])


def test_validate_reports_problems(tmp_path: Path) -> None:
    config = load_config(
        overrides=[
            "numerics.tau.tau_max_limit=1",
            "system.omega_eg=1.0",
            'methods=["oracle", "polariton-polaron"]',
            "numerics.oracle.modes=10",
        ],
        out=tmp_path,
    )
    result = validate(config)
    assert not result["passed"]
    failed = {c["name"] for c in result["checks"] if not c["passed"]}
    assert "point_0000 polariton-polaron" in failed
    assert "point_0000 oracle modes" in failed
    assert any(name.startswith("correlation grid") for name in failed)
