"""
Batch orchestration: expand the sweep, run every method (and the exact
reference) at every point, write spectra, populations and diagnostics, then
a summary table. A failing method at one point is recorded and the run continues.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, NamedTuple, Optional

import numpy as np
import pandas as pd

from . import __version__
from .config import ORACLE, RunConfig, SweepPoint, config_to_tree, expand_sweep
from .diagnostics import REFERENCE_METHOD, point_diagnostics, relative_bounds, relative_error, series_error
from .errors import PhonocavError
from .master_eq import build, build_liouvillian
from .oracle import OracleResult, run_oracle
from .spectra import cavity_spectrum, dipole_spectrum, exciton_population, write_series, write_spectrum

logger = logging.getLogger(__name__)

SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
CONFIG_COPY = "config.json"

# Failures of a single method at a single point; anything else aborts the run.
RECOVERABLE_ERRORS = (PhonocavError, ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError)


class RunReport(NamedTuple):
    directory: Path
    rows: list[dict[str, Any]]
    points: int
    failures: int
    elapsed: float

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")


def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def _log_run_summary(report: RunReport, methods: tuple[str, ...]) -> None:
    """Log a clear end-of-run summary."""
    logger.info("")
    logger.info("Run summary:")
    logger.info("  points                  %d", report.points)
    logger.info("  methods                 %s", ", ".join(methods))
    logger.info("  failed (point, method)  %d", report.failures)
    logger.info("  output directory        %s", report.directory)
    logger.info("  elapsed                 %.1f s", report.elapsed)


def _run_oracle(point: SweepPoint, config: RunConfig, folder: Path, row: dict[str, Any]) -> Optional[OracleResult]:
    result = run_oracle(point.system, point.bath, config.numerics, config.routes)
    for route, spectrum in result.spectra.items():
        if config.output.write_spectra:
            write_spectrum(spectrum, folder / f"{ORACLE}_{route}.csv")
    if config.output.write_population:
        write_series(folder / f"{ORACLE}_population.csv", {"t_ps": result.t, "population": result.population})
    report = result.report.as_dict() if result.report is not None else {}
    _write_json(folder / f"{ORACLE}_diagnostics.json", {"method": ORACLE, "convergence": report})
    row.update(oracle_converged=report.get("converged"), oracle_dimension=result.dimension)
    return result


def _run_method(
    method: str,
    point: SweepPoint,
    config: RunConfig,
    folder: Path,
    oracle: Optional[OracleResult],
    row: dict[str, Any],
) -> None:
    numerics = config.numerics
    spec = build(method, point.system, point.bath, numerics)
    L = build_liouvillian(spec)
    record = point_diagnostics(spec, L)
    comparable = oracle is not None and config.compare_oracle
    converged = comparable and oracle.report is not None and oracle.report.converged is True
    for route in config.routes:
        builder = cavity_spectrum if route == "cavity" else dipole_spectrum
        spectrum = builder(spec, numerics.spectrum, L)
        record[f"negativity_{route}"] = spectrum.metadata["negativity"]
        if config.output.write_spectra:
            write_spectrum(spectrum, folder / f"{method}_{route}.csv")
        if comparable:
            error = relative_error(oracle.spectra[route], spectrum) if converged else math.nan
            record[f"relative_error_{route}"] = error
    if config.output.write_population:
        t, P = exciton_population(spec, numerics.spectrum, L)
        write_series(folder / f"{method}_population.csv", {"t_ps": t, "population": P})
        if comparable:
            record["population_error"] = series_error(oracle.t, oracle.population, t, P) if converged else math.nan
    if method == "variational" and spec.profile is not None and spec.profile.nodes.size:
        write_series(folder / "variational_profile.csv", {"nu_rad_per_ps": spec.profile.nodes, "F": spec.profile.F})
    _write_json(folder / f"{method}_diagnostics.json", record)
    row.update({k: v for k, v in record.items() if k != "method"})


def run_point(point: SweepPoint, config: RunConfig) -> list[dict[str, Any]]:
    """All configured methods at one sweep point; one summary row per method."""
    folder = config.output.directory / point.label
    folder.mkdir(parents=True, exist_ok=True)
    base = {"point": point.index, **point.values}
    rows: list[dict[str, Any]] = []

    oracle: Optional[OracleResult] = None
    if ORACLE in config.methods:
        row = {**base, "method": ORACLE, "status": "ok", "error": ""}
        try:
            oracle = _run_oracle(point, config, folder, row)
        except RECOVERABLE_ERRORS as e:
            logger.warning("%s %s failed: %s", point.label, ORACLE, e)
            row.update(status="failed", error=f"{type(e).__name__}: {e}")
        rows.append(row)
        if oracle is not None and oracle.report is not None and oracle.report.converged is not True:
            state = "was not checked" if oracle.report.converged is None else "failed"
            logger.warning("%s: exact reference convergence %s; relative errors set to NaN", point.label, state)

    for method in config.methods:
        if method == ORACLE:
            continue
        row = {**base, "method": method, "status": "ok", "error": ""}
        try:
            _run_method(method, point, config, folder, oracle, row)
            logger.info(
                "%s %-17s PS=%.3e  shift=%.4f  delta_eta=%.4f",
                point.label, method, row["perturbation_strength"], row["shift"], row["delta_eta"],
            )
        except RECOVERABLE_ERRORS as e:
            logger.warning("%s %s failed: %s", point.label, method, e)
            row.update(status="failed", error=f"{type(e).__name__}: {e}")
        rows.append(row)

    bounds = {r["method"]: r["bogoliubov_bound"] for r in rows if "bogoliubov_bound" in r}
    relative = relative_bounds(bounds) if REFERENCE_METHOD in bounds else {}
    for r in rows:
        if "bogoliubov_bound" in r:
            r["bogoliubov_relative"] = relative.get(r["method"], math.nan)
    return rows


def run(config: RunConfig) -> RunReport:
    """
    Run every sweep point (in parallel over points when workers > 1) and write
    summary.csv / summary.json and a copy of the resolved configuration.
    """
    start = time.perf_counter()
    points = expand_sweep(config)
    directory = config.output.directory
    directory.mkdir(parents=True, exist_ok=True)
    _write_json(directory / CONFIG_COPY, {"code_version": __version__, **config_to_tree(config)})
    logger.info("Running %d point(s) x %d method(s): %s", len(points), len(config.methods), ", ".join(config.methods))

    if config.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_point = list(pool.map(lambda pt: run_point(pt, config), points))
    else:
        per_point = [run_point(pt, config) for pt in points]

    rows = [row for point_rows in per_point for row in point_rows]
    frame = pd.DataFrame(rows)
    frame.to_csv(directory / SUMMARY_CSV, index=False, float_format="%.10e")
    _write_json(directory / SUMMARY_JSON, rows)
    logger.info("Wrote: %s", directory / SUMMARY_CSV)

    report = RunReport(
        directory=directory,
        rows=rows,
        points=len(points),
        failures=sum(1 for r in rows if r["status"] != "ok"),
        elapsed=time.perf_counter() - start,
    )
    _log_run_summary(report, config.methods)
    return report
