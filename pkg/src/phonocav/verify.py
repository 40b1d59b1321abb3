"""
Dry-run validation of a run configuration: sweep expansion, quadrature and
correlation-grid trial evaluations, method applicability and exact-reference dimensions.
Nothing is written.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Callable

from .bath import BathParams, dephasing_rate, fixed_profile, polaron_shift
from .config import ORACLE, RunConfig, expand_sweep
from .correlations import choose_tau_grid
from .errors import PhonocavError
from .oracle import check_dimension, discretize_bath
from .settings import ORACLE_THERMAL_MODES_MAX

logger = logging.getLogger(__name__)


class _Checks:
    def __init__(self) -> None:
        self.results: list[dict[str, Any]] = []

    def record(self, name: str, passed: bool, detail: str) -> None:
        self.results.append({"name": name, "passed": passed, "detail": detail})
        logger.info("  [%s] %s: %s", "PASS" if passed else "FAIL", name, detail)

    def attempt(self, name: str, fn: Callable[[], str]) -> None:
        try:
            self.record(name, True, fn())
        except (PhonocavError, ValueError, RuntimeError) as e:
            self.record(name, False, str(e))

    @property
    def problems(self) -> int:
        return sum(1 for r in self.results if not r["passed"])


def _writable(directory: Path) -> bool:
    target = directory.resolve()
    while not target.exists():
        target = target.parent
    return target.is_dir() and os.access(target, os.W_OK)


def _bath_label(p: BathParams) -> str:
    return f"alpha={p.alpha:g}, nu_c={p.nu_c:g}, T={p.temperature:g} K"


def validate(config: RunConfig) -> dict[str, Any]:
    """
    Run every check, log "[PASS]" / "[FAIL]" lines and a final verdict.
    Returns dict with passed, problems and the individual checks.
    """
    checks = _Checks()
    numerics = config.numerics

    checks.record(
        "output directory",
        _writable(config.output.directory),
        f"{config.output.directory} {'is' if _writable(config.output.directory) else 'is not'} writable",
    )
    try:
        points = expand_sweep(config)
    except PhonocavError as e:
        checks.record("sweep", False, str(e))
        points = []
    else:
        checks.record("sweep", True, f"{len(points)} point(s), {len(config.methods)} method(s)")

    baths = list(dict.fromkeys(pt.bath for pt in points))
    for p in baths:
        label = _bath_label(p)
        checks.attempt(
            f"quadrature ({label})",
            lambda p=p: (
                f"gamma={dephasing_rate(p, numerics.dephasing_convention, numerics.quadrature):.4e} rad/ps, "
                f"polaron shift={polaron_shift(p, numerics.quadrature):.4f} rad/ps"
            ),
        )
        for F in (0.0, 1.0):
            checks.attempt(
                f"correlation grid F={F:g} ({label})",
                lambda p=p, F=F: "tau_max={:.2f} ps".format(
                    choose_tau_grid(fixed_profile(F, p, settings=numerics.quadrature), p, 0.0, numerics.tau, numerics.quadrature).tau_max
                ),
            )

    for pt in points:
        s = pt.system
        if "polariton-polaron" in config.methods and s.delta != 0:
            checks.record(f"{pt.label} polariton-polaron", False, f"needs zero detuning, got delta={s.delta:g} rad/ps")
        if "dipole" in config.routes and not s.kappa > 0:
            checks.record(f"{pt.label} dipole route", False, "the cavity Green's function needs kappa > 0")
        if ORACLE in config.methods:
            st = numerics.oracle
            if pt.bath.temperature > 0 and st.modes > ORACLE_THERMAL_MODES_MAX:
                checks.record(
                    f"{pt.label} oracle modes", False,
                    f"{st.modes} modes at T={pt.bath.temperature:g} K; use at most {ORACLE_THERMAL_MODES_MAX}",
                )
                continue
            checks.attempt(
                f"{pt.label} oracle dimension",
                lambda pt=pt, st=st: "dimension {}".format(
                    check_dimension(discretize_bath(pt.bath, st.modes, st.nu_max_factor * pt.bath.nu_c, st.min_cutoff), st)
                ),
            )

    passed = checks.problems == 0
    if passed:
        logger.info("Validate: PASS")
    else:
        logger.error("Validate: FAIL (%d problems)", checks.problems)
    return {"passed": passed, "problems": checks.problems, "checks": checks.results}
