"""Tests for the self-consistent variational displacement."""

from __future__ import annotations

import numpy as np
import pytest

from phonocav.bath import BathParams, polaron_shift
from phonocav.errors import ConvergenceError
from phonocav.settings import SolverSettings
from phonocav.system import SystemParams
from phonocav.variational import solve_variational


def test_no_light_matter_coupling_gives_polaron(bath_4k: BathParams) -> None:
    prof = solve_variational(SystemParams(g=0.0), bath_4k)
    assert prof.fixed == 1.0
    assert prof.R == pytest.approx(polaron_shift(bath_4k), rel=1e-9)
    assert prof.iterations == 0


def test_no_bath_coupling_gives_bare_values() -> None:
    prof = solve_variational(SystemParams(g=2.23), BathParams(alpha=0.0))
    assert prof.fixed == 1.0
    assert prof.R == 0.0
    assert prof.B == 1.0
    assert prof.gV == pytest.approx(2.23)


@pytest.mark.parametrize("g", [0.57, 2.23, 7.91])
def test_profile_bounds(bath_4k: BathParams, g: float) -> None:
    prof = solve_variational(SystemParams(g=g), bath_4k)
    assert prof.fixed is None
    assert np.all(prof.F >= 0.0) and np.all(prof.F <= 1.0)
    assert prof.R <= 0.0
    assert 0.0 < prof.B <= 1.0
    assert prof.residual < SolverSettings().tol


def test_evaluate_reproduces_nodes(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    prof = solve_variational(resonant_system, bath_4k)
    np.testing.assert_allclose(prof.evaluate(prof.nodes), prof.F, rtol=1e-12)


def test_low_frequency_modes_are_not_displaced(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    prof = solve_variational(resonant_system, bath_4k)
    assert float(prof.evaluate(1e-3)) < 0.01
    assert float(prof.evaluate(8.0 * bath_4k.nu_c)) > 0.8


def test_stronger_coupling_displaces_less(bath_4k: BathParams) -> None:
    weak = solve_variational(SystemParams(g=0.57), bath_4k)
    strong = solve_variational(SystemParams(g=7.91), bath_4k)
    assert strong.B > weak.B


def test_max_iter_raises_with_residual(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    settings = SolverSettings(max_iter=1)
    with pytest.raises(ConvergenceError) as info:
        solve_variational(resonant_system, bath_4k, settings)
    assert info.value.residual > settings.tol


def test_bad_inputs(bath_4k: BathParams) -> None:
    with pytest.raises(ValueError, match="damping"):
        solve_variational(SystemParams(), bath_4k, SolverSettings(damping=0.0))
    with pytest.raises(ValueError, match="g must be >= 0"):
        solve_variational(SystemParams(g=-1.0), bath_4k)
