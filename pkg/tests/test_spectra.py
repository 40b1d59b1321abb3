"""Tests for time evolution, quantum-regression correlators and spectra."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from phonocav.bath import BathParams
from phonocav.diagnostics import relative_error
from phonocav.errors import ConfigError
from phonocav.master_eq import METHODS, build, build_liouvillian, build_weak
from phonocav.oracle import jc_cavity_spectrum, jc_dipole_spectrum
from phonocav.spectra import (
    TimeGrid,
    auto_t_max,
    cavity_spectrum,
    dipole_spectrum,
    exciton_population,
    green_function,
    integrated_correlation,
    negativity,
    read_spectrum,
    trapezoid_integrated_correlation,
    two_time,
    write_spectrum,
)
from phonocav.system import SystemParams, cavity, initial_density

NO_BATH = BathParams(alpha=0.0)


@pytest.mark.parametrize("method", METHODS)
def test_no_bath_cavity_spectrum_is_jaynes_cummings(resonant_system: SystemParams, method: str) -> None:
    spectrum = cavity_spectrum(build(method, resonant_system, NO_BATH))
    assert not spectrum.metadata["windowed"]
    reference = spectrum._replace(S=jc_cavity_spectrum(spectrum.omega, resonant_system))
    assert relative_error(reference, spectrum) < 1e-4


def test_no_bath_dipole_spectrum_is_jaynes_cummings(resonant_system: SystemParams) -> None:
    spectrum = dipole_spectrum(build_weak(resonant_system, NO_BATH))
    reference = spectrum._replace(S=jc_dipole_spectrum(spectrum.omega, resonant_system))
    assert relative_error(reference, spectrum) < 1e-4


def test_detuned_spectrum_is_jaynes_cummings() -> None:
    s = SystemParams(omega_eg=1.0, omega_c=-1.0, g=1.5, kappa=0.8)
    spectrum = cavity_spectrum(build_weak(s, NO_BATH))
    reference = spectrum._replace(S=jc_cavity_spectrum(spectrum.omega, s))
    assert relative_error(reference, spectrum) < 1e-4


@pytest.mark.parametrize("method", ["weak", "polaron", "variational"])
def test_cavity_spectrum_area(bath_4k: BathParams, resonant_system: SystemParams, method: str) -> None:
    # Every photon leaves through the cavity, so int S domega = 2 pi.
    spectrum = cavity_spectrum(build(method, resonant_system, bath_4k))
    area = float(np.sum(spectrum.S) * (spectrum.omega[1] - spectrum.omega[0]))
    assert area == pytest.approx(2.0 * math.pi, rel=1e-3)


def test_integrated_correlation_matches_two_time(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_weak(resonant_system, bath_4k)
    L = build_liouvillian(spec)
    rho0 = initial_density(resonant_system)
    grid_t = TimeGrid.from_step(30.0, 0.005)
    grid_tau = TimeGrid.from_step(5.0, 0.05)
    a = cavity()
    G = two_time(L, a.conj().T, a, rho0, grid_t, grid_tau)
    exact = integrated_correlation(L, a, rho0, grid_tau.t, 30.0)
    np.testing.assert_allclose(trapezoid_integrated_correlation(G, grid_t), exact, atol=1e-4 * abs(exact[0]))


def test_time_grid_validation(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    L = build_liouvillian(build_weak(resonant_system, bath_4k))
    with pytest.raises(ConfigError, match="under-resolves"):
        TimeGrid.from_step(10.0, 1.0).validate(L)
    with pytest.raises(ConfigError, match="t_max > 0"):
        TimeGrid.from_step(0.0, 0.1)
    assert TimeGrid.from_step(1.0, 0.01).validate(L).n_t == 101


def test_auto_t_max_follows_slowest_mode(resonant_system: SystemParams) -> None:
    L = build_liouvillian(build_weak(resonant_system, NO_BATH))
    # Slowest Liouvillian rate at resonance is kappa / 4.
    assert auto_t_max(L) == pytest.approx(math.log(1e7) / (resonant_system.kappa / 4.0), rel=1e-6)


def test_green_function() -> None:
    omega = np.array([0.0, 0.25])
    G = green_function(omega, g=1.0, kappa=0.5)
    assert G[0] == pytest.approx(8.0)
    assert G[1] == pytest.approx(4.0)
    with pytest.raises(ValueError, match="kappa > 0"):
        green_function(omega, g=1.0, kappa=0.0)


def test_negativity() -> None:
    assert negativity(np.array([-0.01, 1.0, 0.5])) == pytest.approx(0.01)
    assert negativity(np.array([0.0, 2.0, 1.0])) == 0.0
    assert negativity(np.zeros(4)) == 0.0


def test_weak_dipole_spectrum_flags_negative_lobes(
    bath_4k: BathParams, resonant_system: SystemParams, caplog: pytest.LogCaptureFixture
) -> None:
    with caplog.at_level("WARNING", logger="phonocav.spectra"):
        spectrum = dipole_spectrum(build_weak(resonant_system, bath_4k))
    assert spectrum.S.min() < 0
    assert spectrum.metadata["negativity"] == pytest.approx(-spectrum.S.min() / spectrum.S.max())
    assert spectrum.metadata["negativity"] > 1e-3
    assert "dips below zero" in caplog.text


def test_no_bath_spectrum_records_negativity(resonant_system: SystemParams) -> None:
    spectrum = cavity_spectrum(build_weak(resonant_system, NO_BATH))
    assert 0.0 <= spectrum.metadata["negativity"] < 1e-3


def test_exciton_population(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    t, P = exciton_population(build_weak(resonant_system, bath_4k))
    assert t[0] == 0.0
    assert P[0] == pytest.approx(1.0)
    assert P[-1] < 0.2


def test_write_and_read_spectrum(tmp_path: Path, resonant_system: SystemParams) -> None:
    spectrum = cavity_spectrum(build_weak(resonant_system, NO_BATH))
    path = write_spectrum(spectrum, tmp_path / "nested" / "weak_cavity.csv")
    assert path.read_text().splitlines()[0] == "omega_rad_per_ps,intensity"
    sidecar = json.loads(path.with_suffix(".json").read_text())
    assert sidecar["method"] == "weak"
    assert sidecar["grid"]["dtau"] == 0.01
    assert sidecar["negativity"] >= 0.0
    loaded = read_spectrum(path)
    assert loaded.route == "cavity"
    np.testing.assert_allclose(loaded.S, spectrum.S, rtol=1e-9, atol=1e-12)


def test_read_spectrum_rejects_wrong_columns(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="lacks columns"):
        read_spectrum(path)
