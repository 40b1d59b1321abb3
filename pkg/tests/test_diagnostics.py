"""Tests for error metrics, validity estimates and polariton peak extraction."""

from __future__ import annotations

import math

import numpy as np
import pytest

from phonocav.bath import BathParams
from phonocav.detect import PeakPair, lorentzian
from phonocav.diagnostics import (
    REFERENCE_METHOD,
    bogoliubov_bound,
    extract_peaks,
    peaks_from_liouvillian,
    perturbation_strength,
    point_diagnostics,
    relative_bounds,
    relative_error,
    series_error,
    shift_and_renormalization,
)
from phonocav.errors import DegeneratePeaksError, ImaginaryRenormalizationError
from phonocav.master_eq import METHODS, build, build_liouvillian, build_weak
from phonocav.spectra import Spectrum, cavity_spectrum
from phonocav.system import SystemParams

NO_BATH = BathParams(alpha=0.0)


def _spectrum(omega: np.ndarray, S: np.ndarray) -> Spectrum:
    return Spectrum(omega=omega, S=S, method="test", frame="lab", route="cavity")


# ─── error metrics ───


def test_relative_error_basics() -> None:
    omega = np.linspace(-10.0, 10.0, 2001)
    ref = _spectrum(omega, lorentzian(omega, 1.0, 0.0, 0.5))
    assert relative_error(ref, ref) == 0.0
    assert relative_error(ref, ref._replace(S=2.0 * ref.S)) == pytest.approx(1.0)
    assert relative_error(ref, ref._replace(S=np.zeros_like(omega))) == pytest.approx(1.0)


def test_relative_error_interpolates_other_grid() -> None:
    omega = np.linspace(-10.0, 10.0, 2001)
    coarse = np.linspace(-10.0, 10.0, 401)
    ref = _spectrum(omega, lorentzian(omega, 1.0, 0.0, 0.5))
    other = _spectrum(coarse, lorentzian(coarse, 1.0, 0.0, 0.5))
    assert relative_error(ref, other) < 1e-2


def test_relative_error_window() -> None:
    omega = np.linspace(-100.0, 100.0, 20001)
    S = lorentzian(omega, 1.0, 0.0, 0.5)
    far = S + np.where(np.abs(omega) > 70.0, 1.0, 0.0)
    assert relative_error(_spectrum(omega, S), _spectrum(omega, far)) == 0.0
    assert relative_error(_spectrum(omega, S), _spectrum(omega, far), window=100.0) > 1.0


def test_relative_error_rejects_empty_reference() -> None:
    omega = np.linspace(-1.0, 1.0, 11)
    with pytest.raises(ValueError, match="vanishes"):
        relative_error(_spectrum(omega, np.zeros(11)), _spectrum(omega, np.ones(11)))


def test_series_error() -> None:
    t = np.linspace(0.0, 10.0, 101)
    P = np.exp(-t)
    assert series_error(t, P, t, P) == 0.0
    assert series_error(t, P, t[::2], P[::2]) < 1e-2
    assert series_error(t, P, t, 0.5 * P) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="common window"):
        series_error(t, P, t + 20.0, P)


# ─── peaks ───


def test_shift_and_renormalization_symmetric_peaks() -> None:
    peaks = PeakPair(S_plus=2.0, S_minus=-2.0, width_plus=0.1, width_minus=0.1, weight_plus=1.0, weight_minus=1.0)
    shift, delta_eta = shift_and_renormalization(peaks, g=2.0)
    assert shift == 0.0
    assert delta_eta == pytest.approx(1.0)


def test_shift_and_renormalization_errors() -> None:
    lopsided = PeakPair(S_plus=3.0, S_minus=2.0, width_plus=0.1, width_minus=0.1, weight_plus=1.0, weight_minus=1.0)
    with pytest.raises(ImaginaryRenormalizationError):
        shift_and_renormalization(lopsided, g=1.0)
    with pytest.raises(ValueError, match="g > 0"):
        shift_and_renormalization(lopsided, g=0.0)


def test_liouvillian_peaks_without_bath(resonant_system: SystemParams) -> None:
    s = resonant_system
    peaks = peaks_from_liouvillian(build_liouvillian(build_weak(s, NO_BATH)))
    root = math.sqrt(s.g**2 - s.kappa**2 / 16.0)
    assert peaks.S_plus == pytest.approx(root, rel=1e-10)
    assert peaks.S_minus == pytest.approx(-root, rel=1e-10)
    assert peaks.width_plus == pytest.approx(s.kappa / 4.0, rel=1e-10)
    assert peaks.width_minus == pytest.approx(s.kappa / 4.0, rel=1e-10)
    assert peaks.source == "liouvillian"


def test_overdamped_system_has_degenerate_peaks() -> None:
    L = build_liouvillian(build_weak(SystemParams(g=1.0, kappa=8.0), NO_BATH))
    with pytest.raises(DegeneratePeaksError):
        peaks_from_liouvillian(L)


def test_liouvillian_and_spectrum_peaks_agree(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_weak(resonant_system, bath_4k)
    L = build_liouvillian(spec)
    from_L = extract_peaks(L)
    from_S = extract_peaks(cavity_spectrum(spec, L=L))
    assert from_S.source == "spectrum"
    tol = 0.02 * from_L.splitting
    assert from_S.S_plus == pytest.approx(from_L.S_plus, abs=tol)
    assert from_S.S_minus == pytest.approx(from_L.S_minus, abs=tol)


# ─── validity estimates ───


def test_perturbation_strength_vanishes_without_bath(resonant_system: SystemParams) -> None:
    for method in METHODS:
        assert perturbation_strength(method, resonant_system, NO_BATH) == 0.0


def test_weak_perturbation_strength_independent_of_g(bath_4k: BathParams) -> None:
    a = perturbation_strength("weak", SystemParams(g=0.57), bath_4k)
    b = perturbation_strength("weak", SystemParams(g=7.91), bath_4k)
    assert a > 0
    assert a == pytest.approx(b, rel=1e-9)


def test_perturbation_strength_needs_parameters() -> None:
    with pytest.raises(ValueError, match="required"):
        perturbation_strength("weak")


def test_bounds_coincide_without_bath(resonant_system: SystemParams) -> None:
    bounds = {m: bogoliubov_bound(m, resonant_system, NO_BATH) for m in METHODS}
    for value in bounds.values():
        assert value == pytest.approx(bounds["weak"], abs=1e-12)


def test_zero_temperature_bound_is_lowest_energy(bath_zero_t: BathParams, resonant_system: SystemParams) -> None:
    spec = build("polaron", resonant_system, bath_zero_t)
    lowest = float(np.linalg.eigvalsh(spec.frame_hamiltonian[1:, 1:]).min())
    assert bogoliubov_bound(spec) == pytest.approx(lowest, rel=1e-12)


def test_variational_bound_is_lowest(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    var = bogoliubov_bound("variational", resonant_system, bath_4k)
    assert var <= bogoliubov_bound("weak", resonant_system, bath_4k) + 1e-9
    assert var <= bogoliubov_bound("polaron", resonant_system, bath_4k) + 1e-9


def test_relative_bounds() -> None:
    bounds = {"weak": 1.0, "polaron": 0.5, REFERENCE_METHOD: 0.25}
    assert relative_bounds(bounds) == {"weak": 0.75, "polaron": 0.25, REFERENCE_METHOD: 0.0}
    assert relative_bounds({"weak": 1.0}) == {"weak": 1.0}


def test_point_diagnostics_record(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    record = point_diagnostics(build("variational", resonant_system, bath_4k))
    for key in (
        "method", "perturbation_strength", "bogoliubov_bound", "naive_shift", "B", "gamma",
        "max_real_eigenvalue", "stability_flag", "S_plus", "S_minus", "shift", "delta_eta",
    ):
        assert key in record
    assert record["method"] == "variational"
    assert isinstance(record["stability_flag"], bool)
    assert 0.0 < record["B"] < 1.0
    assert record["S_plus"] > 0 > record["S_minus"]


def test_point_diagnostics_records_peak_failure() -> None:
    record = point_diagnostics(build_weak(SystemParams(g=1.0, kappa=8.0), NO_BATH))
    assert math.isnan(record["delta_eta"])
    assert "peaks_error" in record
