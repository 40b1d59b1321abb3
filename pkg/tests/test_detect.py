"""Tests for peak detection and Lorentzian fitting on sampled spectra."""

from __future__ import annotations

import math

import numpy as np
import pytest

from phonocav.detect import fit_lorentzian, fit_peaks, has_feature_near, local_maxima, lorentzian, sideband_fraction
from phonocav.errors import DegeneratePeaksError

OMEGA = np.linspace(-40.0, 40.0, 8001)


def _two_peaks(height_minus: float = 1.0, height_plus: float = 0.6):
    return lorentzian(OMEGA, height_minus, -2.0, 0.2) + lorentzian(OMEGA, height_plus, 2.5, 0.3)


def test_local_maxima_strongest_first() -> None:
    idx = local_maxima(OMEGA, _two_peaks())
    assert len(idx) == 2
    assert OMEGA[idx[0]] == pytest.approx(-2.0, abs=0.02)
    assert OMEGA[idx[1]] == pytest.approx(2.5, abs=0.02)
    assert local_maxima(OMEGA, np.zeros_like(OMEGA)).size == 0


def test_fit_lorentzian_recovers_parameters() -> None:
    S = lorentzian(OMEGA, 2.0, 0.31, 0.25)
    fit = fit_lorentzian(OMEGA, S, int(np.argmax(S)))
    assert fit.height == pytest.approx(2.0, rel=1e-4)
    assert fit.center == pytest.approx(0.31, abs=1e-4)
    assert fit.width == pytest.approx(0.25, rel=1e-4)
    assert fit.area == pytest.approx(math.pi * 0.5, rel=1e-4)


def test_fit_peaks_orders_by_frequency() -> None:
    peaks = fit_peaks(OMEGA, _two_peaks())
    assert peaks.S_minus == pytest.approx(-2.0, abs=5e-3)
    assert peaks.S_plus == pytest.approx(2.5, abs=5e-3)
    assert peaks.splitting == pytest.approx(4.5, abs=1e-2)
    assert peaks.weight_minus > peaks.weight_plus


def test_single_peak_is_degenerate() -> None:
    with pytest.raises(DegeneratePeaksError, match="need two"):
        fit_peaks(OMEGA, lorentzian(OMEGA, 1.0, 0.0, 0.5))


def test_has_feature_near() -> None:
    S = _two_peaks()
    assert not has_feature_near(OMEGA, S, center=0.0, radius=0.2)
    assert has_feature_near(OMEGA, S + lorentzian(OMEGA, 0.05, 0.0, 0.05), center=0.0, radius=0.2)


def test_sideband_fraction_of_pure_lorentzians() -> None:
    S = _two_peaks()
    fraction = sideband_fraction(OMEGA, S, fit_peaks(OMEGA, S))
    # Only the tails beyond the grid are missing from the integral.
    assert abs(fraction) < 0.02


def test_sideband_fraction_counts_broad_background() -> None:
    S = _two_peaks() + lorentzian(OMEGA, 0.05, 6.0, 4.0)
    fraction = sideband_fraction(OMEGA, S, fit_peaks(OMEGA, S))
    assert fraction > 0.1


def test_sideband_fraction_rejects_empty_spectrum() -> None:
    peaks = fit_peaks(OMEGA, _two_peaks())
    with pytest.raises(ValueError, match="positive integrated weight"):
        sideband_fraction(OMEGA, np.zeros_like(OMEGA), peaks)
