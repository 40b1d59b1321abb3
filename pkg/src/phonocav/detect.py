"""
Peak detection on sampled spectra: local maxima, Lorentzian fits around the
two strongest ones, and feature/sideband checks used by the diagnostics.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, signal

from .errors import DegeneratePeaksError

logger = logging.getLogger(__name__)

FIT_HALF_WIDTHS = 3.0
_MIN_PROMINENCE = 1e-3  # relative to the spectrum maximum
_FEATURE_PROMINENCE = 1e-6
_MIN_FIT_POINTS = 5


class PeakPair(NamedTuple):
    """Upper (+) and lower (-) polariton peaks; widths are half widths, weights Lorentzian areas or overlaps."""

    S_plus: float
    S_minus: float
    width_plus: float
    width_minus: float
    weight_plus: float
    weight_minus: float
    source: str = "spectrum"

    @property
    def splitting(self) -> float:
        return self.S_plus - self.S_minus


class LorentzianFit(NamedTuple):
    height: float
    center: float
    width: float

    @property
    def area(self) -> float:
        return math.pi * self.height * self.width


def lorentzian(omega, height: float, center: float, width: float):
    return height * width**2 / ((np.asarray(omega) - center) ** 2 + width**2)


def local_maxima(omega: np.ndarray, S: np.ndarray, rel_prominence: float = _MIN_PROMINENCE) -> np.ndarray:
    """Indices of local maxima with prominence above rel_prominence * max(S), strongest first."""
    S = np.asarray(S, dtype=float)
    top = float(np.max(S)) if S.size else 0.0
    if top <= 0:
        return np.zeros(0, dtype=int)
    idx, _ = signal.find_peaks(S, prominence=rel_prominence * top)
    return idx[np.argsort(-S[idx], kind="stable")]


def _initial_width(omega: np.ndarray, S: np.ndarray, i: int) -> float:
    """Half width from the curvature at the maximum: S'' = -2 S / w^2 for a Lorentzian."""
    step = float(omega[1] - omega[0])
    if 0 < i < S.size - 1:
        curvature = (S[i - 1] - 2.0 * S[i] + S[i + 1]) / step**2
        if curvature < 0:
            return math.sqrt(-2.0 * S[i] / curvature)
    return 2.0 * step


def fit_lorentzian(omega: np.ndarray, S: np.ndarray, index: int) -> LorentzianFit:
    """Least-squares Lorentzian on +-3 half widths around the maximum at `index`."""
    omega = np.asarray(omega, dtype=float)
    S = np.asarray(S, dtype=float)
    width = _initial_width(omega, S, index)
    center = float(omega[index])
    window = np.abs(omega - center) <= FIT_HALF_WIDTHS * width
    if np.count_nonzero(window) < _MIN_FIT_POINTS:
        window = np.abs(np.arange(omega.size) - index) <= _MIN_FIT_POINTS // 2 + 1
    p0 = (float(S[index]), center, width)
    try:
        popt, _ = optimize.curve_fit(
            lorentzian,
            omega[window],
            S[window],
            p0=p0,
            bounds=([0.0, omega[window][0], 0.0], [np.inf, omega[window][-1], np.inf]),
            maxfev=5000,
        )
    except (RuntimeError, ValueError) as e:
        logger.debug("Lorentzian fit at omega=%.4f failed (%s); using curvature estimate", center, e)
        popt = p0
    return LorentzianFit(height=float(popt[0]), center=float(popt[1]), width=float(popt[2]))


def fit_peaks(omega: np.ndarray, S: np.ndarray) -> PeakPair:
    """Fit the two strongest local maxima; DegeneratePeaksError when fewer than two exist."""
    idx = local_maxima(omega, S)
    if idx.size < 2:
        raise DegeneratePeaksError(
            f"Found {idx.size} resolvable peak(s); need two (weak-coupling or Purcell regime)."
        )
    fits = sorted((fit_lorentzian(omega, S, i) for i in idx[:2]), key=lambda f: f.center)
    lower, upper = fits
    if not upper.center > lower.center:
        raise DegeneratePeaksError(f"Fitted peaks coincide at omega={upper.center:.4f} rad/ps.")
    return PeakPair(
        S_plus=upper.center,
        S_minus=lower.center,
        width_plus=upper.width,
        width_minus=lower.width,
        weight_plus=upper.area,
        weight_minus=lower.area,
        source="spectrum",
    )


def has_feature_near(
    omega: np.ndarray, S: np.ndarray, center: float = 0.0, radius: float = 0.2
) -> bool:
    """True when a local maximum lies within |omega - center| < radius."""
    idx = local_maxima(omega, S, rel_prominence=_FEATURE_PROMINENCE)
    return bool(np.any(np.abs(np.asarray(omega)[idx] - center) < radius))


def sideband_fraction(omega: np.ndarray, S: np.ndarray, peaks: PeakPair) -> float:
    """
    1 - (area of the two fitted Lorentzians) / (trapezoid integral of S).

    The fits only see +-3 half widths around each maximum, but their areas
    are the full Lorentzian integrals, so pure Lorentzian lines give ~0.
    """
    total = float(integrate.trapezoid(np.asarray(S, dtype=float), np.asarray(omega, dtype=float)))
    if not total > 0:
        raise ValueError("Spectrum has no positive integrated weight.")
    return 1.0 - (peaks.weight_plus + peaks.weight_minus) / total
