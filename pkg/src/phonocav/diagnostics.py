"""
Quantitative comparisons and validity diagnostics.

relative_error / series_error: scaled L2 distances between spectra or
population traces. perturbation_strength and bogoliubov_bound: per-method
validity estimates. extract_peaks / shift_and_renormalization: polariton
peak positions, total phonon shift and coupling renormalization.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Optional, Union

import numpy as np
from scipy import integrate, linalg, special

from .bath import HBAR_OVER_KB, BathParams
from .detect import PeakPair, fit_peaks
from .errors import DegeneratePeaksError, ImaginaryRenormalizationError, PhonocavError
from .master_eq import MasterEquationSpec, build, build_liouvillian
from .settings import DEFAULT_NUMERICS, Numerics
from .system import (
    STABILITY_TOL_DEFAULT,
    Liouvillian,
    SystemParams,
    cavity,
    coherence_indices,
    initial_density,
    sigma,
    single_excitation_block,
    vec,
)

logger = logging.getLogger(__name__)

SPECTRAL_WINDOW = 62.8  # rad/ps, half width of the comparison window
REFERENCE_METHOD = "polariton-polaron"

# Coupling weights g_ij of the perturbation-strength estimate, as powers of g.
_CHANNEL_G_POWER = {"XX": 2, "YY": 2, "YZ": 1, "ZY": 1, "ZZ": 0}
_PM_WEIGHT = 0.25
_DEGENERATE_TOL = 1e-6


# ─── error metrics ───


def relative_error(S_ref, S, window: float = SPECTRAL_WINDOW) -> float:
    """
    (int |S_ref - S|^2 / int |S_ref|^2)^(1/2) over |omega| <= window on the
    reference grid; S is linearly interpolated onto it (zero outside its range).
    """
    mask = np.abs(S_ref.omega) <= window
    x = np.asarray(S_ref.omega)[mask]
    ref = np.asarray(S_ref.S)[mask]
    other = np.interp(x, S.omega, S.S, left=0.0, right=0.0)
    denom = float(integrate.trapezoid(ref**2, x))
    if not denom > 0:
        raise ValueError("Reference spectrum vanishes on the comparison window.")
    return math.sqrt(float(integrate.trapezoid((ref - other) ** 2, x)) / denom)


def series_error(t_ref: np.ndarray, P_ref: np.ndarray, t: np.ndarray, P: np.ndarray) -> float:
    """Relative L2 distance of two time series over their common window, on the reference grid."""
    t_ref = np.asarray(t_ref, dtype=float)
    t = np.asarray(t, dtype=float)
    lo, hi = max(t_ref[0], t[0]), min(t_ref[-1], t[-1])
    mask = (t_ref >= lo) & (t_ref <= hi)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"Time series share no common window ([{t_ref[0]}, {t_ref[-1]}] vs [{t[0]}, {t[-1]}]).")
    x = t_ref[mask]
    ref = np.asarray(P_ref, dtype=float)[mask]
    other = np.interp(x, t, np.asarray(P, dtype=float))
    denom = float(integrate.trapezoid(ref**2, x))
    if not denom > 0:
        raise ValueError("Reference series vanishes on the common window.")
    return math.sqrt(float(integrate.trapezoid((ref - other) ** 2, x)) / denom)


population_error = series_error


# ─── validity estimates ───


def _resolve(
    method: Union[str, MasterEquationSpec],
    s: Optional[SystemParams],
    p: Optional[BathParams],
    numerics: Numerics,
) -> MasterEquationSpec:
    if isinstance(method, MasterEquationSpec):
        return method
    if s is None or p is None:
        raise ValueError("System and bath parameters are required when a method name is given.")
    return build(method, s, p, numerics)


def perturbation_strength(
    method: Union[str, MasterEquationSpec],
    s: Optional[SystemParams] = None,
    p: Optional[BathParams] = None,
    numerics: Numerics = DEFAULT_NUMERICS,
) -> float:
    """
    PS = sum g_ij^2 |C_ij(0)|^2 / (nu_c^2 sum g_ij |C_ij(0)|) over the
    channels the method keeps; 0 when every kernel vanishes.
    """
    spec = _resolve(method, s, p, numerics)
    g = spec.system.g
    num = den = 0.0
    for channel in spec.channels:
        for _, key in channel.pairs:
            c0 = abs(complex(spec.table.channel(key)[0]))
            weight = _PM_WEIGHT if channel.label == "PM" else g ** _CHANNEL_G_POWER[key]
            num += weight**2 * c0**2
            den += weight * c0
    if den == 0:
        return 0.0
    return num / (spec.bath.nu_c**2 * den)


def bogoliubov_bound(
    method: Union[str, MasterEquationSpec],
    s: Optional[SystemParams] = None,
    p: Optional[BathParams] = None,
    numerics: Numerics = DEFAULT_NUMERICS,
) -> float:
    """
    -kT ln Tr exp(-H/kT) over the single-excitation block of the frame
    Hamiltonian (rad/ps); the lowest eigenvalue at T = 0. The free-bath term
    is common to all frames and left out.
    """
    spec = _resolve(method, s, p, numerics)
    energies = linalg.eigvalsh(single_excitation_block(spec.frame_hamiltonian))
    T = spec.bath.temperature
    if T == 0:
        return float(energies.min())
    kT = T / HBAR_OVER_KB  # rad/ps
    return float(-kT * special.logsumexp(-energies / kT))


def relative_bounds(bounds: dict[str, float], reference: str = REFERENCE_METHOD) -> dict[str, float]:
    """Subtract the reference method's bound; unchanged when the reference is absent or NaN."""
    ref = bounds.get(reference)
    if ref is None or not math.isfinite(ref):
        return dict(bounds)
    return {k: v - ref for k, v in bounds.items()}


# ─── peaks ───


def peaks_from_liouvillian(L: Liouvillian, rho0: Optional[np.ndarray] = None) -> PeakPair:
    """
    Polariton frequencies (Im lambda) and half widths (-Re lambda) from the
    one-excitation coherence block of L, weighted by the overlap of
    vec(sigma rho0) + vec(a rho0) with each eigenmode.
    """
    rho0 = np.diag([0.0, 1.0, 0.0]).astype(complex) if rho0 is None else np.asarray(rho0, dtype=complex)
    idx = list(coherence_indices(L.dim))
    block = L.matrix[np.ix_(idx, idx)]
    values, right = linalg.eig(block)
    source = (vec(sigma() @ rho0) + vec(cavity() @ rho0))[idx]
    try:
        coeff = linalg.solve(right, source)
    except linalg.LinAlgError as e:
        raise DegeneratePeaksError(f"Coherence block is defective (exceptional point): {e}") from e
    weights = np.abs(coeff) * np.linalg.norm(right, axis=0)
    order = np.argsort(values.imag)
    lo, hi = order[0], order[-1]
    scale = max(1.0, float(np.max(np.abs(values))))
    if values.imag[hi] - values.imag[lo] <= _DEGENERATE_TOL * scale:
        raise DegeneratePeaksError(
            f"Coherence eigenvalues share the frequency {values.imag[hi]:.6f} rad/ps (overdamped or Purcell regime)."
        )
    if min(weights[lo], weights[hi]) <= _DEGENERATE_TOL * max(weights.max(), 1.0):
        raise DegeneratePeaksError("One polariton mode carries no weight from the initial state.")
    return PeakPair(
        S_plus=float(values.imag[hi]),
        S_minus=float(values.imag[lo]),
        width_plus=float(-values.real[hi]),
        width_minus=float(-values.real[lo]),
        weight_plus=float(weights[hi]),
        weight_minus=float(weights[lo]),
        source="liouvillian",
    )


def extract_peaks(source, rho0: Optional[np.ndarray] = None) -> PeakPair:
    """PeakPair from a Liouvillian (eigenvalues) or from a sampled Spectrum (Lorentzian fits)."""
    if isinstance(source, Liouvillian):
        return peaks_from_liouvillian(source, rho0)
    return fit_peaks(source.omega, source.S)


def shift_and_renormalization(peaks: PeakPair, g: float) -> tuple[float, float]:
    """Total shift S_+ + S_- and delta_eta = sqrt((S_+ - S_-)^2 - (S_+ + S_-)^2) / (2 g)."""
    if not g > 0:
        raise ValueError(f"Coupling renormalization needs g > 0, got {g}.")
    total = peaks.S_plus + peaks.S_minus
    radicand = peaks.splitting**2 - total**2
    if radicand < 0:
        raise ImaginaryRenormalizationError(
            f"(S+ - S-)^2 < (S+ + S-)^2 for S+={peaks.S_plus:.6f}, S-={peaks.S_minus:.6f}; peaks mis-identified?"
        )
    return total, math.sqrt(radicand) / (2.0 * g)


# ─── per-point record ───


def point_diagnostics(
    spec: MasterEquationSpec,
    L: Optional[Liouvillian] = None,
    stability_tol: float = STABILITY_TOL_DEFAULT,
) -> dict[str, Any]:
    """
    Every scalar diagnostic for one method at one point. Peak extraction
    failures are recorded as NaN with the reason under "peaks_error".
    """
    L = build_liouvillian(spec) if L is None else L
    max_real = L.check_stability(stability_tol)
    record: dict[str, Any] = {
        "method": spec.method,
        "perturbation_strength": perturbation_strength(spec),
        "bogoliubov_bound": bogoliubov_bound(spec),
        "naive_shift": float(spec.shift),
        "B": float(spec.profile.B) if spec.profile is not None else 1.0,
        "gamma": float(spec.gamma),
        "max_real_eigenvalue": max_real,
        "stability_flag": bool(max_real > stability_tol),
    }
    nan = float("nan")
    try:
        peaks = peaks_from_liouvillian(L, initial_density(spec.system))
        record.update(S_plus=peaks.S_plus, S_minus=peaks.S_minus, width_plus=peaks.width_plus, width_minus=peaks.width_minus)
        record["shift"], record["delta_eta"] = shift_and_renormalization(peaks, spec.system.g)
    except (PhonocavError, ValueError) as e:
        logger.debug("%s: peak extraction skipped (%s)", spec.method, e)
        for key in ("S_plus", "S_minus", "width_plus", "width_minus", "shift", "delta_eta"):
            record.setdefault(key, nan)
        record["peaks_error"] = str(e)
    return record
