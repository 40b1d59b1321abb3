"""
Time evolution, quantum-regression correlators and emission spectra.

Convention: G(t, tau) = Tr{O^+ e^{L tau} O e^{L t} rho(0)} oscillates as
e^{+i E tau} for a Liouvillian coherence at frequency E, and

    S(omega) = prefactor(omega) * 2 Re int_0^tau_max Gbar(tau) s(tau) e^{-i omega tau} dtau,

with Gbar the t-integrated correlator and s(tau) the frame sideband factor.
Spectra live on a grid symmetric about the rotating-frame origin omega_bar.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping, NamedTuple, Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg

from . import __version__
from .errors import ConfigError
from .master_eq import MasterEquationSpec, Sideband, build_liouvillian
from .settings import SpectrumSettings
from .system import (
    Liouvillian,
    cavity,
    exciton_number,
    initial_density,
    sigma,
    unvec,
    vec,
)

logger = logging.getLogger(__name__)

# Largest |Im eig(L)| * dt accepted by a TimeGrid.
MAX_PHASE_PER_STEP = 0.25
_STATIONARY_TOL = 1e-10
_TAIL_POINTS = 8
_TRACE_TOL = 1e-9
# Largest tolerated -min(S) / max(S); FFT windowing leaks slightly below zero.
NEGATIVITY_TOL = 1e-6
# auto_t_max follows the slowest mode down to decay_tol / _TAIL_MARGIN.
_TAIL_MARGIN = 10.0


class TimeGrid(NamedTuple):
    """Uniform t_j = j dt on [0, t_max] with n_t points."""

    t_max: float
    n_t: int

    @property
    def dt(self) -> float:
        return self.t_max / (self.n_t - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_t)

    @classmethod
    def from_step(cls, t_max: float, dt: float) -> "TimeGrid":
        if not (t_max > 0 and dt > 0):
            raise ConfigError(f"Time grid needs t_max > 0 and dt > 0, got t_max={t_max}, dt={dt}.")
        return cls(t_max=t_max, n_t=int(math.ceil(t_max / dt)) + 1)

    def validate(self, L: Liouvillian) -> "TimeGrid":
        if self.n_t < 2:
            raise ConfigError(f"Time grid needs at least 2 points, got {self.n_t}.")
        fastest = float(np.max(np.abs(L.eig.values.imag)))
        if fastest * self.dt >= MAX_PHASE_PER_STEP:
            raise ConfigError(
                f"Time step {self.dt:.4g} ps under-resolves the fastest Liouvillian frequency "
                f"{fastest:.4g} rad/ps; use dt < {MAX_PHASE_PER_STEP / fastest:.4g} ps."
            )
        return self


class Trajectory(NamedTuple):
    t: np.ndarray
    rho: np.ndarray  # (n_t, dim, dim)


class Spectrum(NamedTuple):
    omega: np.ndarray  # detuning from omega_bar, rad/ps
    S: np.ndarray
    method: str
    frame: str
    route: str
    metadata: Mapping[str, Any] = {}


# ─── propagation ───


def _propagate(L: Liouvillian, row: np.ndarray, columns: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    row^T e^{L t_j} columns[:, i] for all i, j on a uniform grid `times`;
    returns shape (n_columns, n_times). Falls back to Schur stepping when the
    eigenvector matrix is ill conditioned.
    """
    columns = np.asarray(columns, dtype=complex).reshape(L.matrix.shape[0], -1)
    times = np.asarray(times, dtype=float)
    if L.well_conditioned:
        e = L.eig
        a = row @ e.right
        b = e.left @ columns
        return (b.T * a) @ np.exp(np.multiply.outer(e.values, times))

    logger.debug("Liouvillian (%s) ill conditioned (cond %.2e); stepping in Schur form", L.frame, L.eig.cond)
    T, Z = L.schur
    dt = times[1] - times[0] if times.size > 1 else 0.0
    step = linalg.expm(T * dt)
    w = Z.conj().T @ columns
    r = row @ Z
    if times[0] != 0:
        w = linalg.expm(T * times[0]) @ w
    out = np.empty((columns.shape[1], times.size), dtype=complex)
    for j in range(times.size):
        out[:, j] = r @ w
        w = step @ w
    return out


def time_integral(L: Liouvillian, rho0: np.ndarray, t_max: float) -> np.ndarray:
    """X = int_0^t_max e^{L t} rho0 dt, from the block exponential expm([[L, v0], [0, 0]] t_max)."""
    n = L.matrix.shape[0]
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = L.matrix
    M[:n, n] = vec(rho0)
    X = linalg.expm(M * t_max)[:n, n]
    return unvec(X, L.dim)


def slowest_decay_rate(L: Liouvillian) -> float:
    """Smallest positive -Re(lambda) over non-stationary eigenvalues; 0 if nothing decays."""
    values = L.eig.values
    rates = -values.real[(np.abs(values) > _STATIONARY_TOL) & (values.real < -_STATIONARY_TOL)]
    return float(rates.min()) if rates.size else 0.0


def auto_t_max(L: Liouvillian, settings: SpectrumSettings = SpectrumSettings()) -> float:
    """ln(10 / decay_tol) / slowest decay rate, capped at t_max_limit."""
    if settings.t_max is not None:
        return float(settings.t_max)
    rate = slowest_decay_rate(L)
    if rate == 0.0:
        logger.warning("No decaying Liouvillian mode (%s); using t_max_limit=%.1f ps", L.frame, settings.t_max_limit)
        return float(settings.t_max_limit)
    return float(min(math.log(_TAIL_MARGIN / settings.decay_tol) / rate, settings.t_max_limit))


def evolve(L: Liouvillian, rho0: np.ndarray, grid: TimeGrid) -> Trajectory:
    """rho(t_j) = e^{L t_j} rho(0)."""
    t = grid.t
    n = L.matrix.shape[0]
    e_rows = np.eye(n, dtype=complex)
    if L.well_conditioned:
        e = L.eig
        coeff = e.left @ vec(rho0)
        vecs = (e.right * coeff) @ np.exp(np.multiply.outer(e.values, t))
    else:
        vecs = np.stack([_propagate(L, e_rows[k], vec(rho0), t)[0] for k in range(n)])
    rho = np.stack([unvec(vecs[:, j], L.dim) for j in range(t.size)])
    traces = np.real(np.trace(rho, axis1=1, axis2=2))
    drift = float(np.max(np.abs(traces - np.real(np.trace(rho0)))))
    if drift > _TRACE_TOL:
        logger.warning("Trace drift %.2e during evolution (%s)", drift, L.frame)
    return Trajectory(t=t, rho=rho)


def two_time(
    L: Liouvillian,
    O_left: np.ndarray,
    O_right: np.ndarray,
    rho0: np.ndarray,
    grid_t: TimeGrid,
    grid_tau: TimeGrid,
) -> np.ndarray:
    """G[i, j] = Tr{O_left e^{L tau_j} O_right rho(t_i)}; pass O_left = O^+ for <O^+(t+tau) O(t)>."""
    grid_t.validate(L)
    grid_tau.validate(L)
    traj = evolve(L, rho0, grid_t)
    columns = np.stack([vec(O_right @ r) for r in traj.rho], axis=1)
    row = vec(np.asarray(O_left).T)
    return _propagate(L, row, columns, grid_tau.t)


def integrated_correlation(
    L: Liouvillian, O: np.ndarray, rho0: np.ndarray, tau: np.ndarray, t_max: float
) -> np.ndarray:
    """Gbar(tau) = int_0^t_max <O^+(t + tau) O(t)> dt."""
    X = time_integral(L, rho0, t_max)
    row = vec(np.asarray(O).conj())
    return _propagate(L, row, vec(O @ X)[:, None], tau)[0]


def trapezoid_integrated_correlation(G: np.ndarray, grid_t: TimeGrid) -> np.ndarray:
    """Trapezoid over t of a two_time matrix; cross-check for integrated_correlation."""
    w = np.full(grid_t.n_t, grid_t.dt)
    w[0] = w[-1] = 0.5 * grid_t.dt
    return w @ G


# ─── spectra ───


def correlation_spectrum(y: np.ndarray, dtau: float, omega_resolution: float) -> tuple[np.ndarray, np.ndarray]:
    """
    2 Re int_0 y(tau) e^{-i omega tau} by zero-padded FFT with the trapezoid
    end weight on tau = 0. Returns (omega, S) on a grid symmetric about 0.
    """
    y = np.asarray(y, dtype=complex)
    n = y.size
    size = 1 << int(math.ceil(math.log2(max(n, 2.0 * math.pi / (dtau * omega_resolution), 2))))
    buf = np.zeros(size, dtype=complex)
    buf[:n] = y
    buf[0] *= 0.5
    S = 2.0 * dtau * np.fft.fft(buf).real
    omega = 2.0 * np.pi * np.fft.fftfreq(size, d=dtau)
    return np.fft.fftshift(omega)[1:], np.fft.fftshift(S)[1:]


def tail_ratio(y: np.ndarray) -> float:
    ref = abs(y[0]) or float(np.max(np.abs(y)))
    return float(np.max(np.abs(y[-_TAIL_POINTS:]))) / ref if ref else 0.0


def _spectrum(
    spec: MasterEquationSpec,
    L: Liouvillian,
    O: np.ndarray,
    sideband: Sideband,
    route: str,
    settings: SpectrumSettings,
) -> Spectrum:
    rho0 = initial_density(spec.system)
    t_max = auto_t_max(L, settings)
    n_tau = int(math.ceil(t_max / settings.dtau)) + 1
    tau = np.arange(n_tau) * settings.dtau
    G = integrated_correlation(L, O, rho0, tau, t_max)
    y = G if sideband.is_unity else G * sideband(tau)
    ratio = tail_ratio(y)
    windowed = ratio > settings.decay_tol
    if windowed:
        logger.warning(
            "%s %s correlator not decayed at tau_max=%.1f ps (tail ratio %.2e); applying Hann half-window",
            spec.method, route, tau[-1], ratio,
        )
        y = y * np.cos(0.5 * np.pi * tau / tau[-1]) ** 2
    omega, S = correlation_spectrum(y, settings.dtau, settings.omega_resolution)
    metadata = {
        "method": spec.method,
        "frame": spec.frame,
        "route": route,
        "system": spec.system._asdict(),
        "bath": spec.bath._asdict(),
        "grid": {"dtau": settings.dtau, "tau_max": float(tau[-1]), "t_max": t_max, "n_omega": int(omega.size)},
        "tolerances": {"decay_tol": settings.decay_tol, "omega_resolution": settings.omega_resolution},
        "windowed": bool(windowed),
        "tau_zero_value": float(y[0].real),
        "code_version": __version__,
    }
    return Spectrum(omega=omega, S=S, method=spec.method, frame=spec.frame, route=route, metadata=metadata)


def negativity(S: np.ndarray) -> float:
    """-min(S) / max(S), clipped at 0; 0 for a spectrum with no positive weight."""
    S = np.asarray(S, dtype=float)
    top = float(S.max()) if S.size else 0.0
    if top <= 0:
        return 0.0
    return max(0.0, -float(S.min()) / top)


def _flag_negativity(spectrum: Spectrum) -> Spectrum:
    ratio = negativity(spectrum.S)
    if ratio > NEGATIVITY_TOL:
        logger.warning(
            "%s %s spectrum dips below zero (min/max = %.2e, tolerance %.0e)",
            spectrum.method, spectrum.route, -ratio, NEGATIVITY_TOL,
        )
    return spectrum._replace(metadata={**spectrum.metadata, "negativity": ratio})


def cavity_spectrum(
    spec: MasterEquationSpec,
    settings: SpectrumSettings = SpectrumSettings(),
    L: Optional[Liouvillian] = None,
) -> Spectrum:
    """kappa * 2 Re int Gbar_aa(tau) s_cavity(tau) e^{-i omega tau}."""
    L = build_liouvillian(spec) if L is None else L
    out = _spectrum(spec, L, cavity(), spec.cavity_sideband, "cavity", settings)
    return _flag_negativity(out._replace(S=spec.system.kappa * out.S))


def green_function(omega: np.ndarray, g: float, kappa: float, center: float = 0.0) -> np.ndarray:
    """Optical Green's function (4 g^2 / kappa) (kappa/2)^2 / ((omega - center)^2 + (kappa/2)^2)."""
    if kappa <= 0:
        raise ValueError(f"The dipole-route Green's function needs kappa > 0, got {kappa}.")
    half = 0.5 * kappa
    return (4.0 * g**2 / kappa) * half**2 / ((np.asarray(omega) - center) ** 2 + half**2)


def dipole_spectrum(
    spec: MasterEquationSpec,
    settings: SpectrumSettings = SpectrumSettings(),
    L: Optional[Liouvillian] = None,
    apply_green: bool = True,
) -> Spectrum:
    """
    2 Re int Gbar_sigma(tau) s_dipole(tau) e^{-i omega tau}, times the cavity
    Green's function centered on omega_c - omega_bar unless apply_green is False.
    """
    L = build_liouvillian(spec) if L is None else L
    out = _spectrum(spec, L, sigma(), spec.dipole_sideband, "dipole", settings)
    if not apply_green:
        return _flag_negativity(out)
    s = spec.system
    return _flag_negativity(out._replace(S=out.S * green_function(out.omega, s.g, s.kappa, s.omega_c - s.omega_bar)))


def exciton_population(
    spec: MasterEquationSpec,
    settings: SpectrumSettings = SpectrumSettings(),
    L: Optional[Liouvillian] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """P_X(t) = Tr{sigma^+ sigma rho(t)} on [0, population_t_max] with step population_dt."""
    L = build_liouvillian(spec) if L is None else L
    grid = TimeGrid.from_step(settings.population_t_max, settings.population_dt)
    traj = evolve(L, initial_density(spec.system), grid)
    P = np.real(np.einsum("ij,tji->t", exciton_number(), traj.rho))
    return traj.t, P


# ─── output ───


def write_spectrum(spectrum: Spectrum, path: Union[str, Path]) -> Path:
    """CSV (omega_rad_per_ps, intensity) plus a JSON metadata sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"omega_rad_per_ps": spectrum.omega, "intensity": spectrum.S}).to_csv(
        path, index=False, float_format="%.10e"
    )
    path.with_suffix(".json").write_text(json.dumps(dict(spectrum.metadata), indent=2, default=float) + "\n")
    return path


def write_series(path: Union[str, Path], columns: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(dict(columns)).to_csv(path, index=False, float_format="%.10e")
    return path


def read_spectrum(path: Union[str, Path]) -> Spectrum:
    """Load a spectrum CSV written by write_spectrum (sidecar optional)."""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise ValueError(f"Cannot read spectrum {path}: {e}") from e
    missing = {"omega_rad_per_ps", "intensity"} - set(frame.columns)
    if missing:
        raise ValueError(f"Spectrum {path} lacks columns: {', '.join(sorted(missing))}.")
    sidecar = path.with_suffix(".json")
    metadata = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return Spectrum(
        omega=frame["omega_rad_per_ps"].to_numpy(dtype=float),
        S=frame["intensity"].to_numpy(dtype=float),
        method=metadata.get("method", "unknown"),
        frame=metadata.get("frame", "unknown"),
        route=metadata.get("route", "unknown"),
        metadata=metadata,
    )
