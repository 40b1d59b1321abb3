"""
Phonon correlation tables C_ij(tau) on a uniform tau grid and their one-sided
Fourier transforms at system Bohr frequencies.

Channels: XX, YY (displacement-operator correlations through phi), ZZ (the
undisplaced remainder, weight (1 - F)^2) and the YZ / ZY cross terms
(weight F (1 - F) / nu). F = 0 leaves ZZ alone and it equals the weak-coupling
correlation to the last bit; F = 1 leaves XX and YY.
"""

from __future__ import annotations

import logging
import math
from typing import Mapping, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .bath import (
    BathParams,
    QuadratureGrid,
    VariationalProfile,
    fixed_profile,
    kernel_grid,
    oscillatory_sums,
    quadrature_grid,
    spectral_density,
    thermal_coth,
)
from .errors import ConvergenceError, MissingChannelError, TruncationError
from .settings import QuadratureSettings, TauSettings

logger = logging.getLogger(__name__)

CHANNEL_KEYS = ("XX", "YY", "ZZ", "YZ", "ZY")

# Kernel oscillations reach a few nu_c even when the system is slow.
_NU_C_FREQUENCY_FACTOR = 4.0
_TAIL_POINTS = 16


class TauGrid(NamedTuple):
    """Uniform grid tau_j = j dt, j = 0 .. n - 1."""

    dt: float
    n: int

    @property
    def tau(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @property
    def tau_max(self) -> float:
        return (self.n - 1) * self.dt


class CorrelationTable(NamedTuple):
    tau: np.ndarray
    C: Mapping[str, np.ndarray]
    dt: float
    tau_max: float
    decay_tol: float

    def channel(self, key: str) -> np.ndarray:
        try:
            return self.C[key]
        except KeyError:
            raise MissingChannelError(
                f"Correlation channel {key!r} not in table (have {', '.join(sorted(self.C)) or 'none'})."
            ) from None

    def is_zero(self, key: str) -> bool:
        return not np.any(self.channel(key))

    def tail_ratio(self, key: str) -> float:
        """max |C| over the last few grid points relative to |C(0)| (or max |C| when C(0) = 0)."""
        values = self.channel(key)
        ref = abs(values[0]) or float(np.max(np.abs(values)))
        if ref == 0:
            return 0.0
        return float(np.max(np.abs(values[-_TAIL_POINTS:]))) / ref


def _channel_values(
    profile: VariationalProfile,
    p: BathParams,
    tau: np.ndarray,
    grid: QuadratureGrid,
    keys: tuple[str, ...] = CHANNEL_KEYS,
) -> dict[str, np.ndarray]:
    nu = grid.nodes
    F = profile.evaluate(nu)
    w = grid.weights * spectral_density(nu, p)
    coth = thermal_coth(nu, p.temperature)
    B = profile.B
    zeros = np.zeros(tau.shape, dtype=complex)
    out: dict[str, np.ndarray] = {}

    if "XX" in keys or "YY" in keys:
        w_phi = w * F**2 / nu**2
        if np.any(w_phi):
            c, s = oscillatory_sums(tau, nu, w_phi * coth, w_phi)
            phi = c - 1j * s
            if "XX" in keys:
                out["XX"] = B**2 * 2.0 * np.sinh(0.5 * phi) ** 2
            if "YY" in keys:
                out["YY"] = B**2 * np.sinh(phi)
        else:
            out.update({k: zeros.copy() for k in ("XX", "YY") if k in keys})

    if "ZZ" in keys:
        w_zz = w * (1.0 - F) ** 2
        if np.any(w_zz):
            c, s = oscillatory_sums(tau, nu, w_zz * coth, w_zz)
            out["ZZ"] = c - 1j * s
        else:
            out["ZZ"] = zeros.copy()

    if "YZ" in keys or "ZY" in keys:
        w_yz = w * F * (1.0 - F) / nu
        if np.any(w_yz):
            c, s = oscillatory_sums(tau, nu, w_yz, w_yz * coth)
            yz = -B * (1j * c + s)
        else:
            yz = zeros.copy()
        if "YZ" in keys:
            out["YZ"] = yz
        if "ZY" in keys:
            out["ZY"] = -yz
    return out


def correlations_at_zero(
    profile: VariationalProfile,
    p: BathParams,
    quadrature: QuadratureSettings = QuadratureSettings(),
    keys: tuple[str, ...] = CHANNEL_KEYS,
) -> dict[str, complex]:
    """C_ij(0) for every channel on the base quadrature grid."""
    values = _channel_values(profile, p, np.zeros(1), quadrature_grid(p, quadrature), keys)
    return {k: complex(v[0]) for k, v in values.items()}


def choose_dt(omega_max: float, p: BathParams, settings: TauSettings = TauSettings()) -> float:
    """dt such that max(omega_max, 4 nu_c) * dt equals the configured phase step."""
    return settings.phase_step / max(abs(omega_max), _NU_C_FREQUENCY_FACTOR * p.nu_c)


def choose_tau_grid(
    profile: VariationalProfile,
    p: BathParams,
    omega_max: float,
    settings: TauSettings = TauSettings(),
    quadrature: QuadratureSettings = QuadratureSettings(),
    keys: tuple[str, ...] = CHANNEL_KEYS,
) -> TauGrid:
    """
    Uniform grid that resolves omega_max and on which every non-zero channel
    has decayed below decay_tol * |C(0)|. tau_max starts at
    tau_max_initial_factor / nu_c and doubles; TruncationError past tau_max_limit.
    """
    dt = choose_dt(omega_max, p, settings)
    at_zero = correlations_at_zero(profile, p, quadrature, keys)
    active = {k: abs(v) for k, v in at_zero.items() if v != 0}
    if not active:
        n = int(math.ceil(settings.tau_max_initial_factor / p.nu_c / dt)) + 1
        return TauGrid(dt=dt, n=n)

    tau_max = settings.tau_max_initial_factor / p.nu_c
    worst = math.inf
    while tau_max <= settings.tau_max_limit:
        tail_times = np.linspace(0.9 * tau_max, tau_max, _TAIL_POINTS)
        tail = _channel_values(profile, p, tail_times, kernel_grid(p, quadrature, tau_max), tuple(active))
        ratios = {k: float(np.max(np.abs(tail[k]))) / active[k] for k in active}
        worst = max(ratios.values())
        logger.debug("tau_max=%.2f ps: worst tail ratio %.2e (%s)", tau_max, worst, max(ratios, key=ratios.get))
        if worst < settings.decay_tol:
            n = int(math.ceil(tau_max / dt)) + 1
            logger.debug("tau grid: dt=%.4g ps, tau_max=%.2f ps, %d points", dt, (n - 1) * dt, n)
            return TauGrid(dt=dt, n=n)
        tau_max *= 2.0
    raise TruncationError(
        f"Correlation kernels have not decayed below {settings.decay_tol:.1e} of their initial value "
        f"by tau_max_limit={settings.tau_max_limit} ps (tail ratio {worst:.2e} at T={p.temperature} K). "
        "Raise tau.tau_max_limit or relax tau.decay_tol."
    )


def correlation_table(
    profile: VariationalProfile,
    p: BathParams,
    tau_grid: Optional[TauGrid] = None,
    settings: TauSettings = TauSettings(),
    quadrature: QuadratureSettings = QuadratureSettings(),
    keys: tuple[str, ...] = CHANNEL_KEYS,
    omega_max: float = 0.0,
) -> CorrelationTable:
    """
    Fill C_XX, C_YY, C_ZZ, C_YZ, C_ZY (or the requested subset) on tau_grid.
    Picks the grid with choose_tau_grid when none is given.
    """
    unknown = set(keys) - set(CHANNEL_KEYS)
    if unknown:
        raise MissingChannelError(f"Unknown correlation channels: {', '.join(sorted(unknown))}.")
    if tau_grid is None:
        tau_grid = choose_tau_grid(profile, p, omega_max, settings, quadrature, keys)
    tau = tau_grid.tau
    grid = kernel_grid(p, quadrature, tau_grid.tau_max)
    C = _channel_values(profile, p, tau, grid, keys)
    _check_nodes(profile, p, tau_grid, grid, keys, quadrature)
    for arr in C.values():
        arr.flags.writeable = False
    return CorrelationTable(tau=tau, C=C, dt=tau_grid.dt, tau_max=tau_grid.tau_max, decay_tol=settings.decay_tol)


def weak_table(
    p: BathParams,
    tau_grid: Optional[TauGrid] = None,
    settings: TauSettings = TauSettings(),
    quadrature: QuadratureSettings = QuadratureSettings(),
    omega_max: float = 0.0,
) -> CorrelationTable:
    """Weak-coupling table: only C_ZZ, identical to the F = 0 variational table."""
    return correlation_table(
        fixed_profile(0.0, p, settings=quadrature), p, tau_grid, settings, quadrature, keys=("ZZ",), omega_max=omega_max
    )


def _check_nodes(
    profile: VariationalProfile,
    p: BathParams,
    tau_grid: TauGrid,
    grid: QuadratureGrid,
    keys: tuple[str, ...],
    quadrature: QuadratureSettings,
) -> None:
    sample_times = np.unique([0.0, 0.5 * tau_grid.tau_max, tau_grid.tau_max])
    fine = quadrature_grid(p, quadrature, nodes=2 * grid.nodes.size)
    coarse = _channel_values(profile, p, sample_times, grid, keys)
    refined = _channel_values(profile, p, sample_times, fine, keys)
    for k in keys:
        scale = float(np.max(np.abs(refined[k])))
        change = float(np.max(np.abs(refined[k] - coarse[k])))
        if scale > 0 and change > quadrature.rel_tol * scale:
            raise ConvergenceError(
                f"C_{k}: quadrature change {change / scale:.2e} on node doubling exceeds {quadrature.rel_tol:.1e}.",
                residual=change / scale,
            )


def half_fourier(table: CorrelationTable, omega, key: str = "ZZ"):
    """
    int_0^tau_max C_key(tau) exp(-i omega tau) dtau by the trapezoid rule.

    Raises TruncationError when the channel has not decayed at tau_max.
    """
    values = table.channel(key)
    ratio = table.tail_ratio(key)
    if ratio > table.decay_tol:
        raise TruncationError(
            f"C_{key} tail ratio {ratio:.2e} at tau_max={table.tau_max:.2f} ps exceeds {table.decay_tol:.1e}."
        )
    omega = np.asarray(omega, dtype=float)
    if not np.any(values):
        out = np.zeros(omega.shape, dtype=complex)
    else:
        phase = np.exp(-1j * np.multiply.outer(omega, table.tau))
        out = integrate.trapezoid(phase * values, dx=table.dt, axis=-1)
    return complex(out) if out.ndim == 0 else out
