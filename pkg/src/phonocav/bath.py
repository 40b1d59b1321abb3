"""
Phonon bath: super-ohmic spectral density with a Gaussian cutoff, thermal
factors, the Gauss-Legendre frequency grid, and the scalar bath integrals
shared by every master equation (polaron shift, <B>, R, phi, gamma(T)).

Units: hbar = 1, frequencies in rad/ps, times in ps, temperatures in K.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy import constants, integrate

from .errors import ConvergenceError
from .settings import DEPHASING_CONVENTIONS, QuadratureSettings

logger = logging.getLogger(__name__)

# hbar / k_B in ps*K: beta*hbar*nu = HBAR_OVER_KB * nu / T for nu in rad/ps.
HBAR_OVER_KB = constants.hbar / constants.k * 1e12

_KERNEL_CHUNK = 2048
_NODES_PER_PHASE = 0.6
_MIN_NU_MAX_FACTOR = 5.0


class BathParams(NamedTuple):
    """Spectral-density parameters and temperature. Defaults are the GaAs-like values used throughout."""

    alpha: float = 0.0251  # ps^2
    nu_c: float = 2.23  # rad/ps
    mu: float = 0.02284  # ps^4
    temperature: float = 4.0  # K

    def validate(self) -> "BathParams":
        if not self.alpha >= 0:
            raise ValueError(f"Bath coupling alpha must be >= 0, got {self.alpha}.")
        if not self.nu_c > 0:
            raise ValueError(f"Cutoff frequency nu_c must be > 0, got {self.nu_c}.")
        if not self.mu >= 0:
            raise ValueError(f"Dephasing constant mu must be >= 0, got {self.mu}.")
        if not self.temperature >= 0:
            raise ValueError(f"Temperature must be >= 0 K, got {self.temperature}.")
        return self


class QuadratureGrid(NamedTuple):
    """Gauss-Legendre nodes and weights on [0, nu_max]."""

    nodes: np.ndarray
    weights: np.ndarray
    nu_max: float

    def integrate(self, values: np.ndarray) -> Union[float, complex]:
        return self.weights @ values


@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def quadrature_grid(
    p: BathParams,
    settings: QuadratureSettings = QuadratureSettings(),
    nodes: Optional[int] = None,
) -> QuadratureGrid:
    """Gauss-Legendre grid on [0, nu_max_factor * nu_c] with `nodes` points (default from settings)."""
    if settings.nu_max_factor < _MIN_NU_MAX_FACTOR:
        raise ValueError(
            f"nu_max_factor={settings.nu_max_factor} truncates the spectral density; "
            f"use at least {_MIN_NU_MAX_FACTOR}."
        )
    n = settings.nodes if nodes is None else int(nodes)
    if n < 2:
        raise ValueError(f"Quadrature needs at least 2 nodes, got {n}.")
    nu_max = settings.nu_max_factor * p.nu_c
    x, w = _legendre(n)
    return QuadratureGrid(nodes=0.5 * nu_max * (x + 1.0), weights=0.5 * nu_max * w, nu_max=nu_max)


def kernel_grid(p: BathParams, settings: QuadratureSettings, tau_max: float) -> QuadratureGrid:
    """Grid with enough nodes to resolve cos(nu*tau) up to tau_max."""
    nu_max = settings.nu_max_factor * p.nu_c
    n = max(settings.nodes, int(math.ceil(_NODES_PER_PHASE * nu_max * tau_max)) + 64)
    return quadrature_grid(p, settings, nodes=n)


def spectral_density(nu, p: BathParams):
    """J(nu) = alpha nu^3 exp(-nu^2 / nu_c^2) in rad/ps."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise ValueError(f"Spectral density is defined for nu >= 0, got min nu={nu.min()}.")
    out = p.alpha * nu**3 * np.exp(-((nu / p.nu_c) ** 2))
    return float(out) if out.ndim == 0 else out


def _beta_nu(nu: np.ndarray, temperature: float) -> np.ndarray:
    if temperature < 0:
        raise ValueError(f"Temperature must be >= 0 K, got {temperature}.")
    if temperature == 0:
        return np.full(nu.shape, np.inf)
    return HBAR_OVER_KB * nu / temperature


def thermal_coth(nu, temperature: float):
    """coth(beta hbar nu / 2); identically 1 at T = 0."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise ValueError(f"coth(beta nu/2) needs nu > 0, got min nu={nu.min()}.")
    if temperature == 0:
        out = np.ones(nu.shape)
    else:
        out = 1.0 / np.tanh(0.5 * _beta_nu(nu, temperature))
    return float(out) if out.ndim == 0 else out


def thermal_occupation(nu, temperature: float):
    """Bose-Einstein occupation 1 / (exp(beta nu) - 1); zero at T = 0."""
    nu = np.asarray(nu, dtype=float)
    if temperature == 0:
        out = np.zeros(nu.shape)
    else:
        out = 1.0 / np.expm1(_beta_nu(nu, temperature))
    return float(out) if out.ndim == 0 else out


def _dephasing_thermal(nu: np.ndarray, temperature: float) -> np.ndarray:
    # n(n-1) with n = 1/(1 - exp(-x)) equals exp(-x) / (1 - exp(-x))^2
    x = _beta_nu(nu, temperature)
    with np.errstate(over="ignore", divide="ignore"):
        e = np.exp(-x)
        return e / np.expm1(-x) ** 2


def _dephasing_integrand(p: BathParams, convention: str) -> Callable[[np.ndarray], np.ndarray]:
    if convention not in DEPHASING_CONVENTIONS:
        raise ValueError(
            f"Unknown dephasing convention {convention!r}; expected one of {', '.join(DEPHASING_CONVENTIONS)}."
        )
    width = p.nu_c if convention == "as-printed" else p.nu_c**2

    def integrand(nu: np.ndarray) -> np.ndarray:
        return nu**10 * np.exp(-2.0 * nu**2 / width) * _dephasing_thermal(nu, p.temperature)

    return integrand


def integrate_bath(
    integrand: Callable[[np.ndarray], np.ndarray],
    p: BathParams,
    settings: QuadratureSettings = QuadratureSettings(),
    what: str = "bath integral",
):
    """
    Integrate over [0, nu_max] on the configured grid and on a grid with twice
    the nodes. Raises ConvergenceError when the two disagree by more than rel_tol.
    """
    coarse = quadrature_grid(p, settings)
    fine = quadrature_grid(p, settings, nodes=2 * settings.nodes)
    value = coarse.integrate(integrand(coarse.nodes))
    check = fine.integrate(integrand(fine.nodes))
    scale = max(abs(value), abs(check))
    change = abs(check - value)
    if scale > 0 and change > settings.rel_tol * scale:
        raise ConvergenceError(
            f"{what}: relative change {change / scale:.2e} on node doubling exceeds "
            f"{settings.rel_tol:.1e}. Increase quadrature nodes or nu_max_factor.",
            residual=change / scale,
        )
    logger.debug("%s = %s (node-doubling change %.2e)", what, value, change)
    return value


def dephasing_rate(
    p: BathParams,
    convention: str = "as-printed",
    settings: QuadratureSettings = QuadratureSettings(),
) -> float:
    """
    Phenomenological pure-dephasing rate gamma(T) from virtual two-phonon processes.

    "as-printed" uses exp(-2 nu^2 / nu_c); "bose" uses exp(-2 nu^2 / nu_c^2).
    Both use the thermal factor n(n-1) = 1 / (4 sinh^2(beta nu / 2)).
    """
    if p.alpha == 0 or p.mu == 0 or p.temperature == 0:
        return 0.0
    integral = integrate_bath(_dephasing_integrand(p, convention), p, settings, what="gamma(T)")
    return float(p.alpha * p.mu / p.nu_c**4 * integral)


def dephasing_rate_adaptive(p: BathParams, convention: str = "as-printed") -> float:
    """gamma(T) by adaptive quadrature on [0, inf); independent cross-check of dephasing_rate."""
    if p.alpha == 0 or p.mu == 0 or p.temperature == 0:
        return 0.0
    f = _dephasing_integrand(p, convention)
    value, _ = integrate.quad(lambda nu: float(f(np.asarray(nu))), 0.0, np.inf, limit=400, epsabs=0.0, epsrel=1e-11)
    return float(p.alpha * p.mu / p.nu_c**4 * value)


def polaron_shift(p: BathParams, settings: QuadratureSettings = QuadratureSettings()) -> float:
    """Delta_p = -int J(nu)/nu dnu; closed form -alpha sqrt(pi) nu_c^3 / 4."""
    if p.alpha == 0:
        return 0.0
    return -float(integrate_bath(lambda nu: spectral_density(nu, p) / nu, p, settings, what="polaron shift"))


# ─── displacement profile ───


class VariationalProfile(NamedTuple):
    """
    Displacement function F(nu) = f(nu)/g(nu) on the quadrature nodes and the
    scalars derived from it. `fixed` is set for the constant limits F = 0
    (weak coupling) and F = 1 (standard polaron); otherwise evaluate() uses
    the closed form at the converged (gV, delta, eta), so F can be resampled
    on any grid.
    """

    nodes: np.ndarray
    F: np.ndarray
    R: float
    B: float
    gV: float
    delta: float
    eta: float
    temperature: float
    fixed: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0

    def evaluate(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        if self.fixed is not None:
            return np.full(nu.shape, float(self.fixed))
        return variational_function(nu, self.gV, self.delta, self.eta, self.temperature)


Displacement = Union[VariationalProfile, float]


def displacement_values(F: Displacement, nu: np.ndarray, temperature: float) -> np.ndarray:
    if isinstance(F, VariationalProfile):
        return F.evaluate(nu)
    return np.full(np.shape(nu), float(F))


def variational_function(nu, gV: float, delta: float, eta: float, temperature: float) -> np.ndarray:
    """
    Right-hand side of the variational condition:
    F = N / (N + 2 gV^2 tanh(beta eta/2) coth(beta nu/2) / (eta nu)),
    N = 1 - (delta/eta) tanh(beta eta/2). F = 1 when gV = 0.
    """
    nu = np.asarray(nu, dtype=float)
    if gV == 0 or eta == 0:
        return np.ones(nu.shape)
    t = 1.0 if temperature == 0 else math.tanh(0.5 * HBAR_OVER_KB * eta / temperature)
    numerator = 1.0 - (delta / eta) * t
    denominator = numerator + 2.0 * gV**2 * t * thermal_coth(nu, temperature) / (eta * nu)
    return numerator / denominator


def b_expectation(F: Displacement, p: BathParams, settings: QuadratureSettings = QuadratureSettings()) -> float:
    """<B> = exp(-1/2 int J F^2 / nu^2 coth(beta nu / 2))."""
    if p.alpha == 0:
        return 1.0
    T = p.temperature

    def integrand(nu: np.ndarray) -> np.ndarray:
        F_nu = displacement_values(F, nu, T)
        return spectral_density(nu, p) * F_nu**2 / nu**2 * thermal_coth(nu, T)

    return float(np.exp(-0.5 * integrate_bath(integrand, p, settings, what="<B> exponent")))


def variational_shift(F: Displacement, p: BathParams, settings: QuadratureSettings = QuadratureSettings()) -> float:
    """R = int J/nu F (F - 2); non-positive for 0 <= F <= 1."""
    if p.alpha == 0:
        return 0.0
    T = p.temperature

    def integrand(nu: np.ndarray) -> np.ndarray:
        F_nu = displacement_values(F, nu, T)
        return spectral_density(nu, p) / nu * F_nu * (F_nu - 2.0)

    return float(integrate_bath(integrand, p, settings, what="variational shift R"))


def fixed_profile(
    value: float,
    p: BathParams,
    g: float = 0.0,
    delta: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
) -> VariationalProfile:
    """Constant displacement F = value with its R, <B>, gV for coupling g and detuning delta."""
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"Displacement F must lie in [0, 1], got {value}.")
    grid = quadrature_grid(p, settings)
    R = variational_shift(value, p, settings)
    B = b_expectation(value, p, settings)
    gV = B * g
    dV = delta + R
    return VariationalProfile(
        nodes=grid.nodes,
        F=np.full(grid.nodes.shape, float(value)),
        R=R,
        B=B,
        gV=gV,
        delta=dV,
        eta=math.sqrt(4.0 * gV**2 + dV**2),
        temperature=p.temperature,
        fixed=float(value),
    )


# ─── tau-dependent kernels ───


def oscillatory_sums(tau, nodes: np.ndarray, cos_weights: np.ndarray, sin_weights: np.ndarray):
    """(sum_i c_i cos(nu_i tau), sum_i s_i sin(nu_i tau)) for every tau, chunked over tau."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    c = np.zeros(tau.shape)
    s = np.zeros(tau.shape)
    do_cos = bool(np.any(cos_weights))
    do_sin = bool(np.any(sin_weights))
    for start in range(0, tau.size, _KERNEL_CHUNK):
        phase = np.multiply.outer(tau[start : start + _KERNEL_CHUNK], nodes)
        if do_cos:
            c[start : start + _KERNEL_CHUNK] = np.cos(phase) @ cos_weights
        if do_sin:
            s[start : start + _KERNEL_CHUNK] = np.sin(phase) @ sin_weights
    return c, s


def thermal_kernel(weight: Callable[[np.ndarray], np.ndarray], tau, p: BathParams, grid: QuadratureGrid) -> np.ndarray:
    """int w(nu) [coth(beta nu/2) cos(nu tau) - i sin(nu tau)] dnu on `grid`."""
    nu = grid.nodes
    w = grid.weights * weight(nu)
    c, s = oscillatory_sums(tau, nu, w * thermal_coth(nu, p.temperature), w)
    return c - 1j * s


def checked_kernel(
    weight: Callable[[np.ndarray], np.ndarray],
    tau,
    p: BathParams,
    settings: QuadratureSettings,
    what: str,
) -> np.ndarray:
    """thermal_kernel with a node-doubling convergence check at (up to) three sample times."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError(f"{what}: tau must be >= 0, got min tau={tau.min()}.")
    tau_max = float(tau.max()) if tau.size else 0.0
    grid = kernel_grid(p, settings, tau_max)
    values = thermal_kernel(weight, tau, p, grid)
    sample_times = np.unique([0.0, 0.5 * tau_max, tau_max])
    fine = quadrature_grid(p, settings, nodes=2 * grid.nodes.size)
    coarse_values = thermal_kernel(weight, sample_times, p, grid)
    fine_values = thermal_kernel(weight, sample_times, p, fine)
    scale = float(np.max(np.abs(fine_values))) if sample_times.size else 0.0
    change = float(np.max(np.abs(fine_values - coarse_values))) if sample_times.size else 0.0
    if scale > 0 and change > settings.rel_tol * scale:
        raise ConvergenceError(
            f"{what}: quadrature change {change / scale:.2e} on node doubling exceeds {settings.rel_tol:.1e}.",
            residual=change / scale,
        )
    return values


def weak_correlation(tau, p: BathParams, settings: QuadratureSettings = QuadratureSettings()):
    """C(tau) = int J [coth cos(nu tau) - i sin(nu tau)]; the weak-coupling (B_Z) correlation."""
    out = checked_kernel(lambda nu: spectral_density(nu, p), tau, p, settings, "weak correlation")
    return complex(out[0]) if np.ndim(tau) == 0 else out


def phi(tau, F: Displacement, p: BathParams, settings: QuadratureSettings = QuadratureSettings()):
    """phi(tau) = int J F^2 / nu^2 [coth cos(nu tau) - i sin(nu tau)]."""
    T = p.temperature

    def weight(nu: np.ndarray) -> np.ndarray:
        return spectral_density(nu, p) * displacement_values(F, nu, T) ** 2 / nu**2

    out = checked_kernel(weight, tau, p, settings, "phi")
    return complex(out[0]) if np.ndim(tau) == 0 else out
