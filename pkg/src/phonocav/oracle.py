"""
Exact references.

Analytic: the bare Jaynes-Cummings spectrum from the 2x2 effective
Hamiltonian, and the independent-boson (g = 0) dipole correlation.

Numerical: emitter + cavity coupled to M discretized phonon modes in a
truncated Fock space. Cavity and radiative losses only ever take the system
to |g,0>, where phonons evolve freely, so the one-excitation amplitude under
the non-Hermitian Hamiltonian gives populations and two-time correlators
exactly. The phonon initial state is the vacuum at T = 0 and a Boltzmann
mixture of Fock states for few modes at T > 0.
"""

from __future__ import annotations

import logging
import math
from typing import Iterator, NamedTuple, Optional

import numpy as np
from scipy import signal, sparse
from scipy.sparse.linalg import expm_multiply

from .bath import (
    HBAR_OVER_KB,
    BathParams,
    fixed_profile,
    phi,
    polaron_shift,
    spectral_density,
    thermal_occupation,
)
from .diagnostics import relative_error, series_error
from .errors import ConfigError
from .settings import (
    DEFAULT_NUMERICS,
    ORACLE_THERMAL_MODES_MAX,
    ORACLE_THERMAL_WEIGHT_MIN,
    Numerics,
    OracleSettings,
    QuadratureSettings,
    SpectrumSettings,
)
from .spectra import Spectrum, auto_t_max, correlation_spectrum, green_function, tail_ratio
from .system import SystemParams, assemble_liouvillian, cavity, hamiltonian_lab, rotating_frame, sigma

logger = logging.getLogger(__name__)

_CORRELATE_CHUNK = 64


class DiscreteBath(NamedTuple):
    nu: np.ndarray  # rad/ps
    g: np.ndarray  # rad/ps
    cutoffs: tuple[int, ...]
    temperature: float

    @property
    def M(self) -> int:
        return int(self.nu.size)

    @property
    def modes(self) -> list[tuple[float, float]]:
        return list(zip(self.nu.tolist(), self.g.tolist()))


class ConvergenceReport(NamedTuple):
    dimension: int
    modes: int
    cutoffs: tuple[int, ...]
    max_quanta: int
    cutoff_change: float
    modes_change: float
    tol: float
    converged: Optional[bool]  # None when the check was skipped

    def as_dict(self) -> dict:
        d = self._asdict()
        d["cutoffs"] = list(self.cutoffs)
        return d


class OracleResult(NamedTuple):
    t: np.ndarray
    population: np.ndarray
    tau: np.ndarray
    correlations: dict[str, np.ndarray]  # route -> t-integrated correlator
    spectra: dict[str, Spectrum]
    bath: DiscreteBath
    dimension: int
    report: Optional[ConvergenceReport] = None


# ─── bath discretization ───


def fock_cutoffs(nu: np.ndarray, g: np.ndarray, temperature: float, min_cutoff: int) -> tuple[int, ...]:
    """Per-mode max occupation: at least 4 x (displacement (g/nu)^2 + thermal occupation)."""
    if nu.size == 0:
        return ()
    scale = (g / nu) ** 2 + thermal_occupation(nu, temperature)
    return tuple(int(max(min_cutoff, math.ceil(4.0 * x))) for x in np.atleast_1d(scale))


def discretize_bath(
    p: BathParams,
    M: int,
    nu_max: Optional[float] = None,
    min_cutoff: int = OracleSettings().min_cutoff,
) -> DiscreteBath:
    """Gauss-Legendre sampling of J on [0, nu_max]: nu_k = nodes, g_k = sqrt(J(nu_k) w_k)."""
    if M < 0:
        raise ValueError(f"Mode count must be >= 0, got {M}.")
    if M == 0:
        empty = np.zeros(0)
        return DiscreteBath(nu=empty, g=empty, cutoffs=(), temperature=p.temperature)
    top = OracleSettings().nu_max_factor * p.nu_c if nu_max is None else nu_max
    x, w = np.polynomial.legendre.leggauss(M)
    nu = 0.5 * top * (x + 1.0)
    g = np.sqrt(spectral_density(nu, p) * 0.5 * top * w)
    return DiscreteBath(
        nu=nu,
        g=g,
        cutoffs=fock_cutoffs(nu, g, p.temperature, min_cutoff),
        temperature=p.temperature,
    )


# ─── Fock space ───


def _fock_states(cutoffs: tuple[int, ...], cap: int) -> Iterator[tuple[int, ...]]:
    def rec(k: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if k == len(cutoffs):
            yield ()
            return
        for n in range(min(cutoffs[k], remaining) + 1):
            for rest in rec(k + 1, remaining - n):
                yield (n,) + rest

    yield from rec(0, cap)


def fock_space_size(cutoffs: tuple[int, ...], cap: int) -> int:
    """Number of occupation tuples with n_k <= cutoff_k and sum n_k <= cap."""
    counts = np.zeros(cap + 1, dtype=np.int64)
    counts[0] = 1
    for c in cutoffs:
        counts = np.convolve(counts, np.ones(min(c, cap) + 1, dtype=np.int64))[: cap + 1]
    return int(counts.sum())


def oracle_dimension(bath: DiscreteBath, max_quanta: int) -> int:
    return 2 * fock_space_size(bath.cutoffs, max_quanta)


def check_dimension(bath: DiscreteBath, settings: OracleSettings) -> int:
    dim = oracle_dimension(bath, settings.max_quanta)
    if dim > settings.dim_limit:
        raise ConfigError(
            f"Exact reference dimension {dim} exceeds limit {settings.dim_limit} "
            f"(M={bath.M}, max_quanta={settings.max_quanta}, cutoffs={list(bath.cutoffs)}). "
            "Reduce oracle.modes, oracle.max_quanta or oracle.min_cutoff, or raise oracle.dim_limit."
        )
    return dim


class _PhononSpace:
    def __init__(self, bath: DiscreteBath, cap: int) -> None:
        self.states = list(_fock_states(bath.cutoffs, cap))
        index = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        occ = np.array(self.states, dtype=float).reshape(n, bath.M)
        self.occupations = occ
        self.energies = occ @ bath.nu if bath.M else np.zeros(n)
        rows, cols, vals = [], [], []
        for i, s in enumerate(self.states):
            for k, nk in enumerate(s):
                if nk == 0:
                    continue
                j = index[s[:k] + (nk - 1,) + s[k + 1 :]]
                amp = bath.g[k] * math.sqrt(nk)
                rows += [i, j]
                cols += [j, i]
                vals += [amp, amp]
        self.coupling = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        self.size = n


def _hamiltonian(s: SystemParams, space: _PhononSpace) -> sparse.csr_matrix:
    """Non-Hermitian one-excitation Hamiltonian on {X, g1} x phonons, rotating at omega_bar."""
    n = space.size
    eye = sparse.identity(n, format="csr")
    electronic = sparse.diags(
        [s.omega_eg - s.omega_bar - 0.5j * s.gamma_rad, s.omega_c - s.omega_bar - 0.5j * s.kappa]
    )
    exchange = sparse.csr_matrix(np.array([[0.0, s.g], [s.g, 0.0]]))
    exciton = sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    return (
        sparse.kron(electronic, eye)
        + sparse.kron(sparse.identity(2), sparse.diags(space.energies))
        + sparse.kron(exchange, eye)
        + sparse.kron(exciton, space.coupling)
    ).tocsr().astype(complex)


def _initial_states(bath: DiscreteBath, space: _PhononSpace) -> list[tuple[float, int]]:
    """(weight, phonon index) pairs of the initial phonon mixture."""
    vacuum = space.states.index(tuple([0] * bath.M))
    if bath.temperature == 0 or bath.M == 0:
        return [(1.0, vacuum)]
    if bath.M > ORACLE_THERMAL_MODES_MAX:
        raise ConfigError(
            f"Thermal exact reference supports at most {ORACLE_THERMAL_MODES_MAX} modes at T > 0, "
            f"got M={bath.M}. Reduce oracle.modes or use T = 0."
        )
    beta_nu = HBAR_OVER_KB * bath.nu / bath.temperature
    logw = -(space.occupations @ beta_nu)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    keep = np.flatnonzero(w > ORACLE_THERMAL_WEIGHT_MIN)
    w_keep = w[keep] / w[keep].sum()
    logger.debug("thermal initial state: %d Fock states above weight %.0e", keep.size, ORACLE_THERMAL_WEIGHT_MIN)
    return list(zip(w_keep.tolist(), keep.tolist()))


def _integrated_correlation(u: np.ndarray, n_t: int, n_tau: int, dt: float, energies: np.ndarray) -> np.ndarray:
    """
    Gbar(tau_m) = sum_j e^{-i e_j tau_m} sum_i w_i conj(u_j(t_i + tau_m)) u_j(t_i),
    trapezoid weights w over t in [0, (n_t - 1) dt]; u has n_t + n_tau - 1 rows.
    """
    w = np.full(n_t, dt)
    w[0] = w[-1] = 0.5 * dt
    tau = np.arange(n_tau) * dt
    out = np.zeros(n_tau, dtype=complex)
    active = np.flatnonzero(np.any(u != 0, axis=0))
    for start in range(0, active.size, _CORRELATE_CHUNK):
        cols = active[start : start + _CORRELATE_CHUNK]
        block = u[:, cols]
        x = block[:n_t] * w[:, None]
        conv = signal.fftconvolve(block, np.conj(x[::-1]), axes=0)
        c = np.conj(conv[n_t - 1 : n_t - 1 + n_tau])
        out += np.sum(c * np.exp(-1j * np.multiply.outer(tau, energies[cols])), axis=1)
    return out


def bare_t_max(s: SystemParams, settings: SpectrumSettings = SpectrumSettings()) -> float:
    """Integration window from the phonon-free Liouvillian."""
    H = rotating_frame(hamiltonian_lab(s), s.omega_bar)
    L = assemble_liouvillian(H, [(s.kappa, cavity()), (s.gamma_rad, sigma())], frame="lab")
    return auto_t_max(L, settings)


def exact_evolve(
    s: SystemParams,
    bath: DiscreteBath,
    settings: OracleSettings = OracleSettings(),
    spectrum: SpectrumSettings = SpectrumSettings(),
    routes: tuple[str, ...] = ("cavity", "dipole"),
    t_max: Optional[float] = None,
) -> OracleResult:
    """
    One exact run: exciton population on [0, population_t_max] and, per route,
    the t-integrated correlator and its spectrum (same conventions as spectra.py).
    """
    s.validate()
    if s.kappa == 0 and s.gamma_rad == 0 and routes:
        raise ConfigError("Exact spectra need kappa > 0 or gamma_rad > 0 for the excitation to decay.")
    dim = check_dimension(bath, settings)
    space = _PhononSpace(bath, settings.max_quanta)
    H = _hamiltonian(s, space)
    n = space.size
    logger.debug("exact reference: M=%d, Fock states=%d, dimension=%d", bath.M, n, dim)

    dt = settings.dt
    t_max = bare_t_max(s, spectrum) if t_max is None else t_max
    n_t = int(math.ceil(t_max / dt)) + 1 if routes else 0
    n_pop = int(math.ceil(spectrum.population_t_max / dt)) + 1
    n_total = max(2 * n_t - 1, n_pop)
    stop = (n_total - 1) * dt

    pop = np.zeros(n_pop)
    correlations = {route: np.zeros(n_t, dtype=complex) for route in routes}
    x_block = slice(0, n)
    c_block = slice(n, 2 * n)
    for weight, j0 in _initial_states(bath, space):
        psi0 = np.zeros(2 * n, dtype=complex)
        psi0[(0 if s.initial_state == "exciton" else n) + j0] = 1.0
        psi = expm_multiply(-1j * H, psi0, start=0.0, stop=stop, num=n_total, endpoint=True)
        pop += weight * np.sum(np.abs(psi[:n_pop, x_block]) ** 2, axis=1)
        for route in routes:
            u = psi[:, c_block] if route == "cavity" else psi[:, x_block]
            correlations[route] += weight * _integrated_correlation(u, n_t, n_t, dt, space.energies)

    spectra: dict[str, Spectrum] = {}
    for route in routes:
        y = correlations[route]
        ratio = tail_ratio(y)
        if ratio > spectrum.decay_tol:
            logger.warning("exact %s correlator not decayed (tail ratio %.2e); applying Hann half-window", route, ratio)
            y = y * np.cos(0.5 * np.pi * np.arange(n_t) / (n_t - 1)) ** 2
        omega, S = correlation_spectrum(y, dt, spectrum.omega_resolution)
        if route == "cavity":
            S = s.kappa * S
        elif s.kappa > 0:
            S = S * green_function(omega, s.g, s.kappa, s.omega_c - s.omega_bar)
        spectra[route] = Spectrum(
            omega=omega,
            S=S,
            method="oracle",
            frame="lab",
            route=route,
            metadata={
                "method": "oracle",
                "frame": "lab",
                "route": route,
                "system": s._asdict(),
                "modes": bath.M,
                "cutoffs": list(bath.cutoffs),
                "max_quanta": settings.max_quanta,
                "dimension": dim,
                "grid": {"dt": dt, "t_max": t_max},
            },
        )
    return OracleResult(
        t=np.arange(n_pop) * dt,
        population=pop,
        tau=np.arange(n_t) * dt,
        correlations=correlations,
        spectra=spectra,
        bath=bath,
        dimension=dim,
    )


def exact_dipole_correlation(
    s: SystemParams, bath: DiscreteBath, tau: np.ndarray, settings: OracleSettings = OracleSettings()
) -> np.ndarray:
    """
    <sigma^+(tau) sigma(0)> from |X,0> with phonons in the mixture of _initial_states; tau uniform from 0.
    The phonons start undisplaced, so at g = 0 this is exp(i Delta_p tau) <B>^2 exp(conj(phi(tau))),
    the mirror image of ibm_dipole_correlation.
    """
    check_dimension(bath, settings)
    space = _PhononSpace(bath, settings.max_quanta)
    H = _hamiltonian(s, space)
    n = space.size
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.size, dtype=complex)
    for weight, j0 in _initial_states(bath, space):
        psi0 = np.zeros(2 * n, dtype=complex)
        psi0[j0] = 1.0
        psi = expm_multiply(-1j * H, psi0, start=0.0, stop=float(tau[-1]), num=tau.size, endpoint=True)
        out += weight * np.conj(psi[:, j0]) * np.exp(-1j * space.energies[j0] * tau)
    return out


def run_oracle(
    s: SystemParams,
    p: BathParams,
    numerics: Numerics = DEFAULT_NUMERICS,
    routes: tuple[str, ...] = ("cavity", "dipole"),
) -> OracleResult:
    """
    Exact reference with a convergence report: reruns with doubled Fock cutoffs
    and total quanta, and with 1.5x modes. Changes above conv_tol flag the
    result converged=False; it is still returned. With check_convergence off
    the report carries converged=None.
    """
    settings = numerics.oracle
    nu_max = settings.nu_max_factor * p.nu_c
    bath = discretize_bath(p, settings.modes, nu_max, settings.min_cutoff)
    gamma_note = p.temperature > 0 and p.mu > 0
    if gamma_note:
        logger.warning("exact reference omits the phenomenological pure dephasing gamma(T) (T=%.1f K)", p.temperature)
    t_max = bare_t_max(s, numerics.spectrum)
    base = exact_evolve(s, bath, settings, numerics.spectrum, routes, t_max)
    if not settings.check_convergence:
        report = ConvergenceReport(
            dimension=base.dimension, modes=bath.M, cutoffs=bath.cutoffs, max_quanta=settings.max_quanta,
            cutoff_change=math.nan, modes_change=math.nan, tol=settings.conv_tol, converged=None,
        )
        return base._replace(report=report)

    doubled = bath._replace(cutoffs=tuple(2 * c for c in bath.cutoffs))
    cutoff_settings = settings._replace(max_quanta=2 * settings.max_quanta)
    more_modes = discretize_bath(p, int(math.ceil(1.5 * settings.modes)), nu_max, settings.min_cutoff)
    changes = []
    for label, b, st in (("cutoffs x2", doubled, cutoff_settings), ("modes x1.5", more_modes, settings)):
        try:
            other = exact_evolve(s, b, st, numerics.spectrum, routes, t_max)
        except ConfigError as e:
            logger.warning("exact reference convergence check (%s) skipped: %s", label, e)
            changes.append(math.inf)
            continue
        changes.append(_result_change(base, other))
        logger.debug("exact reference %s: relative change %.3e", label, changes[-1])
    converged = bool(all(c < settings.conv_tol for c in changes))
    if not converged:
        logger.warning(
            "exact reference not converged: cutoff change %.2e, mode change %.2e (tol %.0e)",
            changes[0], changes[1], settings.conv_tol,
        )
    report = ConvergenceReport(
        dimension=base.dimension,
        modes=bath.M,
        cutoffs=bath.cutoffs,
        max_quanta=settings.max_quanta,
        cutoff_change=changes[0],
        modes_change=changes[1],
        tol=settings.conv_tol,
        converged=converged,
    )
    return base._replace(report=report)


def _result_change(a: OracleResult, b: OracleResult) -> float:
    changes = [series_error(a.t, a.population, b.t, b.population)]
    for route, spec in a.spectra.items():
        changes.append(relative_error(spec, b.spectra[route]))
    return float(max(changes))


# ─── analytic references ───


def _jc_amplitudes(s: SystemParams, route: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues lambda_k and amplitudes a_k with <out|psi(t)> = sum_k a_k e^{-i lambda_k t}."""
    H = np.array(
        [
            [s.omega_eg - s.omega_bar - 0.5j * s.gamma_rad, s.g],
            [s.g, s.omega_c - s.omega_bar - 0.5j * s.kappa],
        ],
        dtype=complex,
    )
    lam, V = np.linalg.eig(H)
    psi0 = np.array([1.0, 0.0] if s.initial_state == "exciton" else [0.0, 1.0], dtype=complex)
    coeff = np.linalg.solve(V, psi0)
    out = 1 if route == "cavity" else 0
    return lam, V[out, :] * coeff


def _jc_spectrum(omega: np.ndarray, s: SystemParams, route: str) -> np.ndarray:
    """2 Re int_0 dtau e^{-i omega tau} int_0 dt conj(u(t+tau)) u(t) in closed form."""
    if s.kappa == 0 and s.gamma_rad == 0:
        raise ValueError("The analytic Jaynes-Cummings spectrum needs kappa > 0 or gamma_rad > 0.")
    lam, a = _jc_amplitudes(s, route)
    omega = np.asarray(omega, dtype=float)
    total = np.zeros(omega.shape, dtype=complex)
    for k in range(lam.size):
        lk = np.conj(lam[k])
        for l in range(lam.size):
            t_part = 1j / (lk - lam[l])
            total += np.conj(a[k]) * a[l] * t_part * 1j / (lk - omega)
    return 2.0 * total.real


def jc_cavity_spectrum(omega: np.ndarray, s: SystemParams) -> np.ndarray:
    """Phonon-free cavity spectrum with the kappa prefactor, rotating at omega_bar."""
    return s.kappa * _jc_spectrum(omega, s, "cavity")


def jc_dipole_spectrum(omega: np.ndarray, s: SystemParams, apply_green: bool = True) -> np.ndarray:
    S = _jc_spectrum(omega, s, "dipole")
    if apply_green:
        S = S * green_function(omega, s.g, s.kappa, s.omega_c - s.omega_bar)
    return S


def ibm_dipole_correlation(
    tau, p: BathParams, omega_eg: float = 0.0, quadrature: QuadratureSettings = QuadratureSettings()
):
    """
    Independent-boson dipole correlation e^{+i (omega_eg + Delta_p) tau} <B>^2 e^{phi(tau)} at F = 1,
    in the e^{+i E tau} convention used throughout.
    """
    profile = fixed_profile(1.0, p, settings=quadrature)
    shifted = omega_eg + polaron_shift(p, quadrature)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.exp(1j * shifted * tau_arr) * profile.B**2 * np.exp(phi(tau_arr, profile, p, quadrature))
    return complex(out[0]) if np.ndim(tau) == 0 else out


def ibm_dipole_spectrum(
    s: SystemParams,
    p: BathParams,
    gamma: float,
    tau_max: float,
    settings: SpectrumSettings = SpectrumSettings(),
    quadrature: QuadratureSettings = QuadratureSettings(),
    t_max: Optional[float] = None,
) -> Spectrum:
    """
    g = 0 dipole spectrum (no Green's function) on the spectra.py grid:
    Gbar(tau) = (1 - e^{-gamma_rad t_max}) / gamma_rad * e^{-(gamma_rad/2 + gamma) tau} * IBM correlation.
    """
    if s.gamma_rad <= 0:
        raise ValueError("The independent-boson lineshape needs gamma_rad > 0.")
    n_tau = int(round(tau_max / settings.dtau)) + 1
    tau = np.arange(n_tau) * settings.dtau
    t_max = tau_max if t_max is None else t_max
    weight = -math.expm1(-s.gamma_rad * t_max) / s.gamma_rad
    y = weight * np.exp(-(0.5 * s.gamma_rad + gamma) * tau) * ibm_dipole_correlation(
        tau, p, s.omega_eg - s.omega_bar, quadrature
    )
    omega, S = correlation_spectrum(y, settings.dtau, settings.omega_resolution)
    return Spectrum(omega=omega, S=S, method="ibm", frame="lab", route="dipole", metadata={"method": "ibm"})
