"""
The four second-order phonon master equations (weak, polaron, variational,
polariton-polaron) as MasterEquationSpec values, and their Liouvillians.

Every spec is expressed in the frame rotating at omega_bar. The phonon
dissipator is the non-secular Redfield form

    K[rho] = -sum_i ( [A_i, Lambda_i rho] - [A_i, rho Lambda_i^+] ),
    Lambda_i = sum_j int_0^inf C_ij(tau) A_j(-tau) dtau,

resolved in the frame-Hamiltonian eigenbasis so each matrix element of A_j
picks up the half-Fourier transform of C_ij at its Bohr frequency.
"""

from __future__ import annotations

import logging
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import linalg

from .bath import (
    BathParams,
    VariationalProfile,
    dephasing_rate,
    fixed_profile,
    phi,
    polaron_shift,
)
from .correlations import CorrelationTable, correlation_table, half_fourier, weak_table
from .errors import MissingChannelError, UnsupportedConfigurationError
from .settings import DEFAULT_NUMERICS, Numerics, QuadratureSettings
from .system import (
    Liouvillian,
    SystemParams,
    assemble_liouvillian,
    bohr_span,
    hamiltonian_dressed,
    hamiltonian_lab,
    phonon_operators,
    polariton_basis,
    rotating_frame,
    spost,
    spre,
    standard_dissipators,
)
from .variational import solve_variational

logger = logging.getLogger(__name__)

METHODS = ("weak", "polaron", "variational", "polariton-polaron")
ROUTES = ("cavity", "dipole")


class PhononChannel(NamedTuple):
    """System operator A_i and the (partner label, correlation key) pairs that build Lambda_i."""

    label: str
    A: np.ndarray
    pairs: tuple[tuple[str, str], ...]


class Sideband(NamedTuple):
    """
    Phonon factor multiplying a frame correlator when transforming back:
    scale * exp(exponent * phi(tau)) with phi evaluated for `profile`.
    exponent = 0 gives the constant `scale`.
    """

    scale: float = 1.0
    exponent: float = 0.0
    profile: Optional[VariationalProfile] = None
    bath: Optional[BathParams] = None
    quadrature: QuadratureSettings = QuadratureSettings()

    @property
    def is_unity(self) -> bool:
        return self.scale == 1.0 and self.exponent == 0.0

    def __call__(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.exponent == 0.0 or self.profile is None:
            return np.full(tau.shape, complex(self.scale))
        return self.scale * np.exp(self.exponent * phi(tau, self.profile, self.bath, self.quadrature))


class MasterEquationSpec(NamedTuple):
    method: str
    frame: str
    frame_hamiltonian: np.ndarray
    channels: tuple[PhononChannel, ...]
    table: Optional[CorrelationTable]
    lindblad: tuple[tuple[float, np.ndarray], ...]
    cavity_sideband: Sideband
    dipole_sideband: Sideband
    system: SystemParams
    bath: BathParams
    profile: Optional[VariationalProfile] = None
    gamma: float = 0.0
    shift: float = 0.0  # naive frame shift: R, or the polariton-polaron 2 * Delta_p / 4

    def sideband_factor(self, route: str) -> Sideband:
        if route == "cavity":
            return self.cavity_sideband
        if route == "dipole":
            return self.dipole_sideband
        raise ValueError(f"Unknown spectrum route {route!r}; expected one of {', '.join(ROUTES)}.")


def phonon_dissipator(
    H_frame: np.ndarray,
    channels: tuple[PhononChannel, ...],
    table: Optional[CorrelationTable],
) -> np.ndarray:
    """
    Redfield superoperator for `channels` with kernels from `table`, using
    C_ji(-tau) = C_ij(tau)^* for the second commutator. Requires Hermitian A_j.
    """
    dim = H_frame.shape[0]
    K = np.zeros((dim * dim, dim * dim), dtype=complex)
    if not channels:
        return K
    if table is None:
        raise MissingChannelError("Phonon channels given without a correlation table.")
    energies, V = linalg.eigh(H_frame)
    omega = np.subtract.outer(energies, energies)  # omega_mn = e_m - e_n
    ops = {ch.label: ch.A for ch in channels}
    transforms: dict[str, np.ndarray] = {}

    for ch in channels:
        Lam_eig = np.zeros((dim, dim), dtype=complex)
        for partner, key in ch.pairs:
            if partner not in ops:
                raise MissingChannelError(f"Channel {ch.label} pairs with unknown channel {partner!r}.")
            if key not in transforms:
                transforms[key] = half_fourier(table, omega, key)
            A_eig = V.conj().T @ ops[partner] @ V
            Lam_eig += transforms[key] * A_eig
        Lam = V @ Lam_eig @ V.conj().T
        A = ch.A
        K -= (
            spre(A @ Lam)
            - spre(Lam) @ spost(A)
            - spre(A) @ spost(Lam.conj().T)
            + spost(Lam.conj().T @ A)
        )
    return K


def _prune(channels: list[PhononChannel], table: CorrelationTable) -> tuple[PhononChannel, ...]:
    """Drop pairs whose kernel is identically zero, then channels with no pairs left."""
    kept = []
    for ch in channels:
        pairs = tuple((partner, key) for partner, key in ch.pairs if not table.is_zero(key))
        if pairs:
            kept.append(ch._replace(pairs=pairs))
    return tuple(kept)


def _lindblad(s: SystemParams, p: BathParams, numerics: Numerics) -> tuple[float, tuple[tuple[float, np.ndarray], ...]]:
    gamma = dephasing_rate(p, numerics.dephasing_convention, numerics.quadrature)
    return gamma, tuple(standard_dissipators(s, gamma))


def build_weak(s: SystemParams, p: BathParams, numerics: Numerics = DEFAULT_NUMERICS) -> MasterEquationSpec:
    """Lab-frame H_S, one Z channel with the weak-coupling correlation, no sideband."""
    s.validate()
    p.validate()
    H = rotating_frame(hamiltonian_lab(s), s.omega_bar)
    table = weak_table(p, None, numerics.tau, numerics.quadrature, omega_max=bohr_span(H))
    ops = phonon_operators(s.g)
    channels = _prune([PhononChannel("Z", ops["Z"], (("Z", "ZZ"),))], table)
    gamma, lindblad = _lindblad(s, p, numerics)
    return MasterEquationSpec(
        method="weak",
        frame="weak",
        frame_hamiltonian=H,
        channels=channels,
        table=table,
        lindblad=lindblad,
        cavity_sideband=Sideband(),
        dipole_sideband=Sideband(),
        system=s,
        bath=p,
        gamma=gamma,
    )


def build_variational(
    s: SystemParams,
    p: BathParams,
    numerics: Numerics = DEFAULT_NUMERICS,
    fixed_F: Optional[float] = None,
    profile: Optional[VariationalProfile] = None,
) -> MasterEquationSpec:
    """
    Variational polaron frame: H = (omega_eg + R) sigma^+ sigma + omega_c a^+ a + gV(...),
    channels X, Y, Z with the YZ / ZY cross kernels. fixed_F forces a constant
    displacement (1 gives the standard polaron, 0 the weak-coupling equation).
    """
    s.validate()
    p.validate()
    if profile is None:
        if fixed_F is None:
            profile = solve_variational(s, p, numerics.solver, numerics.quadrature)
        else:
            profile = fixed_profile(fixed_F, p, g=s.g, delta=s.delta, settings=numerics.quadrature)
    H = rotating_frame(hamiltonian_dressed(s.omega_eg + profile.R, s.omega_c, profile.gV), s.omega_bar)
    table = correlation_table(profile, p, None, numerics.tau, numerics.quadrature, omega_max=bohr_span(H))
    ops = phonon_operators(s.g)
    channels = _prune(
        [
            PhononChannel("X", ops["X"], (("X", "XX"),)),
            PhononChannel("Y", ops["Y"], (("Y", "YY"), ("Z", "YZ"))),
            PhononChannel("Z", ops["Z"], (("Z", "ZZ"), ("Y", "ZY"))),
        ],
        table,
    )
    gamma, lindblad = _lindblad(s, p, numerics)
    method = "variational" if fixed_F is None else {1.0: "polaron", 0.0: "weak"}.get(float(fixed_F), "variational")
    if profile.fixed == 0.0:
        dipole = Sideband()
    else:
        dipole = Sideband(scale=profile.B**2, exponent=1.0, profile=profile, bath=p, quadrature=numerics.quadrature)
    logger.debug(
        "%s frame: R=%.6f B=%.6f gV=%.6f channels=%s",
        method, profile.R, profile.B, profile.gV, ",".join(ch.label for ch in channels) or "none",
    )
    return MasterEquationSpec(
        method=method,
        frame=method,
        frame_hamiltonian=H,
        channels=channels,
        table=table,
        lindblad=lindblad,
        cavity_sideband=Sideband(),
        dipole_sideband=dipole,
        system=s,
        bath=p,
        profile=profile,
        gamma=gamma,
        shift=profile.R,
    )


def build_polaron(s: SystemParams, p: BathParams, numerics: Numerics = DEFAULT_NUMERICS) -> MasterEquationSpec:
    """Standard polaron: the variational equation with F = 1 (only XX and YY survive)."""
    return build_variational(s, p, numerics, fixed_F=1.0)


def polariton_polaron_hamiltonian(s: SystemParams, delta_p: float) -> np.ndarray:
    """
    (E_+ + Dp/4)|+><+| + (E_- + Dp/4)|-><-| + (Dp/2)(|+><-| + |-><+|), rotating at omega_bar.

    The mixing sign follows <+|sigma^+ sigma|-> = +1/2 for the kets of
    polariton_basis, so the frame emitter sits Dp below the cavity.
    """
    basis = polariton_basis(s)
    plus, minus = basis.plus(), basis.minus()
    H = (
        (basis.E_plus + 0.25 * delta_p) * np.outer(plus, plus.conj())
        + (basis.E_minus + 0.25 * delta_p) * np.outer(minus, minus.conj())
        + 0.5 * delta_p * (np.outer(plus, minus.conj()) + np.outer(minus, plus.conj()))
    )
    return rotating_frame(H, s.omega_bar)


def polariton_exchange(s: SystemParams) -> np.ndarray:
    """-(p^+ m + m^+ p) / 2 on the system space."""
    basis = polariton_basis(s)
    plus, minus = basis.plus(), basis.minus()
    return -0.5 * (np.outer(plus, minus.conj()) + np.outer(minus, plus.conj()))


def build_polariton_polaron(s: SystemParams, p: BathParams, numerics: Numerics = DEFAULT_NUMERICS) -> MasterEquationSpec:
    """
    Polaron displacement diagonal in the polariton basis (resonance only).
    One PM channel with the weak-coupling kernel; sideband B^(1/2) exp(phi/4) at F = 1 on both routes.
    """
    s.validate()
    p.validate()
    if s.delta != 0:
        raise UnsupportedConfigurationError(
            f"polariton-polaron requires zero detuning (omega_eg = omega_c), got delta={s.delta}. "
            "Use the variational method for detuned systems."
        )
    delta_p = polaron_shift(p, numerics.quadrature)
    H = polariton_polaron_hamiltonian(s, delta_p)
    table = weak_table(p, None, numerics.tau, numerics.quadrature, omega_max=bohr_span(H))
    channels = _prune([PhononChannel("PM", polariton_exchange(s), (("PM", "ZZ"),))], table)
    gamma, lindblad = _lindblad(s, p, numerics)
    polaron = fixed_profile(1.0, p, g=s.g, delta=s.delta, settings=numerics.quadrature)
    sideband = Sideband(scale=np.sqrt(polaron.B), exponent=0.25, profile=polaron, bath=p, quadrature=numerics.quadrature)
    return MasterEquationSpec(
        method="polariton-polaron",
        frame="polariton-polaron",
        frame_hamiltonian=H,
        channels=channels,
        table=table,
        lindblad=lindblad,
        cavity_sideband=sideband,
        dipole_sideband=sideband,
        system=s,
        bath=p,
        profile=polaron,
        gamma=gamma,
        shift=0.5 * delta_p,
    )


BUILDERS: dict[str, Callable[..., MasterEquationSpec]] = {
    "weak": build_weak,
    "polaron": build_polaron,
    "variational": build_variational,
    "polariton-polaron": build_polariton_polaron,
}


def build(method: str, s: SystemParams, p: BathParams, numerics: Numerics = DEFAULT_NUMERICS) -> MasterEquationSpec:
    try:
        builder = BUILDERS[method]
    except KeyError:
        raise ValueError(f"Unknown method {method!r}; expected one of {', '.join(METHODS)}.") from None
    return builder(s, p, numerics)


def build_liouvillian(spec: MasterEquationSpec) -> Liouvillian:
    K = phonon_dissipator(spec.frame_hamiltonian, spec.channels, spec.table)
    return assemble_liouvillian(spec.frame_hamiltonian, spec.lindblad, K, frame=spec.frame)
