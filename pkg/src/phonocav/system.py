"""
Emitter-cavity system truncated to one excitation: basis {|g,0>, |X,0>, |g,1>}.

Operators, Hamiltonians, polariton basis, superoperators (column-stacking
vec convention: vec(A X B) = (B^T kron A) vec(X)) and the Liouvillian with a
lazily cached eigendecomposition.
"""

from __future__ import annotations

import logging
import math
import threading
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import ConvergenceError

logger = logging.getLogger(__name__)

DIM = 3
G0, X0, G1 = 0, 1, 2
INITIAL_STATES = ("exciton", "photon")
FRAMES = ("lab", "weak", "polaron", "variational", "polariton-polaron")

STABILITY_TOL_DEFAULT = 1e-8
EIG_COND_LIMIT = 1e8


class StateSpace(NamedTuple):
    basis: tuple[str, ...] = ("|g,0>", "|X,0>", "|g,1>")
    dim: int = DIM

    def ket(self, index: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[index] = 1.0
        return v

    def projector(self, index: int) -> np.ndarray:
        P = np.zeros((self.dim, self.dim), dtype=complex)
        P[index, index] = 1.0
        return P


STATE_SPACE = StateSpace()


class SystemParams(NamedTuple):
    """Emitter-cavity parameters in rad/ps."""

    omega_eg: float = 0.0
    omega_c: float = 0.0
    g: float = 2.23
    kappa: float = 0.5
    gamma_rad: float = 0.0
    initial_state: str = "exciton"

    @property
    def delta(self) -> float:
        return self.omega_eg - self.omega_c

    @property
    def omega_bar(self) -> float:
        return 0.5 * (self.omega_eg + self.omega_c)

    def validate(self) -> "SystemParams":
        if not self.g >= 0:
            raise ValueError(f"Light-matter coupling g must be >= 0, got {self.g}.")
        if not self.kappa >= 0:
            raise ValueError(f"Cavity decay kappa must be >= 0, got {self.kappa}.")
        if not self.gamma_rad >= 0:
            raise ValueError(f"Radiative decay gamma_rad must be >= 0, got {self.gamma_rad}.")
        if self.initial_state not in INITIAL_STATES:
            raise ValueError(
                f"initial_state must be one of {', '.join(INITIAL_STATES)}, got {self.initial_state!r}."
            )
        return self


# ─── operators ───


def sigma() -> np.ndarray:
    """Exciton lowering operator |g><X|."""
    op = np.zeros((DIM, DIM), dtype=complex)
    op[G0, X0] = 1.0
    return op


def cavity() -> np.ndarray:
    """Photon annihilation a restricted to one excitation: |g,0><g,1|."""
    op = np.zeros((DIM, DIM), dtype=complex)
    op[G0, G1] = 1.0
    return op


def exciton_number() -> np.ndarray:
    return STATE_SPACE.projector(X0)


def photon_number() -> np.ndarray:
    return STATE_SPACE.projector(G1)


def excitation_number() -> np.ndarray:
    return exciton_number() + photon_number()


def exchange() -> np.ndarray:
    """sigma^dagger a = |X,0><g,1|."""
    op = np.zeros((DIM, DIM), dtype=complex)
    op[X0, G1] = 1.0
    return op


def phonon_operators(g: float) -> dict[str, np.ndarray]:
    """X = g(sigma^+ a + a^+ sigma), Y = i g(sigma a^+ - sigma^+ a), Z = sigma^+ sigma."""
    E = exchange()
    return {
        "X": g * (E + E.conj().T),
        "Y": 1j * g * (E.conj().T - E),
        "Z": exciton_number(),
    }


def initial_density(s: SystemParams) -> np.ndarray:
    """|X,0><X,0| (emitter just excited) or |g,1><g,1|."""
    return STATE_SPACE.projector(X0 if s.initial_state == "exciton" else G1)


# ─── Hamiltonians ───


def hamiltonian_lab(s: SystemParams) -> np.ndarray:
    """H_S = omega_eg sigma^+ sigma + omega_c a^+ a + g(sigma^+ a + a^+ sigma)."""
    E = exchange()
    return (
        s.omega_eg * exciton_number()
        + s.omega_c * photon_number()
        + s.g * (E + E.conj().T)
    )


def hamiltonian_dressed(omega_eg: float, omega_c: float, g: float) -> np.ndarray:
    """Jaynes-Cummings form with shifted emitter frequency and renormalized coupling."""
    return hamiltonian_lab(SystemParams(omega_eg=omega_eg, omega_c=omega_c, g=g))


def rotating_frame(H: np.ndarray, omega: float) -> np.ndarray:
    """Remove omega * (sigma^+ sigma + a^+ a); exact because every term conserves excitations."""
    return H - omega * excitation_number()


def bohr_span(H: np.ndarray) -> float:
    """Largest transition frequency |e_m - e_n| of a Hermitian H."""
    e = linalg.eigvalsh(H)
    return float(e[-1] - e[0])


class PolaritonBasis(NamedTuple):
    C_plus: float
    C_minus: float
    E_plus: float
    E_minus: float

    def plus(self) -> np.ndarray:
        """|+> = C_+ |X,0> + C_- |g,1>."""
        return self.C_plus * STATE_SPACE.ket(X0) + self.C_minus * STATE_SPACE.ket(G1)

    def minus(self) -> np.ndarray:
        """|-> = C_- |X,0> - C_+ |g,1>."""
        return self.C_minus * STATE_SPACE.ket(X0) - self.C_plus * STATE_SPACE.ket(G1)


def polariton_basis(s: SystemParams) -> PolaritonBasis:
    root = math.sqrt(s.delta**2 + 4.0 * s.g**2)
    ratio = 0.0 if root == 0 else s.delta / root
    C_plus = math.sqrt(0.5 * (1.0 + ratio))
    C_minus = math.sqrt(0.5 * (1.0 - ratio))
    half_split = 0.5 * root
    return PolaritonBasis(
        C_plus=C_plus,
        C_minus=C_minus,
        E_plus=s.omega_bar + half_split,
        E_minus=s.omega_bar - half_split,
    )


# ─── superoperators ───


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int = DIM) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def spre(A: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X."""
    return np.kron(np.eye(A.shape[0]), A)


def spost(A: np.ndarray) -> np.ndarray:
    """Superoperator of X -> X A."""
    return np.kron(A.T, np.eye(A.shape[0]))


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """-i [H, .]"""
    return -1j * (spre(H) - spost(H))


def lindblad_dissipator(A: np.ndarray) -> np.ndarray:
    """D_A[rho] = A rho A^+ - (A^+ A rho + rho A^+ A) / 2."""
    AdA = A.conj().T @ A
    return spre(A) @ spost(A.conj().T) - 0.5 * spre(AdA) - 0.5 * spost(AdA)


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    right: np.ndarray
    left: np.ndarray  # inverse of right
    cond: float


class Liouvillian:
    """
    Dense superoperator d vec(rho)/dt = L vec(rho). Immutable after assembly;
    the eigendecomposition and Schur form are computed once on first use.
    """

    def __init__(self, matrix: np.ndarray, frame: str = "lab", dim: int = DIM) -> None:
        m = np.array(matrix, dtype=complex)
        if m.shape != (dim * dim, dim * dim):
            raise ValueError(f"Liouvillian must be {dim * dim}x{dim * dim}, got {m.shape}.")
        m.flags.writeable = False
        self.matrix = m
        self.frame = frame
        self.dim = dim
        self._lock = threading.Lock()
        self._eig: Optional[EigenDecomposition] = None
        self._schur: Optional[tuple[np.ndarray, np.ndarray]] = None

    @property
    def eig(self) -> EigenDecomposition:
        with self._lock:
            if self._eig is None:
                try:
                    values, right = linalg.eig(self.matrix)
                    left = linalg.inv(right)
                except (linalg.LinAlgError, ValueError) as e:
                    raise ConvergenceError(f"Liouvillian eigendecomposition failed ({self.frame}): {e}") from e
                cond = float(np.linalg.cond(right))
                logger.debug("Liouvillian (%s) eigenvector condition number %.3e", self.frame, cond)
                self._eig = EigenDecomposition(values=values, right=right, left=left, cond=cond)
            return self._eig

    @property
    def schur(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex Schur form (T, Z) with L = Z T Z^H."""
        with self._lock:
            if self._schur is None:
                T, Z = linalg.schur(self.matrix, output="complex")
                self._schur = (T, Z)
            return self._schur

    @property
    def well_conditioned(self) -> bool:
        return self.eig.cond <= EIG_COND_LIMIT

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def propagator(self, t: float) -> np.ndarray:
        return linalg.expm(self.matrix * t)

    def trace_residual(self) -> float:
        """|| vec(I)^T L ||; zero for a trace-preserving generator."""
        return float(np.linalg.norm(vec(np.eye(self.dim)) @ self.matrix))

    def check_stability(self, tol: float = STABILITY_TOL_DEFAULT) -> float:
        """Largest eigenvalue real part; logs a warning (does not raise) above tol."""
        max_real = float(np.max(self.eig.values.real))
        if max_real > tol:
            logger.warning(
                "Liouvillian (%s) has an eigenvalue with positive real part %.3e (tolerance %.1e)",
                self.frame, max_real, tol,
            )
        return max_real


def assemble_liouvillian(
    H: np.ndarray,
    dissipators: Iterable[tuple[float, np.ndarray]] = (),
    phonon_kernel: Optional[np.ndarray] = None,
    frame: str = "lab",
) -> Liouvillian:
    """L = -i[H, .] + sum_k rate_k D_{A_k} + K."""
    H = np.asarray(H, dtype=complex)
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("Frame Hamiltonian must be Hermitian.")
    L = commutator_superop(H)
    for rate, A in dissipators:
        if rate < 0:
            raise ValueError(f"Lindblad rate must be >= 0, got {rate}.")
        if rate:
            L = L + rate * lindblad_dissipator(np.asarray(A, dtype=complex))
    if phonon_kernel is not None:
        L = L + phonon_kernel
    return Liouvillian(L, frame=frame, dim=H.shape[0])


def standard_dissipators(s: SystemParams, gamma_dephasing: float) -> list[tuple[float, np.ndarray]]:
    """kappa D_a + 2 gamma(T) D_{sigma^+ sigma} + gamma_rad D_sigma, common to every method."""
    return [
        (s.kappa, cavity()),
        (2.0 * gamma_dephasing, exciton_number()),
        (s.gamma_rad, sigma()),
    ]


def single_excitation_block(H: np.ndarray) -> np.ndarray:
    """The {|X,0>, |g,1>} block."""
    return np.asarray(H)[X0:, X0:]


def coherence_indices(dim: int = DIM) -> Sequence[int]:
    """vec indices of |g,0><X,0| and |g,0><g,1| (column stacking)."""
    return (X0 * dim + G0, G1 * dim + G0)
