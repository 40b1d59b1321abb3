"""
Numerical settings: quadrature, variational solver, correlation time grid,
spectrum FFT and exact-reference truncation. All are immutable NamedTuples;
defaults live in module-level constants so the CLI and tests share them.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

NU_MAX_FACTOR_DEFAULT = 8.0
QUAD_NODES_DEFAULT = 400
QUAD_REL_TOL_DEFAULT = 1e-6

SOLVER_DAMPING_DEFAULT = 0.5
SOLVER_TOL_DEFAULT = 1e-10
SOLVER_MAX_ITER_DEFAULT = 500

TAU_PHASE_STEP_DEFAULT = 0.1
TAU_DECAY_TOL_DEFAULT = 1e-4
TAU_MAX_INITIAL_FACTOR = 10.0
TAU_MAX_LIMIT_DEFAULT = 400.0  # ps

SPECTRUM_DTAU_DEFAULT = 0.01  # ps
OMEGA_RESOLUTION_DEFAULT = 0.01  # rad/ps
SPECTRUM_DECAY_TOL_DEFAULT = 1e-6
T_MAX_LIMIT_DEFAULT = 500.0  # ps
POPULATION_DT_DEFAULT = 0.05  # ps
POPULATION_T_MAX_DEFAULT = 20.0  # ps

ORACLE_MODES_DEFAULT = 6
ORACLE_NU_MAX_FACTOR_DEFAULT = 3.5
ORACLE_MAX_QUANTA_DEFAULT = 3
ORACLE_MIN_CUTOFF_DEFAULT = 2
ORACLE_DIM_LIMIT_DEFAULT = 20_000
ORACLE_CONV_TOL_DEFAULT = 0.01
ORACLE_DT_DEFAULT = 0.01  # ps
ORACLE_THERMAL_MODES_MAX = 8
ORACLE_THERMAL_WEIGHT_MIN = 1e-6

DEPHASING_CONVENTIONS = ("as-printed", "bose")
DEPHASING_CONVENTION_DEFAULT = "as-printed"


class QuadratureSettings(NamedTuple):
    """Gauss-Legendre rule on [0, nu_max_factor * nu_c]."""

    nu_max_factor: float = NU_MAX_FACTOR_DEFAULT
    nodes: int = QUAD_NODES_DEFAULT
    rel_tol: float = QUAD_REL_TOL_DEFAULT


class SolverSettings(NamedTuple):
    """Damped fixed-point iteration for the variational displacement."""

    damping: float = SOLVER_DAMPING_DEFAULT
    tol: float = SOLVER_TOL_DEFAULT
    max_iter: int = SOLVER_MAX_ITER_DEFAULT


class TauSettings(NamedTuple):
    """Uniform correlation-kernel grid: dt from phase_step, tau_max from decay_tol."""

    phase_step: float = TAU_PHASE_STEP_DEFAULT
    decay_tol: float = TAU_DECAY_TOL_DEFAULT
    tau_max_initial_factor: float = TAU_MAX_INITIAL_FACTOR
    tau_max_limit: float = TAU_MAX_LIMIT_DEFAULT


class SpectrumSettings(NamedTuple):
    """
    Two-time correlation and FFT settings. t_max=None picks the integration
    window from the slowest Liouvillian decay rate.
    """

    dtau: float = SPECTRUM_DTAU_DEFAULT
    omega_resolution: float = OMEGA_RESOLUTION_DEFAULT
    t_max: Optional[float] = None
    decay_tol: float = SPECTRUM_DECAY_TOL_DEFAULT
    t_max_limit: float = T_MAX_LIMIT_DEFAULT
    population_dt: float = POPULATION_DT_DEFAULT
    population_t_max: float = POPULATION_T_MAX_DEFAULT


class OracleSettings(NamedTuple):
    """Discrete-mode exact reference: mode count, Fock truncation, convergence gate."""

    modes: int = ORACLE_MODES_DEFAULT
    nu_max_factor: float = ORACLE_NU_MAX_FACTOR_DEFAULT
    max_quanta: int = ORACLE_MAX_QUANTA_DEFAULT
    min_cutoff: int = ORACLE_MIN_CUTOFF_DEFAULT
    dim_limit: int = ORACLE_DIM_LIMIT_DEFAULT
    dt: float = ORACLE_DT_DEFAULT
    check_convergence: bool = True
    conv_tol: float = ORACLE_CONV_TOL_DEFAULT


class Numerics(NamedTuple):
    """Everything numerical a run needs besides the physical parameters."""

    quadrature: QuadratureSettings = QuadratureSettings()
    solver: SolverSettings = SolverSettings()
    tau: TauSettings = TauSettings()
    spectrum: SpectrumSettings = SpectrumSettings()
    oracle: OracleSettings = OracleSettings()
    dephasing_convention: str = DEPHASING_CONVENTION_DEFAULT


DEFAULT_NUMERICS = Numerics()
