"""
Self-consistent variational displacement F(nu) = f(nu)/g(nu).

Minimizing the Bogoliubov free-energy bound couples F to the scalars it
produces (R, <B>, gV = <B> g, delta = Delta + R, eta = sqrt(4 gV^2 + delta^2)).
We iterate F <- (1 - lambda) F + lambda F_rhs from F = 1 until the largest
pointwise change drops below tol.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from .bath import (
    BathParams,
    VariationalProfile,
    fixed_profile,
    quadrature_grid,
    spectral_density,
    thermal_coth,
    variational_function,
)
from .errors import ConvergenceError
from .settings import QuadratureSettings, SolverSettings

if TYPE_CHECKING:
    from .system import SystemParams

logger = logging.getLogger(__name__)


class _Scalars:
    """R, <B>, gV, delta, eta for one F on one grid."""

    __slots__ = ("R", "B", "gV", "delta", "eta")

    def __init__(self, F: np.ndarray, J_over_nu: np.ndarray, b_weight: np.ndarray, g: float, Delta: float) -> None:
        self.R = float(J_over_nu @ (F * (F - 2.0)))
        self.B = float(np.exp(-0.5 * (b_weight @ F**2)))
        self.gV = self.B * g
        self.delta = Delta + self.R
        self.eta = math.sqrt(4.0 * self.gV**2 + self.delta**2)


def _grid_terms(p: BathParams, nodes: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    J = spectral_density(nodes, p)
    J_over_nu = weights * J / nodes
    b_weight = weights * J / nodes**2 * thermal_coth(nodes, p.temperature)
    return J_over_nu, b_weight


def solve_variational(
    s: "SystemParams",
    p: BathParams,
    settings: SolverSettings = SolverSettings(),
    quadrature: QuadratureSettings = QuadratureSettings(),
) -> VariationalProfile:
    """
    Solve the variational condition for F on the quadrature grid.

    Returns F = 1 (standard polaron) without iterating when g = 0 or alpha = 0.
    Raises ConvergenceError carrying the last residual if max_iter is reached.
    """
    if s.g < 0:
        raise ValueError(f"Light-matter coupling g must be >= 0, got {s.g}.")
    if not 0.0 < settings.damping <= 1.0:
        raise ValueError(f"Solver damping must lie in (0, 1], got {settings.damping}.")
    if s.g == 0 or p.alpha == 0:
        logger.debug("variational: g=%g alpha=%g, returning F = 1", s.g, p.alpha)
        return fixed_profile(1.0, p, g=s.g, delta=s.delta, settings=quadrature)

    grid = quadrature_grid(p, quadrature)
    nu = grid.nodes
    T = p.temperature
    J_over_nu, b_weight = _grid_terms(p, nu, grid.weights)

    lam = settings.damping
    F = np.ones_like(nu)
    residual = math.inf
    iterations = 0
    for iterations in range(1, settings.max_iter + 1):
        sc = _Scalars(F, J_over_nu, b_weight, s.g, s.delta)
        F_rhs = variational_function(nu, sc.gV, sc.delta, sc.eta, T)
        F_new = (1.0 - lam) * F + lam * F_rhs
        residual = float(np.max(np.abs(F_new - F)))
        F = F_new
        logger.debug("variational iteration %d: residual=%.3e R=%.6f B=%.6f", iterations, residual, sc.R, sc.B)
        if residual < settings.tol:
            break
    else:
        raise ConvergenceError(
            f"Variational solver did not converge in {settings.max_iter} iterations "
            f"(residual {residual:.3e} > tol {settings.tol:.1e}) at g={s.g}, T={T} K. "
            "Lower the damping or raise max_iter.",
            residual=residual,
        )

    # Store the closed form at the final scalars so evaluate() reproduces F on any grid.
    sc = _Scalars(F, J_over_nu, b_weight, s.g, s.delta)
    F = variational_function(nu, sc.gV, sc.delta, sc.eta, T)

    profile = VariationalProfile(
        nodes=nu,
        F=F,
        R=sc.R,
        B=sc.B,
        gV=sc.gV,
        delta=sc.delta,
        eta=sc.eta,
        temperature=T,
        iterations=iterations,
        residual=residual,
    )
    _check_grid(profile, p, s, quadrature)
    logger.debug(
        "variational converged in %d iterations: R=%.6f B=%.6f gV=%.6f", iterations, sc.R, sc.B, sc.gV
    )
    return profile


def _check_grid(profile: VariationalProfile, p: BathParams, s: "SystemParams", quadrature: QuadratureSettings) -> None:
    """Re-evaluate R and <B> with twice the nodes; the converged scalars must not move."""
    fine = quadrature_grid(p, quadrature, nodes=2 * quadrature.nodes)
    J_over_nu, b_weight = _grid_terms(p, fine.nodes, fine.weights)
    sc = _Scalars(profile.evaluate(fine.nodes), J_over_nu, b_weight, s.g, s.delta)
    for name, coarse, refined in (("R", profile.R, sc.R), ("<B>", profile.B, sc.B)):
        scale = max(abs(coarse), abs(refined))
        if scale > 0 and abs(refined - coarse) > quadrature.rel_tol * scale:
            raise ConvergenceError(
                f"Variational {name} changes by {abs(refined - coarse) / scale:.2e} on node doubling; "
                "increase quadrature nodes.",
                residual=abs(refined - coarse) / scale,
            )
