"""Tests for operators, Hamiltonians, superoperators and the Liouvillian."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from phonocav.system import (
    Liouvillian,
    SystemParams,
    assemble_liouvillian,
    cavity,
    coherence_indices,
    hamiltonian_lab,
    initial_density,
    lindblad_dissipator,
    phonon_operators,
    polariton_basis,
    rotating_frame,
    sigma,
    single_excitation_block,
    spost,
    spre,
    standard_dissipators,
    unvec,
    vec,
)


def test_phonon_operators_are_hermitian() -> None:
    for name, op in phonon_operators(2.23).items():
        np.testing.assert_allclose(op, op.conj().T, err_msg=name)


def test_polariton_energies(resonant_system: SystemParams) -> None:
    s = resonant_system
    H = rotating_frame(hamiltonian_lab(s), s.omega_bar)
    energies = np.linalg.eigvalsh(single_excitation_block(H))
    np.testing.assert_allclose(energies, [-s.g, s.g], atol=1e-12)
    basis = polariton_basis(s)
    assert basis.E_plus - basis.E_minus == pytest.approx(2.0 * s.g)
    assert basis.C_plus == pytest.approx(1.0 / math.sqrt(2.0))


def test_polariton_states_diagonalize_hamiltonian() -> None:
    s = SystemParams(omega_eg=0.7, omega_c=-0.3, g=1.1)
    basis = polariton_basis(s)
    H = hamiltonian_lab(s)
    np.testing.assert_allclose(H @ basis.plus(), basis.E_plus * basis.plus(), atol=1e-12)
    np.testing.assert_allclose(H @ basis.minus(), basis.E_minus * basis.minus(), atol=1e-12)


def test_superoperator_convention() -> None:
    rng = np.random.default_rng(7)
    A, B, X = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(spre(A) @ spost(B) @ vec(X), vec(A @ X @ B), atol=1e-12)
    np.testing.assert_allclose(unvec(vec(X)), X)


def test_coherence_indices_point_at_ground_row() -> None:
    rho = np.zeros((3, 3))
    rho[0, 1] = 1.0
    rho[0, 2] = 2.0
    v = vec(rho)
    i, j = coherence_indices()
    assert (i, j) == (3, 6)
    assert v[i] == 1.0 and v[j] == 2.0


def test_dissipated_liouvillian_preserves_trace(resonant_system: SystemParams) -> None:
    s = resonant_system._replace(gamma_rad=0.3)
    H = rotating_frame(hamiltonian_lab(s), s.omega_bar)
    L = assemble_liouvillian(H, standard_dissipators(s, 0.05))
    assert L.trace_residual() < 1e-12
    assert np.max(L.eig.values.real) < 1e-10


def test_lindblad_decay_of_cavity_photon() -> None:
    L = assemble_liouvillian(np.zeros((3, 3)), [(0.5, cavity())])
    rho = L.propagator(2.0) @ vec(initial_density(SystemParams(initial_state="photon")))
    assert unvec(rho)[2, 2].real == pytest.approx(math.exp(-1.0), rel=1e-10)


def test_assemble_rejects_bad_input() -> None:
    with pytest.raises(ValueError, match="Hermitian"):
        assemble_liouvillian(sigma())
    with pytest.raises(ValueError, match="rate"):
        assemble_liouvillian(np.zeros((3, 3)), [(-1.0, cavity())])
    with pytest.raises(ValueError, match="9x9"):
        Liouvillian(np.zeros((4, 4)))


def test_liouvillian_matrix_is_read_only() -> None:
    L = assemble_liouvillian(np.zeros((3, 3)), [(1.0, sigma())])
    with pytest.raises(ValueError):
        L.matrix[0, 0] = 1.0


def test_check_stability_warns(caplog: pytest.LogCaptureFixture) -> None:
    growing = Liouvillian(-lindblad_dissipator(sigma()))
    with caplog.at_level(logging.WARNING, logger="phonocav.system"):
        max_real = growing.check_stability()
    assert max_real > 0
    assert "positive real part" in caplog.text


def test_system_validate() -> None:
    with pytest.raises(ValueError, match="kappa"):
        SystemParams(kappa=-1.0).validate()
    with pytest.raises(ValueError, match="initial_state"):
        SystemParams(initial_state="vacuum").validate()
    assert SystemParams(omega_eg=1.0, omega_c=0.5).delta == 0.5
