"""Tests for the four master equations and their Liouvillians."""

from __future__ import annotations

import numpy as np
import pytest

from phonocav.bath import BathParams, polaron_shift
from phonocav.correlations import weak_table
from phonocav.errors import MissingChannelError, UnsupportedConfigurationError
from phonocav.master_eq import (
    METHODS,
    PhononChannel,
    build,
    build_liouvillian,
    build_polariton_polaron,
    build_polaron,
    build_variational,
    build_weak,
    phonon_dissipator,
)
from phonocav.system import (
    SystemParams,
    exciton_number,
    phonon_operators,
    polariton_basis,
    single_excitation_block,
    unvec,
    vec,
)


def test_undisplaced_variational_equals_weak(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    weak = build_liouvillian(build_weak(resonant_system, bath_4k))
    var0 = build_liouvillian(build_variational(resonant_system, bath_4k, fixed_F=0.0))
    assert np.max(np.abs(var0.matrix - weak.matrix)) < 1e-10


def test_fully_displaced_variational_equals_polaron(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    polaron = build_polaron(resonant_system, bath_4k)
    var1 = build_variational(resonant_system, bath_4k, profile=polaron.profile)
    assert np.max(np.abs(build_liouvillian(var1).matrix - build_liouvillian(polaron).matrix)) < 1e-12
    assert {ch.label for ch in polaron.channels} == {"X", "Y"}


def test_weak_has_single_z_channel(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_weak(resonant_system, bath_4k)
    assert [ch.label for ch in spec.channels] == ["Z"]
    assert spec.cavity_sideband.is_unity and spec.dipole_sideband.is_unity
    assert spec.shift == 0.0


def test_variational_keeps_cross_channels(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_variational(resonant_system, bath_4k)
    assert {ch.label for ch in spec.channels} == {"X", "Y", "Z"}
    keys = {key for ch in spec.channels for _, key in ch.pairs}
    assert {"YZ", "ZY"} <= keys
    assert spec.shift == pytest.approx(spec.profile.R)


def test_polaron_frame_hamiltonian(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_polaron(resonant_system, bath_4k)
    block = single_excitation_block(spec.frame_hamiltonian)
    assert block[0, 0].real == pytest.approx(polaron_shift(bath_4k), rel=1e-9)
    assert block[0, 1].real == pytest.approx(spec.profile.B * resonant_system.g, rel=1e-12)


def test_polariton_polaron_shift_and_channel(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_polariton_polaron(resonant_system, bath_4k)
    delta_p = polaron_shift(bath_4k)
    assert spec.shift == pytest.approx(0.5 * delta_p)
    assert [ch.label for ch in spec.channels] == ["PM"]
    energies = np.linalg.eigvalsh(single_excitation_block(spec.frame_hamiltonian))
    # The +/- coupling Delta_p/2 mixes the bare polaritons.
    split = 2.0 * np.hypot(resonant_system.g, 0.5 * delta_p)
    assert energies[1] - energies[0] == pytest.approx(split, rel=1e-12)


def test_polariton_polaron_frame_emitter_below_cavity(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    spec = build_polariton_polaron(resonant_system, bath_4k)
    delta_p = polaron_shift(bath_4k)
    assert delta_p < 0
    block = single_excitation_block(spec.frame_hamiltonian)
    assert (block[0, 0] - block[1, 1]).real == pytest.approx(delta_p, rel=1e-12)
    assert block[0, 1].real == pytest.approx(resonant_system.g, rel=1e-12)
    basis = polariton_basis(resonant_system)
    mixing = basis.plus().conj() @ spec.frame_hamiltonian @ basis.minus()
    assert mixing.real == pytest.approx(0.5 * delta_p, rel=1e-12)
    assert (basis.plus().conj() @ exciton_number() @ basis.minus()).real == pytest.approx(0.5)


def test_polariton_polaron_rejects_detuning(bath_4k: BathParams) -> None:
    with pytest.raises(UnsupportedConfigurationError, match="zero detuning"):
        build_polariton_polaron(SystemParams(omega_eg=0.5), bath_4k)


def test_build_dispatch(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    for method in METHODS:
        assert build(method, resonant_system, bath_4k).method == method
    with pytest.raises(ValueError, match="Unknown method"):
        build("redfield", resonant_system, bath_4k)


def test_missing_channel_is_reported(bath_4k: BathParams, resonant_system: SystemParams) -> None:
    table = weak_table(bath_4k)
    X = phonon_operators(resonant_system.g)["X"]
    with pytest.raises(MissingChannelError, match="XX"):
        phonon_dissipator(np.zeros((3, 3)), (PhononChannel("X", X, (("X", "XX"),)),), table)
    with pytest.raises(MissingChannelError, match="unknown channel"):
        phonon_dissipator(np.zeros((3, 3)), (PhononChannel("Z", exciton_number(), (("Y", "ZZ"),)),), table)


def test_no_bath_coupling_leaves_lindblad_only(resonant_system: SystemParams) -> None:
    p = BathParams(alpha=0.0)
    for method in METHODS:
        spec = build(method, resonant_system, p)
        assert spec.channels == ()
        assert spec.gamma == 0.0


@pytest.mark.parametrize("method", METHODS)
def test_liouvillians_preserve_trace(bath_4k: BathParams, resonant_system: SystemParams, method: str) -> None:
    L = build_liouvillian(build(method, resonant_system, bath_4k))
    assert L.trace_residual() < 1e-10


@pytest.mark.parametrize("method", METHODS)
def test_liouvillians_preserve_hermiticity(bath_4k: BathParams, resonant_system: SystemParams, method: str) -> None:
    L = build_liouvillian(build(method, resonant_system, bath_4k))
    rng = np.random.default_rng(7)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = M + M.conj().T
    drho = unvec(L.matrix @ vec(rho))
    np.testing.assert_allclose(drho, drho.conj().T, atol=1e-10 * np.abs(drho).max())
