import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exciton_feedback.hilbert import is_hermitian
from exciton_feedback.model import (
    PARALLEL,
    PERPENDICULAR,
    ChainModel,
    build_hamiltonian,
    chain_model,
    collective_rabi,
    coupling_matrix,
    detuning_shift,
    dipole_coupling,
    sample_disorder,
    uniform_g_for_rabi,
)

# Hand evaluation: 1/(4 pi eps0) = 8.9875e9, d = 36 D, R = 10 nm, perpendicular dipoles.
HAND_V_10NM = 8.9875e9 * (36 * 3.33564e-30) ** 2 / (10e-9) ** 3 / 1.602176634e-19


def test_hand_value_is_about_0p809_mev():
    assert HAND_V_10NM == pytest.approx(8.09e-4, rel=1e-3)


def test_dipole_coupling_perpendicular():
    m = chain_model(3, spacing=10.0, dipole_orientation=PERPENDICULAR)
    assert dipole_coupling(m, 1, 2) == pytest.approx(HAND_V_10NM, rel=1e-4)


def test_dipole_coupling_parallel_is_minus_twice():
    perp = chain_model(3, spacing=10.0)
    par = chain_model(3, spacing=10.0, dipole_orientation=PARALLEL)
    assert dipole_coupling(par, 1, 2) == pytest.approx(-2 * dipole_coupling(perp, 1, 2), rel=1e-14)


def test_dipole_coupling_cubic_falloff_and_symmetry():
    m = chain_model(5, spacing=2.0)
    assert dipole_coupling(m, 1, 3) == pytest.approx(dipole_coupling(m, 1, 2) / 8, rel=1e-14)
    assert dipole_coupling(m, 2, 4) == dipole_coupling(m, 4, 2)
    assert dipole_coupling(m, 1, 3) == pytest.approx(dipole_coupling(m, 3, 5), rel=1e-14)


def test_dipole_coupling_rejects_same_molecule():
    with pytest.raises(ValueError):
        dipole_coupling(chain_model(3), 2, 2)


def test_coupling_matrix_depends_only_on_distance():
    v = coupling_matrix(chain_model(6, spacing=2.5))
    np.testing.assert_array_equal(v, v.T)
    for k in range(1, 6):
        np.testing.assert_allclose(np.diag(v, k), np.diag(v, k)[0], rtol=0)
    nn = coupling_matrix(chain_model(6, spacing=2.5, nearest_neighbor_only=True))
    assert np.count_nonzero(nn) == 10
    assert np.count_nonzero(coupling_matrix(chain_model(6, hopping_enabled=False))) == 0


def test_collective_rabi():
    assert collective_rabi([0.5] * 4) == pytest.approx(2.0, rel=1e-15)
    assert collective_rabi([0.0] * 7) == 0.0
    assert uniform_g_for_rabi(1.0, 60)[0] == pytest.approx(1 / (2 * np.sqrt(60)), rel=1e-15)
    assert uniform_g_for_rabi(1.0, 60)[0] == pytest.approx(0.06455, abs=1e-5)
    np.testing.assert_array_equal(uniform_g_for_rabi(2.0, 4), [0.5] * 4)
    np.testing.assert_array_equal(uniform_g_for_rabi(0.0, 9), 0.0)
    with pytest.raises(ValueError):
        uniform_g_for_rabi(-1.0, 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5), st.integers(1, 80))
def test_rabi_round_trip(omega, n):
    assert collective_rabi(uniform_g_for_rabi(omega, n)) == pytest.approx(omega, rel=1e-14, abs=1e-300)


def test_detuning_shift():
    m2 = chain_model(2, spacing=3.0)
    assert detuning_shift(m2) == pytest.approx(dipole_coupling(m2, 1, 2), rel=1e-15)
    assert detuning_shift(chain_model(5, hopping_enabled=False)) == 0.0
    base = chain_model(7, spacing=2.0)
    # all couplings scale by d^2, so the shift does too
    scaled = base.replace(dipole_moment=base.dipole_moment * np.sqrt(3))
    assert detuning_shift(scaled) == pytest.approx(3 * detuning_shift(base), rel=1e-12)
    assert detuning_shift(base.replace(delta=0.0)) == 0.0


def test_zero_detuning_cavity_energy():
    m = chain_model(4, 0.5, spacing=2.0)
    assert m.cavity_energy == pytest.approx(2.11 + detuning_shift(m))
    assert chain_model(4, omega_cavity=2.3).cavity_energy == 2.3


def test_hamiltonian_single_molecule():
    m = chain_model(1, 0.0, omega_molecule=[2.0], omega_cavity=2.11)
    np.testing.assert_array_equal(build_hamiltonian(m), np.diag([0, 2.0, 2.11]))


def test_hamiltonian_matrix_elements():
    m = chain_model(2, 0.4, spacing=3.0)
    h = build_hamiltonian(m)
    g = 0.4 / (2 * np.sqrt(2))
    assert h[1, 2] == pytest.approx(dipole_coupling(m, 1, 2), rel=1e-15)
    assert h[1, 3] == pytest.approx(g) and h[3, 2] == pytest.approx(g)
    assert h[3, 3] == pytest.approx(m.cavity_energy)


def test_hamiltonian_without_cavity_coupling_decouples():
    h = build_hamiltonian(chain_model(5, 1.0, cavity_coupling_enabled=False))
    np.testing.assert_array_equal(h[1:6, 6], 0)
    np.testing.assert_array_equal(h[6, 1:6], 0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 12),
    st.floats(0, 2),
    st.floats(1.0, 20.0),
    st.integers(0, 2**32 - 1),
    st.booleans(),
)
def test_hamiltonian_hermitian(n, omega, spacing, seed, phase):
    energies = sample_disorder(2.11, 0.2, n, fix_ends=False, seed=seed)
    g = uniform_g_for_rabi(omega, n)
    if phase:
        g = g * np.exp(1j * np.random.default_rng(seed).uniform(0, 2 * np.pi, n))
    m = ChainModel(omega_molecule=tuple(energies), g=tuple(g), spacing=spacing)
    assert is_hermitian(build_hamiltonian(m), rtol=1e-14)


def test_model_validation():
    with pytest.raises(ValueError):
        chain_model(3, kappa=-0.1)
    with pytest.raises(ValueError):
        ChainModel(omega_molecule=(2.0, 2.0), g=(0.1,))
    with pytest.raises(ValueError):
        chain_model(3, detector_efficiency=1.5)
    with pytest.raises(ValueError):
        chain_model(3, feedback_target=4)
    with pytest.raises(ValueError):
        chain_model(3, dipole_orientation=(1.0, 1.0, 0.0))
    m = chain_model(3)
    assert m.gamma_d == m.gamma_r + m.gamma_nr


def test_paper_defaults():
    m = chain_model(2)
    assert (m.gamma_r, m.gamma_nr, m.gamma_phi, m.kappa) == (1.32e-6, 1.10e-3, 26.3e-3, 0.1)
    assert m.dipole_moment == 36.0


def test_disorder_zero_width_and_fixed_ends():
    np.testing.assert_array_equal(sample_disorder(2.11, 0.0, 8, seed=3), 2.11)
    for seed in range(20):
        e = sample_disorder(2.11, 0.211, 10, fix_ends=True, seed=seed)
        assert e[0] == 2.11 and e[-1] == 2.11
    np.testing.assert_array_equal(sample_disorder(2.11, 0.2, 6, seed=9), sample_disorder(2.11, 0.2, 6, seed=9))
    with pytest.raises(ValueError):
        sample_disorder(2.11, -0.1, 4)


def test_disorder_sample_mean():
    e = sample_disorder(2.11, 0.211, 100_002, fix_ends=True, seed=12345)[1:-1]
    assert abs(e.mean() - 2.11) < 4 * 0.211 / np.sqrt(e.size)
