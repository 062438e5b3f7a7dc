import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exciton_feedback.dynamics import (
    DegenerateSteadyStateError,
    JumpChannel,
    apply_liouvillian,
    build_feedback_liouvillian,
    build_liouvillian,
    dissipator,
    feedback_unitary,
    model_liouvillian,
    propagate,
    standard_channels,
    steady_state,
    unvec,
    vec,
)
from exciton_feedback.hilbert import adjoint, cavity_annihilation, make_basis, raising_op, lowering_op
from exciton_feedback.model import build_hamiltonian, chain_model


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ adjoint(a)
    return rho / np.trace(rho)


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + adjoint(a)


def small_model(n=3, omega=0.8, **kw):
    kw.setdefault("spacing", 2.0)
    return chain_model(n, omega, **kw)


def test_vec_is_column_stacking():
    x = np.arange(4).reshape(2, 2)
    np.testing.assert_array_equal(vec(x), [0, 2, 1, 3])
    np.testing.assert_array_equal(unvec(vec(x)), x)


def test_dissipator_identity_vanishes():
    rng = np.random.default_rng(0)
    rho = random_density(4, rng)
    np.testing.assert_allclose(dissipator(np.eye(4), rho), 0, atol=1e-15)


def test_dissipator_two_level_decay():
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    excited = np.diag([0, 1]).astype(complex)
    np.testing.assert_array_equal(dissipator(sm, excited), np.diag([1, -1]))


def test_dissipator_dimension_mismatch():
    with pytest.raises(ValueError):
        dissipator(np.eye(3), np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dissipator_traceless(seed):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert abs(np.trace(dissipator(s, random_density(5, rng)))) < 1e-12


def test_empty_liouvillian_is_zero():
    l = build_liouvillian(np.zeros((3, 3)), [])
    assert l.shape == (9, 9)
    np.testing.assert_array_equal(l, 0)


def test_liouvillian_shape():
    m = small_model(4)
    assert model_liouvillian(m).shape == (36, 36)


def test_liouvillian_rejects_non_hermitian():
    with pytest.raises(ValueError):
        build_liouvillian(np.array([[0, 1], [0, 0]], dtype=complex), [])


@pytest.mark.parametrize("feedback", [False, True])
def test_liouvillian_matches_operator_level(feedback):
    rng = np.random.default_rng(5)
    m = small_model(3, feedback_lambda=0.3 if feedback else 0.0, detector_efficiency=0.6)
    h = build_hamiltonian(m)
    from exciton_feedback.dynamics import feedback_channels

    channels = standard_channels(m, cavity=feedback_channels(m, m.target, 0.3, 0.6) if feedback else None)
    l = build_liouvillian(h, channels)
    for _ in range(5):
        rho = random_density(5, rng)
        np.testing.assert_allclose(unvec(l @ vec(rho)), apply_liouvillian(h, channels, rho), atol=1e-12)


def _trace_preservation_error(l):
    dim = int(round(np.sqrt(l.shape[0])))
    return np.max(np.abs(vec(np.eye(dim)).conj() @ l))


@pytest.mark.parametrize(
    "kw",
    [
        {},
        {"feedback_lambda": 0.5},
        {"feedback_lambda": 0.27, "detector_efficiency": 0.4, "feedback_target": 1},
        {"hopping_enabled": False},
        {"cavity_coupling_enabled": False},
    ],
)
def test_trace_and_hermiticity_preservation(kw):
    l = model_liouvillian(small_model(3, **kw))
    assert _trace_preservation_error(l) < 1e-12
    rng = np.random.default_rng(11)
    for _ in range(100):
        out = unvec(l @ vec(random_hermitian(5, rng)))
        assert np.max(np.abs(out - adjoint(out))) < 1e-12


def test_phase_covariance_of_jump_operator():
    m = small_model(2)
    h = build_hamiltonian(m)
    base = build_liouvillian(h, standard_channels(m))
    a = cavity_annihilation(m.basis)
    for phi in (0.3, 1.7, np.pi):
        l = build_liouvillian(h, standard_channels(m, cavity=[JumpChannel(m.kappa, np.exp(1j * phi) * a)]))
        np.testing.assert_allclose(l, base, atol=1e-14, rtol=0)


def test_feedback_unitary_special_values():
    b = make_basis(4)
    np.testing.assert_array_equal(feedback_unitary(b, 4, 0.0), np.eye(6))
    u = feedback_unitary(b, 4, 0.5)
    np.testing.assert_allclose(u[np.ix_([0, 4], [0, 4])], [[0, -1j], [-1j, 0]], atol=1e-15)
    np.testing.assert_array_equal(u[np.ix_([1, 2, 3, 5], [1, 2, 3, 5])], np.eye(4))
    u1 = feedback_unitary(b, 2, 1.0)
    np.testing.assert_allclose(u1[np.ix_([0, 2], [0, 2])], -np.eye(2), atol=1e-15)
    with pytest.raises(ValueError):
        feedback_unitary(b, 5, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.floats(0, 3))
def test_feedback_unitary_is_unitary_and_exponential(n, lam):
    b = make_basis(n)
    u = feedback_unitary(b, n, lam)
    np.testing.assert_allclose(adjoint(u) @ u, np.eye(b.dim), atol=1e-14)
    from exciton_feedback.hilbert import matrix_exponential, sigma_x

    np.testing.assert_allclose(u, matrix_exponential(sigma_x(b, n), -1j * np.pi * lam), atol=1e-12)


def test_feedback_at_full_turn_matches_bare_cavity():
    m = small_model(3)
    h = build_hamiltonian(m)
    bare = build_liouvillian(h, standard_channels(m))
    l1 = build_feedback_liouvillian(h, m, 3, 1.0, 1.0)
    np.testing.assert_allclose(l1, bare, atol=1e-14, rtol=0)


def test_feedback_eta_zero_is_bitwise_plain():
    m = small_model(3)
    h = build_hamiltonian(m)
    bare = build_liouvillian(h, standard_channels(m))
    assert np.array_equal(build_feedback_liouvillian(h, m, 3, 0.5, 0.0), bare)
    np.testing.assert_allclose(build_feedback_liouvillian(h, m, 3, 0.0, 0.7), bare, atol=1e-14, rtol=0)


def test_feedback_rejects_bad_efficiency():
    m = small_model(2)
    with pytest.raises(ValueError):
        build_feedback_liouvillian(build_hamiltonian(m), m, 2, 0.5, 1.2)


@pytest.mark.parametrize("eta", [0.1, 0.37, 0.5, 0.9])
def test_feedback_affine_in_eta(eta):
    m = small_model(3)
    h = build_hamiltonian(m)
    l0 = build_feedback_liouvillian(h, m, 3, 0.4, 0.0)
    l1 = build_feedback_liouvillian(h, m, 3, 0.4, 1.0)
    le = build_feedback_liouvillian(h, m, 3, 0.4, eta)
    np.testing.assert_allclose(le, (1 - eta) * l0 + eta * l1, atol=1e-15, rtol=0)


def pump_decay_generator(gamma_p, gamma_d):
    m = chain_model(1, 0.0, gamma_p=gamma_p, gamma_nr=gamma_d - 1.32e-6)
    b = m.basis
    channels = [
        JumpChannel(m.gamma_d, lowering_op(b, 1)),
        JumpChannel(m.kappa, cavity_annihilation(b)),
        JumpChannel(m.gamma_p, raising_op(b, 1)),
    ]
    return m, build_liouvillian(build_hamiltonian(m), channels)


@pytest.mark.parametrize("gamma_p, gamma_d", [(1e-6, 1.10132e-3), (0.3, 0.7), (2.0, 0.5)])
def test_two_level_rate_balance(gamma_p, gamma_d):
    m, l = pump_decay_generator(gamma_p, gamma_d)
    ss = steady_state(l, audit=True)
    assert ss.rho[1, 1].real == pytest.approx(m.gamma_p / (m.gamma_p + m.gamma_d), rel=1e-10)
    off = ss.rho - np.diag(np.diag(ss.rho))
    assert np.max(np.abs(off)) < 1e-15
    assert ss.nullity_flag


def test_steady_state_invariants_default_model():
    ss = steady_state(model_liouvillian(chain_model(6, 0.7)), audit=True)
    assert np.trace(ss.rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(ss.rho - adjoint(ss.rho))) < 1e-12
    assert ss.min_eigenvalue >= -1e-10
    assert ss.residual_norm <= 1e-10
    assert ss.nullity_flag and ss.gap_ratio > 1e-8


def test_degenerate_steady_state_detected():
    # cavity decoupled and lossless: the photon population is conserved
    m = chain_model(2, 0.0, spacing=2.0)
    b = m.basis
    channels = [JumpChannel(m.gamma_d, lowering_op(b, k)) for k in (1, 2)] + [JumpChannel(m.gamma_p, raising_op(b, 1))]
    l = build_liouvillian(build_hamiltonian(m), channels)
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(l, audit=True)


def test_propagate_basics():
    m = small_model(2)
    l = model_liouvillian(m.replace(gamma_p=0.05))
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1
    np.testing.assert_array_equal(propagate(l, rho0, 0.0), rho0)
    for t in (0.5, 10.0, 300.0):
        assert np.trace(propagate(l, rho0, t)).real == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("gamma, t", [(0.1, 3.0), (1.0, 2.5), (0.02, 80.0)])
def test_propagate_pure_decay(gamma, t):
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    l = build_liouvillian(np.zeros((2, 2)), [JumpChannel(gamma, sm)])
    out = propagate(l, np.diag([0, 1]).astype(complex), t)
    assert out[1, 1].real == pytest.approx(np.exp(-gamma * t), rel=1e-12)


def test_steady_state_agrees_with_long_time_propagation():
    m = chain_model(2, 0.6, spacing=2.0, gamma_p=0.04, gamma_nr=0.05, feedback_lambda=0.3)
    l = model_liouvillian(m)
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1
    t = 100 / min(m.gamma_p, m.gamma_d, m.gamma_phi, m.kappa)
    np.testing.assert_allclose(propagate(l, rho0, t), steady_state(l).rho, atol=1e-8)
