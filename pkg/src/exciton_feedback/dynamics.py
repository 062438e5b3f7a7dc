"""Lindblad generators, jump feedback and steady states.

Vectorization is column stacking throughout: ``vec(A X B) = (B^T kron A) vec(X)``,
i.e. ``vec(X) = X.reshape(-1, order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from .hilbert import (
    ExcitationBasis,
    adjoint,
    cavity_annihilation,
    excitation_number,
    identity,
    is_hermitian,
    lowering_op,
    matrix_exponential,
    raising_op,
)
from .model import ChainModel, build_hamiltonian


class SolverError(RuntimeError):
    pass


class DegenerateSteadyStateError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class JumpChannel(NamedTuple):
    rate: float
    operator: np.ndarray


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: Optional[int] = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(dim, dim, order="F")


def dissipator(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``s rho s^dag - {s^dag s, rho}/2``."""
    if s.shape != rho.shape or s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"dimension mismatch: operator {s.shape}, state {rho.shape}")
    sd = adjoint(s)
    sds = sd @ s
    return s @ rho @ sd - 0.5 * (sds @ rho + rho @ sds)


def apply_liouvillian(h: np.ndarray, channels: Sequence[JumpChannel], rho: np.ndarray) -> np.ndarray:
    """Operator-level right-hand side of the master equation (no vectorization)."""
    out = -1j * (h @ rho - rho @ h)
    for rate, s in channels:
        out = out + rate * dissipator(s, rho)
    return out


def add_jump_term(out: np.ndarray, rate: float, s: np.ndarray) -> None:
    """Accumulate ``rate * conj(s) kron s`` into ``out`` in place.

    Only the nonzero entries of ``s`` are visited; jump operators here have
    one or two of them.
    """
    dim = s.shape[0]
    rows, cols = np.nonzero(s)
    vals = s[rows, cols]
    view = out.reshape(dim, dim, dim, dim)  # [i, k, j, l] <-> row i*dim+k, col j*dim+l
    for i, j, a in zip(rows, cols, np.conj(vals)):
        view[i, rows, j, cols] += rate * a * vals


def dissipator_superop(rate: float, s: np.ndarray, out: np.ndarray, h_eff: np.ndarray) -> None:
    """Add ``rate * L_s`` to a superoperator under construction.

    The jump part goes into ``out`` directly; the anticommutator part is
    folded into the effective non-Hermitian Hamiltonian ``h_eff``.
    """
    add_jump_term(out, rate, s)
    h_eff -= 0.5j * rate * (adjoint(s) @ s)


def build_liouvillian(h: np.ndarray, channels: Sequence[JumpChannel]) -> np.ndarray:
    """Dense generator acting on column-stacked density matrices.

    Zero-rate channels are skipped so that equal channel lists yield
    bitwise-identical matrices.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("Hamiltonian is not Hermitian")
    dim = h.shape[0]
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    h_eff = h.copy()
    for rate, s in channels:
        if rate < 0:
            raise ValueError(f"negative channel rate {rate}")
        if s.shape != h.shape:
            raise ValueError(f"jump operator shape {s.shape} does not match Hamiltonian {h.shape}")
        if rate == 0:
            continue
        dissipator_superop(rate, s, out, h_eff)
    eye = np.eye(dim)
    # -i H_eff rho + i rho H_eff^dag
    out += -1j * np.kron(eye, h_eff)
    out += 1j * np.kron(np.conj(h_eff), eye)
    return out


def standard_channels(model: ChainModel, cavity: Optional[Sequence[JumpChannel]] = None) -> list[JumpChannel]:
    """Decay, dephasing, cavity loss and pump channels in a fixed order.

    ``cavity`` replaces the bare ``kappa L_a`` term (used by feedback).
    """
    basis = model.basis
    n = model.n_molecules
    channels = [JumpChannel(model.gamma_d, lowering_op(basis, m)) for m in range(1, n + 1)]
    channels += [JumpChannel(model.gamma_phi, excitation_number(basis, m)) for m in range(1, n + 1)]
    if cavity is None:
        channels.append(JumpChannel(model.kappa, cavity_annihilation(basis)))
    else:
        channels.extend(cavity)
    channels.append(JumpChannel(model.gamma_p, raising_op(basis, 1)))
    return channels


def feedback_unitary(basis: ExcitationBasis, target: int, lam: float) -> np.ndarray:
    """``exp(-i lam pi sigma_target^x)`` with sigma^x projected first.

    Rotation by ``lam * pi`` in the ``{|G,0>, |e_target,0>}`` block, identity
    elsewhere.
    """
    k = basis.molecule(target)
    theta = lam * np.pi
    u = identity(basis)
    c, s = np.cos(theta), np.sin(theta)
    u[0, 0] = c
    u[k, k] = c
    u[0, k] = -1j * s
    u[k, 0] = -1j * s
    return u


def feedback_channels(model: ChainModel, target: int, lam: float, eta: float) -> list[JumpChannel]:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"detector efficiency must lie in [0, 1], got {eta}")
    if lam < 0:
        raise ValueError(f"feedback amplitude must be >= 0, got {lam}")
    basis = model.basis
    a = cavity_annihilation(basis)
    dressed = feedback_unitary(basis, target, lam) @ a
    return [JumpChannel(model.kappa * eta, dressed), JumpChannel(model.kappa * (1.0 - eta), a)]


def build_feedback_liouvillian(h, model: ChainModel, target: int, lam: float, eta: float) -> np.ndarray:
    """Generator with a fraction ``eta`` of cavity jumps followed by the feedback kick."""
    return build_liouvillian(h, standard_channels(model, cavity=feedback_channels(model, target, lam, eta)))


def model_liouvillian(model: ChainModel, h: Optional[np.ndarray] = None) -> np.ndarray:
    """Generator for ``model``, with feedback when it is configured."""
    if h is None:
        h = build_hamiltonian(model)
    if model.has_feedback:
        return build_feedback_liouvillian(
            h, model, model.target, model.feedback_lambda, model.detector_efficiency
        )
    return build_liouvillian(h, standard_channels(model))


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual_norm: float
    min_eigenvalue: float
    nullity_flag: Optional[bool] = None  # None when the audit was not run
    gap_ratio: Optional[float] = None


RESIDUAL_TOL = 1e-10
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = -1e-10
UNIQUENESS_TOL = 1e-8


def uniqueness_audit(liouvillian: np.ndarray) -> tuple[bool, float]:
    """Second-smallest over largest singular value of the generator."""
    sv = scipy.linalg.svdvals(liouvillian)
    ratio = float(sv[-2] / sv[0]) if sv.size > 1 else 1.0
    return ratio > UNIQUENESS_TOL, ratio


def steady_state(liouvillian: np.ndarray, audit: bool = False) -> SteadyState:
    """Trace-one null vector of the generator.

    One row (the ``|0><0|`` population equation) is replaced by the trace
    functional and the resulting system solved directly.  ``audit=True``
    also checks that the null space is one-dimensional.
    """
    size = liouvillian.shape[0]
    dim = int(round(np.sqrt(size)))
    if dim * dim != size or liouvillian.shape != (size, size):
        raise ValueError(f"not a superoperator shape: {liouvillian.shape}")
    trace_row = vec(np.eye(dim))
    a = liouvillian.copy()
    a[0, :] = trace_row
    b = np.zeros(size, dtype=complex)
    b[0] = 1.0
    nullity_ok = gap = None
    if audit:
        nullity_ok, gap = uniqueness_audit(liouvillian)
        if not nullity_ok:
            raise DegenerateSteadyStateError(f"generator null space is not one-dimensional (gap ratio {gap:.3e})")
    try:
        x = scipy.linalg.solve(a, b, overwrite_a=True, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise DegenerateSteadyStateError(f"trace-constrained system is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("trace-constrained system is singular")
    rho = unvec(x, dim)
    residual = float(np.linalg.norm(liouvillian @ x))
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"steady-state residual {residual:.3e} above {RESIDUAL_TOL}")
    herm_err = float(np.max(np.abs(rho - adjoint(rho))))
    if herm_err > HERMITIAN_TOL:
        raise ConvergenceError(f"steady state not Hermitian (error {herm_err:.3e})")
    rho = 0.5 * (rho + adjoint(rho))
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < POSITIVITY_TOL:
        raise ConvergenceError(f"steady state has eigenvalue {min_eig:.3e}")
    return SteadyState(rho, residual, min_eig, nullity_ok, gap)


def propagate(liouvillian: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    """``exp(L t) vec(rho0)`` via the dense superoperator exponential."""
    if t == 0:
        return np.array(rho0, dtype=complex)
    dim = rho0.shape[0]
    v = matrix_exponential(liouvillian, t) @ vec(np.asarray(rho0, dtype=complex))
    return unvec(v, dim)
