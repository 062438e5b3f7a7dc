"""Built-in numerical self-checks, run by ``exciton-feedback verify``.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all
and :func:`format_table` renders the summary printed by the CLI.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynamics import (
    HERMITIAN_TOL,
    JumpChannel,
    build_feedback_liouvillian,
    build_liouvillian,
    feedback_channels,
    feedback_unitary,
    propagate,
    standard_channels,
    steady_state,
    unvec,
    vec,
)
from .experiments import ChainSettings, SweepSpec, run_sweep
from .hilbert import cavity_annihilation, excitation_number, lowering_op, make_basis, raising_op
from .model import ChainModel, build_hamiltonian, chain_model
from .observables import ALL_CHANNELS, channel_conductance

ORACLE_TOL = 1e-8
TRACE_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass(frozen=True)
class OracleCase:
    """A small, fast-relaxing configuration for the steady-state oracle."""

    n: int
    omega_rabi: float
    decay: bool = True
    dephasing: bool = True
    cavity: bool = True
    pump: bool = True
    hopping: bool = True
    feedback_lambda: float = 0.0
    efficiency: float = 1.0
    target: Optional[int] = None

    def model(self) -> ChainModel:
        return chain_model(
            self.n,
            self.omega_rabi,
            spacing=2.0,
            gamma_r=0.05,
            gamma_nr=0.05,
            gamma_phi=0.2,
            kappa=0.3,
            gamma_p=0.05,
            hopping_enabled=self.hopping,
        )

    def channels(self, model: ChainModel) -> list:
        basis = model.basis
        ms = range(1, model.n_molecules + 1)
        out = []
        if self.decay:
            out += [JumpChannel(model.gamma_d, lowering_op(basis, m)) for m in ms]
        if self.dephasing:
            out += [JumpChannel(model.gamma_phi, excitation_number(basis, m)) for m in ms]
        if self.cavity:
            if self.feedback_lambda:
                target = self.target or model.n_molecules
                out += feedback_channels(model, target, self.feedback_lambda, self.efficiency)
            else:
                out.append(JumpChannel(model.kappa, cavity_annihilation(basis)))
        if self.pump:
            out.append(JumpChannel(model.gamma_p, raising_op(basis, 1)))
        return out

    def liouvillian(self) -> tuple:
        """The generator and the smallest nonzero rate among its channels."""
        model = self.model()
        channels = self.channels(model)
        rates = [c.rate for c in channels if c.rate > 0]
        return build_liouvillian(build_hamiltonian(model), channels), min(rates)


ORACLE_CASES = (
    OracleCase(1, 0.0),
    OracleCase(1, 0.3, dephasing=False),
    OracleCase(1, 0.3, feedback_lambda=0.3),
    OracleCase(1, 0.2, pump=False),
    OracleCase(2, 0.2, dephasing=False),
    OracleCase(2, 0.3),
    OracleCase(2, 0.3, decay=False),
    OracleCase(2, 0.3, feedback_lambda=0.5),
    OracleCase(3, 0.0),
    OracleCase(3, 0.3),
    OracleCase(3, 0.3, dephasing=False, feedback_lambda=0.25, efficiency=0.6, target=2),
    OracleCase(3, 0.3, hopping=False, feedback_lambda=0.5),
)


def _sample_models() -> list:
    base = chain_model(3, 0.5)
    return [
        base,
        chain_model(4, 1.0, nearest_neighbor_only=True),
        base.replace(feedback_target=2, feedback_lambda=0.4, detector_efficiency=0.7),
        ORACLE_CASES[7].model(),
    ]


def _liouvillians() -> list:
    out = []
    for m in _sample_models():
        h = build_hamiltonian(m)
        if m.has_feedback:
            out.append(build_feedback_liouvillian(h, m, m.target, m.feedback_lambda, m.detector_efficiency))
        else:
            out.append(build_liouvillian(h, standard_channels(m)))
    out += [case.liouvillian()[0] for case in ORACLE_CASES]
    return out


def check_trace_preservation() -> tuple:
    worst = 0.0
    for L in _liouvillians():
        dim = int(round(np.sqrt(L.shape[0])))
        row = vec(np.eye(dim)).conj() @ L
        worst = max(worst, np.max(np.abs(row)) / np.max(np.abs(L)))
    return worst <= TRACE_TOL, f"max |Tr L[.]| / |L| = {worst:.2e}"


def check_hermiticity_preservation(samples: int = 100, seed: int = 1) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for L in _liouvillians()[:4]:
        dim = int(round(np.sqrt(L.shape[0])))
        for _ in range(samples // 4):
            x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            rho = x @ x.conj().T
            rho /= np.trace(rho)
            out = unvec(L @ vec(rho))
            worst = max(worst, np.max(np.abs(out - out.conj().T)) / max(np.max(np.abs(out)), 1e-300))
    return worst <= HERMITIAN_TOL, f"max anti-Hermitian part = {worst:.2e}"


def check_positivity() -> tuple:
    worst = np.inf
    trace_err = 0.0
    for L in _liouvillians():
        ss = steady_state(L)
        worst = min(worst, ss.min_eigenvalue)
        trace_err = max(trace_err, abs(np.trace(ss.rho) - 1))
    ok = worst >= -1e-10 and trace_err <= 1e-12
    return ok, f"min eigenvalue {worst:.2e}, trace error {trace_err:.1e}"


def check_unitarity() -> tuple:
    worst = 0.0
    for n in (1, 3, 8):
        b = make_basis(n)
        for lam in np.linspace(0, 2, 9):
            for target in (1, n):
                u = feedback_unitary(b, target, lam)
                worst = max(worst, np.max(np.abs(u.conj().T @ u - np.eye(b.dim))))
    return worst <= 1e-14, f"max |U^dag U - I| = {worst:.1e}"


def check_efficiency_affine() -> tuple:
    m = chain_model(3, 0.5)
    h = build_hamiltonian(m)
    l0 = build_feedback_liouvillian(h, m, 3, 0.5, 0.0)
    l1 = build_feedback_liouvillian(h, m, 3, 0.5, 1.0)
    worst = 0.0
    for eta in np.linspace(0, 1, 11):
        le = build_feedback_liouvillian(h, m, 3, 0.5, eta)
        worst = max(worst, np.max(np.abs(le - ((1 - eta) * l0 + eta * l1))))
    return worst <= 1e-15, f"max deviation from affine = {worst:.1e}"


def check_feedback_reductions() -> tuple:
    m = chain_model(4, 0.7)
    h = build_hamiltonian(m)
    bare = build_liouvillian(h, standard_channels(m))
    same_eta0 = np.array_equal(build_feedback_liouvillian(h, m, 4, 0.6, 0.0), bare)
    lam0 = np.max(np.abs(build_feedback_liouvillian(h, m, 4, 0.0, 0.8) - bare))
    lam1 = np.max(np.abs(build_feedback_liouvillian(h, m, 2, 1.0, 0.8) - bare))
    ok = same_eta0 and lam0 <= 1e-14 and lam1 <= 1e-14
    return ok, f"eta=0 identical: {same_eta0}; lambda=0 diff {lam0:.1e}; lambda=1 diff {lam1:.1e}"


def check_oracle() -> tuple:
    worst = 0.0
    for case in ORACLE_CASES:
        L, rate = case.liouvillian()
        dim = int(round(np.sqrt(L.shape[0])))
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0
        late = propagate(L, rho0, 100.0 / rate)
        worst = max(worst, np.max(np.abs(late - steady_state(L, audit=True).rho)))
    return worst <= ORACLE_TOL, f"{len(ORACLE_CASES)} cases, max |rho(t) - rho_ss| = {worst:.1e}"


def check_pump_linearity() -> tuple:
    # sigma_e is normalised by gamma_p, so it is pump-independent in linear response
    worst = 0.0
    for omega in (0.0, 1.0):
        m = chain_model(6, omega)
        for c in ALL_CHANNELS:
            a = channel_conductance(m, c).sigma_e
            b = channel_conductance(m.replace(gamma_p=m.gamma_p / 10), c).sigma_e
            if a > 0:
                worst = max(worst, abs(b / a - 1))
    return worst <= 1e-2, f"max relative change of sigma_e when the pump drops 10x = {worst:.1e}"


def check_sweep_determinism() -> tuple:
    spec = SweepSpec(ChainSettings(n_molecules=4, disorder_q=0.1), "omega_rabi", (0.0, 0.5), ensemble=4, seed=11)
    a = run_sweep(spec)
    b = run_sweep(spec)
    same = [r.mean for r in a.rows] == [r.mean for r in b.rows]
    other = run_sweep(SweepSpec(spec.base, spec.parameter, spec.grid, ensemble=4, seed=12))
    differs = [r.mean for r in a.rows] != [r.mean for r in other.rows]
    return same and differs, f"same seed identical: {same}; new seed differs: {differs}"


def check_two_level_balance() -> tuple:
    m = chain_model(1, 0.0, gamma_r=0.01, gamma_nr=0.02, gamma_p=0.05)
    rho = steady_state(build_liouvillian(build_hamiltonian(m), standard_channels(m))).rho
    expected = m.gamma_p / (m.gamma_p + m.gamma_d)
    err = abs(rho[1, 1].real - expected)
    return err <= 1e-10, f"excited population error {err:.1e}"


CHECKS: dict = {
    "trace preservation": check_trace_preservation,
    "Hermiticity preservation": check_hermiticity_preservation,
    "steady-state positivity": check_positivity,
    "feedback unitarity": check_unitarity,
    "efficiency affinity": check_efficiency_affine,
    "feedback reductions": check_feedback_reductions,
    "steady state vs propagation": check_oracle,
    "linearity in pump rate": check_pump_linearity,
    "seeded sweep determinism": check_sweep_determinism,
    "two-level rate balance": check_two_level_balance,
}


def run_checks(checks: Optional[dict] = None) -> list:
    results = []
    for name, fn in (checks or CHECKS).items():
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return results


def format_table(results: list) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL'}    {r.seconds:5.2f}s  {r.detail}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
