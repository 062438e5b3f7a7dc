"""Steady-state exciton conductance of a molecular chain in a lossy cavity,
with optional quantum-jump feedback."""

from .dynamics import (
    ConvergenceError,
    DegenerateSteadyStateError,
    JumpChannel,
    SolverError,
    SteadyState,
    build_feedback_liouvillian,
    build_liouvillian,
    dissipator,
    feedback_unitary,
    model_liouvillian,
    propagate,
    standard_channels,
    steady_state,
)
from .hilbert import ExcitationBasis, make_basis
from .model import ChainModel, build_hamiltonian, chain_model, collective_rabi, uniform_g_for_rabi
from .observables import Channel, ConductanceResult, channel_conductance, channel_conductances, exciton_conductance

__version__ = "0.1.0"
