"""Exciton conductance and its transport-channel decomposition."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .dynamics import SteadyState, dissipator, model_liouvillian, steady_state
from .hilbert import lowering_op, make_basis
from .model import ChainModel, build_hamiltonian, with_channel


class NumericalInconsistencyError(RuntimeError):
    pass


class Channel(str, enum.Enum):
    FULL = "full"
    WC = "wc"  # cavity coupling removed, hopping only
    NH = "nh"  # hopping removed, cavity only

    @classmethod
    def parse(cls, value) -> "Channel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown channel {value!r}; expected one of full, wc, nh") from None


ALL_CHANNELS = (Channel.FULL, Channel.WC, Channel.NH)

IMAG_TOL = 1e-9
# Positive raw values smaller than this are treated as round-off.
SIGN_TOL = 1e-12


@dataclass(frozen=True)
class ConductanceResult:
    sigma_e: float
    channel: Channel
    raw: float  # signed value before taking the magnitude
    n_molecules: int
    omega_rabi: float
    feedback_lambda: float = 0.0
    detector_efficiency: float = 1.0
    seed: Optional[int] = None


def exciton_conductance(
    h: np.ndarray,
    state: SteadyState,
    gamma_d: float,
    gamma_p: float,
    *,
    channel: Channel = Channel.FULL,
    model: Optional[ChainModel] = None,
    seed: Optional[int] = None,
) -> ConductanceResult:
    """Energy current into the drain on the last molecule per unit pump rate.

    The raw trace ``gamma_d Tr(H L_{sigma_N^-}[rho]) / gamma_p`` is negative
    (the drain removes energy); its magnitude is reported.
    """
    rho = state.rho if isinstance(state, SteadyState) else np.asarray(state)
    n = h.shape[0] - 2
    s = lowering_op(make_basis(n), n)
    value = gamma_d * np.trace(h @ dissipator(s, rho)) / gamma_p
    # absolute floor for points where the current itself is round-off
    if abs(value.imag) > max(IMAG_TOL * abs(value.real), SIGN_TOL):
        raise NumericalInconsistencyError(f"conductance has imaginary part {value.imag:.3e}")
    raw = float(value.real)
    if raw > SIGN_TOL:
        raise NumericalInconsistencyError(
            f"conductance trace is positive ({raw:.3e}); energy flows into the chain at the drain"
        )
    return ConductanceResult(
        sigma_e=abs(raw),
        channel=Channel.parse(channel),
        raw=raw,
        n_molecules=n,
        omega_rabi=model.omega_rabi if model is not None else float("nan"),
        feedback_lambda=model.feedback_lambda if model is not None and model.has_feedback else 0.0,
        detector_efficiency=model.detector_efficiency if model is not None else 1.0,
        seed=seed,
    )


def channel_conductance(
    model: ChainModel,
    channel=Channel.FULL,
    *,
    seed: Optional[int] = None,
    audit: bool = False,
) -> ConductanceResult:
    """Conductance of one channel.

    The steady state comes from the channel's own model; the energy is
    weighed with the Hamiltonian of ``model`` as configured.
    """
    channel = Channel.parse(channel)
    variant = with_channel(model, channel.value)
    state = steady_state(model_liouvillian(variant), audit=audit)
    h_full = build_hamiltonian(model)
    result = exciton_conductance(h_full, state, model.gamma_d, model.gamma_p, channel=channel, model=model, seed=seed)
    return result


def channel_conductances(
    model: ChainModel,
    modes: Iterable = ALL_CHANNELS,
    *,
    seed: Optional[int] = None,
) -> list[ConductanceResult]:
    return [channel_conductance(model, mode, seed=seed) for mode in modes]


def conductance(model: ChainModel) -> float:
    return channel_conductance(model).sigma_e
