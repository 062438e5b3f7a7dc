"""Chain parameters and Hamiltonian assembly.

Units: hbar = 1, every energy and rate in eV.  Geometry: molecule ``m`` sits
at ``(m - 1) * spacing`` on the x axis; all transition dipoles share one
orientation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.constants
import scipy.linalg

from .hilbert import ExcitationBasis, make_basis

DEBYE = 3.33564e-30  # C m

OMEGA_CAVITY = 2.11
GAMMA_R = 1.32e-6
GAMMA_NR = 1.10e-3
GAMMA_PHI = 26.3e-3
KAPPA = 0.1
GAMMA_P = 1e-6
DIPOLE_MOMENT = 36.0
SPACING = 3.4
PERPENDICULAR = (0.0, 0.0, 1.0)
PARALLEL = (1.0, 0.0, 0.0)
DISORDER_MEAN = 2.11
DISORDER_STD = 0.211


def _check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def _check_nonnegative(name, value):
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a non-negative finite number, got {value!r}")


@dataclass(frozen=True)
class ChainModel:
    """Concrete parameters of one chain + cavity configuration.

    ``omega_cavity=None`` selects the zero-detuning rule: the cavity sits at
    ``site_energy + detuning_shift(model)``, recomputed whenever hopping or
    geometry changes.  ``delta`` overrides the computed shift.
    """

    omega_molecule: tuple
    g: tuple
    omega_cavity: Optional[float] = None
    site_energy: float = DISORDER_MEAN
    delta: Optional[float] = None
    spacing: float = SPACING  # nm
    dipole_moment: float = DIPOLE_MOMENT  # Debye
    dipole_orientation: tuple = PERPENDICULAR
    gamma_r: float = GAMMA_R
    gamma_nr: float = GAMMA_NR
    gamma_phi: float = GAMMA_PHI
    kappa: float = KAPPA
    gamma_p: float = GAMMA_P
    hopping_enabled: bool = True
    cavity_coupling_enabled: bool = True
    nearest_neighbor_only: bool = False
    feedback_target: Optional[int] = None
    feedback_lambda: float = 0.0
    detector_efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega_molecule", tuple(float(w) for w in self.omega_molecule))
        object.__setattr__(self, "g", tuple(complex(x) if np.iscomplexobj(x) else float(x) for x in self.g))
        n = len(self.omega_molecule)
        if n < 1:
            raise ValueError("chain needs at least one molecule")
        if len(self.g) != n:
            raise ValueError(f"g has {len(self.g)} entries for {n} molecules")
        for w in self.omega_molecule:
            _check_positive("omega_molecule", w)
        if self.omega_cavity is not None:
            _check_positive("omega_cavity", self.omega_cavity)
        _check_positive("site_energy", self.site_energy)
        for name in ("spacing", "dipole_moment", "gamma_r", "gamma_nr", "gamma_phi", "kappa", "gamma_p"):
            _check_positive(name, getattr(self, name))
        u = np.asarray(self.dipole_orientation, dtype=float)
        if u.shape != (3,) or not np.isclose(np.linalg.norm(u), 1.0, atol=1e-12):
            raise ValueError(f"dipole_orientation must be a 3-component unit vector, got {self.dipole_orientation}")
        object.__setattr__(self, "dipole_orientation", tuple(float(x) for x in u))
        if self.feedback_target is not None and not 1 <= self.feedback_target <= n:
            raise ValueError(f"feedback_target {self.feedback_target} outside 1..{n}")
        _check_nonnegative("feedback_lambda", self.feedback_lambda)
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError(f"detector_efficiency must lie in [0, 1], got {self.detector_efficiency}")

    @property
    def n_molecules(self) -> int:
        return len(self.omega_molecule)

    @property
    def gamma_d(self) -> float:
        return self.gamma_r + self.gamma_nr

    @property
    def basis(self) -> ExcitationBasis:
        return make_basis(self.n_molecules)

    @property
    def target(self) -> int:
        """Molecule the feedback acts on; the last one unless set."""
        return self.n_molecules if self.feedback_target is None else self.feedback_target

    @property
    def cavity_energy(self) -> float:
        if self.omega_cavity is not None:
            return self.omega_cavity
        return self.site_energy + detuning_shift(self)

    @property
    def omega_rabi(self) -> float:
        return collective_rabi(self.g) if self.cavity_coupling_enabled else 0.0

    @property
    def has_feedback(self) -> bool:
        return self.feedback_lambda != 0.0 and self.detector_efficiency > 0.0

    def replace(self, **changes) -> "ChainModel":
        return dataclasses.replace(self, **changes)


def chain_model(
    n_molecules: int,
    omega_rabi: float = 0.0,
    *,
    omega_molecule: Optional[Sequence[float]] = None,
    site_energy: float = DISORDER_MEAN,
    **params,
) -> ChainModel:
    """Regular chain with uniform cavity couplings giving ``omega_rabi``."""
    make_basis(n_molecules)
    if omega_molecule is None:
        omega_molecule = [site_energy] * n_molecules
    return ChainModel(
        omega_molecule=tuple(omega_molecule),
        g=tuple(uniform_g_for_rabi(omega_rabi, n_molecules)),
        site_energy=site_energy,
        **params,
    )


def _dipole_coupling_distance(model: ChainModel, distance_nm: float) -> float:
    d = model.dipole_moment * DEBYE
    u = np.asarray(model.dipole_orientation)
    r_hat = np.array([1.0, 0.0, 0.0])
    r = distance_nm * 1e-9
    angular = float(u @ u) - 3.0 * float(u @ r_hat) ** 2
    joules = d * d * angular / (4.0 * np.pi * scipy.constants.epsilon_0 * r**3)
    return joules / scipy.constants.e


def dipole_coupling(model: ChainModel, m: int, n: int) -> float:
    """Quasistatic dipole-dipole energy between molecules ``m`` and ``n`` in eV."""
    basis = model.basis
    basis.molecule(m)
    basis.molecule(n)
    if m == n:
        raise ValueError("dipole coupling needs two distinct molecules")
    return _dipole_coupling_distance(model, abs(m - n) * model.spacing)


def coupling_matrix(model: ChainModel) -> np.ndarray:
    """N x N matrix of hopping energies, zero diagonal.

    Respects ``hopping_enabled`` and ``nearest_neighbor_only``.
    """
    n = model.n_molecules
    column = np.zeros(n)
    if model.hopping_enabled:
        reach = min(n, 2) if model.nearest_neighbor_only else n
        for k in range(1, reach):
            column[k] = _dipole_coupling_distance(model, k * model.spacing)
    return scipy.linalg.toeplitz(column)


def collective_rabi(g: Sequence[complex]) -> float:
    mags = np.abs(np.asarray(g, dtype=complex))
    scale = float(mags.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return 2.0 * scale * float(np.sqrt(np.sum((mags / scale) ** 2)))


def uniform_g_for_rabi(omega_rabi: float, n_molecules: int) -> np.ndarray:
    if omega_rabi < 0:
        raise ValueError(f"omega_rabi must be >= 0, got {omega_rabi}")
    return np.full(n_molecules, omega_rabi / (2.0 * np.sqrt(n_molecules)))


def detuning_shift(model: ChainModel) -> float:
    """Energy shift of the symmetric (bright) exciton from hopping.

    Equals ``<B|V|B>`` with ``|B> = sum_m |e_m> / sqrt(N)``, i.e. the mean of
    all off-diagonal coupling entries times ``N - 1``.
    """
    if model.delta is not None:
        return float(model.delta)
    if not model.hopping_enabled:
        return 0.0
    return float(coupling_matrix(model).sum() / model.n_molecules)


def build_hamiltonian(model: ChainModel) -> np.ndarray:
    basis = model.basis
    n = model.n_molecules
    h = np.zeros((basis.dim, basis.dim), dtype=complex)
    mol = slice(1, n + 1)
    h[mol, mol] = np.diag(model.omega_molecule) + coupling_matrix(model)
    h[basis.photon, basis.photon] = model.cavity_energy
    if model.cavity_coupling_enabled:
        g = np.asarray(model.g, dtype=complex)
        h[mol, basis.photon] = np.conj(g)  # sigma_m^+ a
        h[basis.photon, mol] = g  # a^dag sigma_m^-
    return h


def sample_disorder(
    p: float,
    q: float,
    n_molecules: int,
    fix_ends: bool = True,
    seed=None,
) -> np.ndarray:
    """Site energies drawn i.i.d. from Normal(p, q^2).

    With ``fix_ends`` the first and last molecules are pinned to ``p``.
    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if not np.isfinite(q) or q < 0:
        raise ValueError(f"disorder width must be >= 0, got {q}")
    make_basis(n_molecules)
    rng = np.random.default_rng(seed)
    energies = rng.normal(p, q, size=n_molecules) if q > 0 else np.full(n_molecules, float(p))
    if fix_ends:
        energies[0] = p
        energies[-1] = p
    return energies


def with_channel(model: ChainModel, channel: str) -> ChainModel:
    """Model variant for one transport channel ('full', 'wc' or 'nh')."""
    channel = channel.lower()
    if channel == "full":
        return model
    if channel == "wc":
        return model.replace(cavity_coupling_enabled=False)
    if channel == "nh":
        return model.replace(hopping_enabled=False)
    raise ValueError(f"unknown channel {channel!r}")
