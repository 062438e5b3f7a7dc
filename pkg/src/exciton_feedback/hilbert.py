"""Truncated Hilbert space of a molecular chain plus one cavity mode.

Only the zero- and single-excitation sectors are kept.  Basis ordering:

    0        |G,0>    all molecules in the ground state, no photon
    1..N     |e_m,0>  molecule m excited, no photon
    N+1      |G,1>    one cavity photon

Operators are plain dense ``complex128`` arrays.  Every operator here is the
full-space operator sandwiched between projectors onto the truncated space,
so matrix elements leading out of the single-excitation manifold are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class ExcitationBasis:
    """Index map of the truncated space for ``n_molecules`` molecules."""

    n_molecules: int

    def __post_init__(self):
        if isinstance(self.n_molecules, bool) or not isinstance(self.n_molecules, (int, np.integer)):
            raise TypeError("n_molecules must be an integer")
        if self.n_molecules < 1:
            raise ValueError(f"n_molecules must be >= 1, got {self.n_molecules}")

    @property
    def dim(self) -> int:
        return self.n_molecules + 2

    @property
    def ground(self) -> int:
        return 0

    @property
    def photon(self) -> int:
        return self.n_molecules + 1

    def molecule(self, m: int) -> int:
        """Index of ``|e_m,0>`` for a 1-based molecule label ``m``."""
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
            raise TypeError(f"molecule index must be an integer, got {m!r}")
        if not 1 <= m <= self.n_molecules:
            raise ValueError(f"molecule index {m} outside 1..{self.n_molecules}")
        return int(m)

    def labels(self) -> list[str]:
        return ["G,0"] + [f"e{m},0" for m in range(1, self.n_molecules + 1)] + ["G,1"]

    def index(self, label: str) -> int:
        try:
            return self.labels().index(label)
        except ValueError:
            raise KeyError(label) from None


def make_basis(n_molecules: int) -> ExcitationBasis:
    return ExcitationBasis(n_molecules)


def _unit(basis: ExcitationBasis, row: int, col: int) -> np.ndarray:
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    out[row, col] = 1.0
    return out


def identity(basis: ExcitationBasis) -> np.ndarray:
    return np.eye(basis.dim, dtype=complex)


def lowering_op(basis: ExcitationBasis, m: int) -> np.ndarray:
    """sigma_m^- : |e_m,0> -> |G,0>."""
    return _unit(basis, basis.ground, basis.molecule(m))


def raising_op(basis: ExcitationBasis, m: int) -> np.ndarray:
    """sigma_m^+ : |G,0> -> |e_m,0>."""
    return _unit(basis, basis.molecule(m), basis.ground)


def cavity_annihilation(basis: ExcitationBasis) -> np.ndarray:
    """a : |G,1> -> |G,0>."""
    return _unit(basis, basis.ground, basis.photon)


def cavity_creation(basis: ExcitationBasis) -> np.ndarray:
    return _unit(basis, basis.photon, basis.ground)


def projector(basis: ExcitationBasis, index: int) -> np.ndarray:
    return _unit(basis, index, index)


def excitation_number(basis: ExcitationBasis, m: int) -> np.ndarray:
    """sigma_m^+ sigma_m^-, the projector onto ``|e_m,0>``."""
    return projector(basis, basis.molecule(m))


def photon_number(basis: ExcitationBasis) -> np.ndarray:
    return projector(basis, basis.photon)


def sigma_x(basis: ExcitationBasis, m: int) -> np.ndarray:
    """Projected sigma_m^x.

    Only the ``{|G,0>, |e_m,0>}`` block survives the projection; the
    remaining full-space matrix elements lead to two-excitation states.
    """
    return lowering_op(basis, m) + raising_op(basis, m)


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def is_hermitian(a: np.ndarray, rtol: float = 1e-14) -> bool:
    scale = max(float(np.max(np.abs(a), initial=0.0)), 1.0)
    return bool(np.max(np.abs(a - adjoint(a)), initial=0.0) <= rtol * scale)


def matrix_exponential(a: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * a)`` by Pade scaling-and-squaring."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix_exponential needs a square matrix, got shape {a.shape}")
    return scipy.linalg.expm(scale * a.astype(complex))
