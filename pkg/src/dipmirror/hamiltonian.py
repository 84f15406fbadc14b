"""Effective non-Hermitian matrix of the single-excitation sector.

The amplitudes b_e(omega) of the states with one excited atom obey

    sum_e' [(omega - omega_e) delta_ee' - Sigma_ee'] b_e' = i delta_es.

In the rotating frame this is written ``(domega * I - M) b = i e_s`` with
``M = diag(Delta_am + dw_m) + Sigma``: the bare transition frequency is
subtracted from every frequency and never enters the numbers.  ``Sigma``
holds the -i gamma0/2 free-space decay on the diagonal, the free-space
photon exchange between atoms and, with the mirror present, every coupling
to image dipoles (self-image terms included).

Rows are ordered atom-major: row ``3a + (m + 1)`` is atom ``a``, sublevel
``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleConfiguration, ExcitationIndex
from .model import GAMMA0, IMAGE_REFLECTION, SPHERICAL_BASIS, SUBLEVELS, dyadic_tensor


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class StarkModel:
    """Field-induced shifts of the m = 0 and m = +-1 transitions (gamma0)."""

    shift_m0: float = 0.0
    shift_m1: float = 0.0

    @classmethod
    def from_splitting(cls, splitting: float) -> "StarkModel":
        # sigma transitions pinned at zero detuning
        return cls(shift_m0=float(splitting), shift_m1=0.0)

    @property
    def splitting(self) -> float:
        return self.shift_m0 - self.shift_m1

    def shift(self, m: int) -> float:
        return self.shift_m0 if m == 0 else self.shift_m1

    def shifts(self) -> np.ndarray:
        return np.array([self.shift(m) for m in SUBLEVELS])


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    n_atoms: int
    mirror_enabled: bool
    stark: StarkModel

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, e: ExcitationIndex) -> int:
        if e.atom >= self.n_atoms:
            raise IndexError(f"atom {e.atom} out of range for {self.n_atoms} atoms")
        return e.row

    def to_cartesian(self) -> np.ndarray:
        """Same operator in the (x, y, z) dipole basis of every atom.

        In this basis the matrix is complex symmetric whenever the
        detunings are equal for m = +1 and m = -1.
        """
        return _from_spherical(self.matrix, self.n_atoms)

    def shifted(self, c: float) -> "EffectiveHamiltonian":
        """Copy with ``c`` added to every diagonal element (global frame shift)."""
        return EffectiveHamiltonian(
            self.matrix + c * np.eye(self.dim),
            self.n_atoms,
            self.mirror_enabled,
            StarkModel(self.stark.shift_m0 + c, self.stark.shift_m1 + c),
        )


def _to_spherical(cart: np.ndarray, n_atoms: int) -> np.ndarray:
    blocks = cart.reshape(n_atoms, 3, n_atoms, 3)
    u = SPHERICAL_BASIS
    out = np.einsum("im,aibj,jn->ambn", u.conj(), blocks, u, optimize=True)
    return out.reshape(3 * n_atoms, 3 * n_atoms)


def _from_spherical(sph: np.ndarray, n_atoms: int) -> np.ndarray:
    blocks = sph.reshape(n_atoms, 3, n_atoms, 3)
    u = SPHERICAL_BASIS
    out = np.einsum("im,ambn,jn->aibj", u, blocks, u.conj(), optimize=True)
    return out.reshape(3 * n_atoms, 3 * n_atoms)


def coupling_tensor(positions: np.ndarray, mirror_enabled: bool) -> np.ndarray:
    """Cartesian photon-exchange blocks, shape (N, 3, N, 3), without the
    free-space self-decay term.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    sep = positions[:, None, :] - positions[None, :, :]
    blocks = np.zeros((n, n, 3, 3), dtype=complex)
    off = ~np.eye(n, dtype=bool)
    if off.any():
        if np.any(np.linalg.norm(sep[off], axis=-1) == 0.0):
            raise AssemblyError("two atoms occupy the same position")
        blocks[off] = dyadic_tensor(sep[off])
    if mirror_enabled:
        if np.any(positions[:, 2] <= 0):
            raise AssemblyError("atoms must lie above the mirror when it is enabled")
        images = positions * np.array([1.0, 1.0, -1.0])
        blocks += dyadic_tensor(positions[:, None, :] - images[None, :, :]) @ IMAGE_REFLECTION
    return blocks.transpose(0, 2, 1, 3)


def assemble(
    config: EnsembleConfiguration, stark: StarkModel, mirror_enabled: bool
) -> EffectiveHamiltonian:
    n = config.n_atoms
    cart = coupling_tensor(config.positions, mirror_enabled).reshape(3 * n, 3 * n)
    matrix = _to_spherical(cart, n)
    diag = (config.detunings + stark.shifts()[None, :]).ravel() - 0.5j * GAMMA0
    matrix[np.diag_indices_from(matrix)] += diag
    return EffectiveHamiltonian(matrix, n, mirror_enabled, stark)
