"""Random atomic ensembles in a cylinder standing on the mirror plane."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial import cKDTree

from .model import SUBLEVELS, sublevel_index

DetuningModel = Literal["per_atom", "per_sublevel"]

R_MIN = 1e-3
MAX_RESAMPLE_ATTEMPTS = 1000


class ConfigError(ValueError):
    """Invalid ensemble or geometry parameters."""


class GenerationError(RuntimeError):
    """Configuration sampling could not satisfy its constraints."""


@dataclass(frozen=True)
class ExcitationIndex:
    atom: int
    m: int

    def __post_init__(self):
        sublevel_index(self.m)
        if self.atom < 0:
            raise ConfigError("atom index must be non-negative")

    @property
    def row(self) -> int:
        """Row of this state in the 3N x 3N matrix (atom-major ordering)."""
        return 3 * self.atom + sublevel_index(self.m)


@dataclass(frozen=True)
class Geometry:
    """Cylinder of radius R and length L whose base lies on z = 0."""

    R: float
    L: float
    z_exc: float = 1.0
    mirror_enabled: bool = True

    def __post_init__(self):
        for name in ("R", "L", "z_exc"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be finite and positive, got {v!r}")
        if self.z_exc >= self.L:
            raise ConfigError("z_exc must lie inside the cylinder (z_exc < L)")

    @property
    def volume(self) -> float:
        return float(np.pi * self.R**2 * self.L)


@dataclass(frozen=True)
class EnsembleConfiguration:
    positions: np.ndarray  # (N, 3)
    detunings: np.ndarray  # (N, 3), columns in SUBLEVELS order
    excited: ExcitationIndex

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    def detuning(self, atom: int, m: int) -> float:
        return float(self.detunings[atom, sublevel_index(m)])


def atom_count(n: float, geom: Geometry) -> int:
    """Number of atoms for density ``n`` (atoms per cubic reduced wavelength)."""
    if not np.isfinite(n) or n <= 0:
        raise ConfigError(f"density must be positive, got {n!r}")
    count = int(round(n * geom.volume))
    if count < 1:
        raise ConfigError(f"density {n} in volume {geom.volume:.3g} gives no atoms")
    return count


def realization_rng(seed: int, realization_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(realization_index)]))


def _uniform_in_cylinder(rng: np.random.Generator, geom: Geometry, size: int) -> np.ndarray:
    u = rng.random((size, 3))
    rho = geom.R * np.sqrt(u[:, 0])
    phi = 2.0 * np.pi * u[:, 1]
    # 1 - U lies in (0, 1], keeping every atom strictly above the mirror
    z = geom.L * (1.0 - u[:, 2])
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sample_positions(
    rng: np.random.Generator, geom: Geometry, n_atoms: int, r_min: float = R_MIN
) -> np.ndarray:
    """Pinned excited atom at index 0 plus ``n_atoms - 1`` uniform atoms.

    Of every pair closer than ``r_min`` the higher-indexed atom is redrawn
    until no such pair remains.
    """
    positions = np.empty((n_atoms, 3))
    positions[0] = (0.0, 0.0, geom.z_exc)
    if n_atoms == 1:
        return positions
    positions[1:] = _uniform_in_cylinder(rng, geom, n_atoms - 1)
    if r_min <= 0:
        return positions
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        pairs = cKDTree(positions).query_pairs(r_min, output_type="ndarray")
        if len(pairs) == 0:
            return positions
        # the later atom of each close pair is redrawn; the pinned one never is
        newer = np.unique(pairs.max(axis=1))
        positions[newer] = _uniform_in_cylinder(rng, geom, len(newer))
    raise GenerationError(
        f"could not reach pairwise separation >= {r_min} after {MAX_RESAMPLE_ATTEMPTS} rounds"
    )


def sample_detunings(
    rng: np.random.Generator, n_atoms: int, delta: float, model: DetuningModel = "per_atom"
) -> np.ndarray:
    """Gaussian inhomogeneous shifts with zero mean and RMS ``delta``."""
    if delta < 0 or not np.isfinite(delta):
        raise ConfigError(f"inhomogeneous width must be >= 0, got {delta!r}")
    if model == "per_atom":
        draws = np.repeat(rng.standard_normal(n_atoms)[:, None], len(SUBLEVELS), axis=1)
    elif model == "per_sublevel":
        draws = rng.standard_normal((n_atoms, len(SUBLEVELS)))
    else:
        raise ConfigError(f"unknown detuning model {model!r}")
    return delta * draws


def sample_configuration(
    n: float,
    geom: Geometry,
    delta: float,
    m_init: int,
    seed: int,
    realization_index: int,
    detuning_model: DetuningModel = "per_atom",
    r_min: float = R_MIN,
    n_atoms: int | None = None,
) -> EnsembleConfiguration:
    """Draw one disordered configuration.

    The result is a pure function of the arguments.  Positions are drawn
    before detunings and are the same for every ``delta``, so sweeps over
    the inhomogeneous width reuse identical spatial disorder.
    """
    if n_atoms is None:
        n_atoms = atom_count(n, geom)
    rng = realization_rng(seed, realization_index)
    positions = sample_positions(rng, geom, n_atoms, r_min)
    detunings = sample_detunings(rng, n_atoms, delta, detuning_model)
    return EnsembleConfiguration(positions, detunings, ExcitationIndex(0, m_init))
