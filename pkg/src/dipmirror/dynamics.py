"""Per-realization observables: spectra, populations, trapping time."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.linalg

from .ensemble import ExcitationIndex
from .hamiltonian import EffectiveHamiltonian

log = logging.getLogger(__name__)

# eigenvector matrices worse than this are treated as defective
MAX_EIGVEC_CONDITION = 1e10
ONE_OVER_E = float(np.exp(-1.0))


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OmegaGrid:
    min: float = -20.0
    max: float = 20.0
    step: float = 0.02

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError("omega grid needs min < max")
        if not self.step > 0:
            raise ValueError("omega grid step must be positive")

    def values(self) -> np.ndarray:
        n = int(round((self.max - self.min) / self.step)) + 1
        return np.linspace(self.min, self.min + (n - 1) * self.step, n)


@dataclass(frozen=True)
class TimeGrid:
    """``n_points`` times in [0, t_max]; log spacing starts at ``t_min``."""

    t_max: float = 1e3
    n_points: int = 400
    spacing: Literal["log", "linear"] = "log"
    t_min: float = 1e-2

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_points < 2:
            raise ValueError("time grid needs at least two points")
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "log" and not 0 < self.t_min < self.t_max:
            raise ValueError("log grid needs 0 < t_min < t_max")

    def values(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(0.0, self.t_max, self.n_points)
        tail = np.logspace(np.log10(self.t_min), np.log10(self.t_max), self.n_points - 1)
        return np.concatenate([[0.0], tail])


@dataclass
class SpectralResult:
    omega: np.ndarray
    values: np.ndarray
    amplitude: Optional[np.ndarray] = None


@dataclass
class DecayResult:
    t: np.ndarray
    p_sum: np.ndarray
    dp_sum: np.ndarray
    populations: Optional[np.ndarray] = None
    amplitude: Optional[np.ndarray] = None  # b_s(t) of the initial state
    method: str = "eig"

    def decay_rate(self) -> np.ndarray:
        """Instantaneous rate -d ln P_sum / dt on the grid."""
        return -self.dp_sum / self.p_sum


@dataclass(frozen=True)
class TrappingTime:
    tau: Optional[float]
    last_value: float

    @property
    def reached(self) -> bool:
        return self.tau is not None


@dataclass
class Eigensystem:
    """M = V diag(values) V^-1, with the inverse kept explicitly."""

    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float = field(default=np.nan)

    @classmethod
    def of(cls, matrix: np.ndarray) -> "Eigensystem":
        values, vectors = np.linalg.eig(matrix)
        cond = float(np.linalg.cond(vectors))
        if not np.isfinite(cond) or cond > MAX_EIGVEC_CONDITION:
            raise NumericalError(f"eigenvector matrix is ill-conditioned (cond={cond:.3g})")
        inverse = np.linalg.solve(vectors, np.eye(len(values)))
        return cls(values, vectors, inverse, cond)

    def weights(self, s: int) -> np.ndarray:
        """Coefficients of e_s on the right eigenvectors."""
        return self.inverse[:, s]


def _row(H: EffectiveHamiltonian, s) -> int:
    return H.index(s) if isinstance(s, ExcitationIndex) else int(s)


def resolvent_amplitudes(H: EffectiveHamiltonian, s, omega: np.ndarray, chunk: int = 512) -> np.ndarray:
    """b(omega) for every state by direct solves of (omega - M) b = i e_s.

    Returns an array of shape (len(omega), dim).
    """
    s = _row(H, s)
    omega = np.asarray(omega, dtype=float)
    eye = np.eye(H.dim)
    rhs = np.zeros(H.dim, dtype=complex)
    rhs[s] = 1j
    out = np.empty((len(omega), H.dim), dtype=complex)
    for start in range(0, len(omega), chunk):
        w = omega[start:start + chunk]
        a = w[:, None, None] * eye - H.matrix
        try:
            out[start:start + chunk] = np.linalg.solve(a, np.broadcast_to(rhs, (len(w), H.dim))[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular shifted matrix near omega={w[0]:.4g}") from exc
    return out


def spectrum(
    H: EffectiveHamiltonian,
    s,
    grid: OmegaGrid = OmegaGrid(),
    offset: float = 0.0,
    method: Literal["eig", "solve"] = "eig",
    eigensystem: Optional[Eigensystem] = None,
) -> SpectralResult:
    """Transition spectrum |b_s(omega)|^2 of the initially excited state.

    Grid points are detunings measured from ``offset``; the matrix is
    evaluated at ``offset + grid``.
    """
    s = _row(H, s)
    rel = grid.values()
    omega = offset + rel
    if method == "solve":
        amp = resolvent_amplitudes(H, s, omega)[:, s]
    elif method == "eig":
        es = eigensystem or Eigensystem.of(H.matrix)
        residues = es.vectors[s, :] * es.inverse[:, s]
        amp = 1j * (1.0 / (omega[:, None] - es.values[None, :])) @ residues
    else:
        raise ValueError(f"unknown spectrum method {method!r}")
    return SpectralResult(rel, np.abs(amp) ** 2, amp)


def _evolve_eig(es: Eigensystem, s: int, t: np.ndarray):
    phases = np.exp(-1j * np.outer(t, es.values))  # (nt, dim)
    coeffs = es.weights(s)
    b = (phases * coeffs) @ es.vectors.T
    db = (phases * (-1j * es.values * coeffs)) @ es.vectors.T
    return b, db


def _evolve_expm(M: np.ndarray, s: int, t: np.ndarray):
    dim = len(M)
    b = np.empty((len(t), dim), dtype=complex)
    for k, tk in enumerate(t):
        b[k] = scipy.linalg.expm(-1j * tk * M)[:, s]
    db = (-1j * b) @ M.T
    return b, db


def evolve(
    H: EffectiveHamiltonian,
    s,
    grid: TimeGrid = TimeGrid(),
    store_states: bool = False,
    eigensystem: Optional[Eigensystem] = None,
) -> DecayResult:
    """Amplitudes b(t) = exp(-i M t) e_s and the total excited population.

    The eigendecomposition of M serves every time point.  If it is
    numerically defective the matrix exponential is used instead and the
    result's ``method`` says so.
    """
    s = _row(H, s)
    t = grid.values() if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    method = "eig"
    try:
        es = eigensystem or Eigensystem.of(H.matrix)
        b, db = _evolve_eig(es, s, t)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        log.warning("eigendecomposition unusable (%s); falling back to expm", exc)
        method = "expm"
        b, db = _evolve_expm(H.matrix, s, t)
    pops = np.abs(b) ** 2
    p_sum = pops.sum(axis=1)
    dp_sum = 2.0 * np.real(np.sum(b.conj() * db, axis=1))
    return DecayResult(
        t=t,
        p_sum=p_sum,
        dp_sum=dp_sum,
        populations=pops if store_states else None,
        amplitude=b[:, s].copy(),
        method=method,
    )


def trapping_time(decay, threshold: float = ONE_OVER_E) -> TrappingTime:
    """First time P_sum falls to 1/e, interpolated linearly in log P_sum.

    ``decay`` is a DecayResult or a ``(t, p_sum)`` pair.
    """
    if isinstance(decay, DecayResult):
        t, p = decay.t, decay.p_sum
    else:
        t, p = (np.asarray(a, dtype=float) for a in decay)
    below = np.nonzero(p <= threshold)[0]
    if len(below) == 0:
        return TrappingTime(None, float(p[-1]))
    i = below[0]
    if i == 0:
        return TrappingTime(float(t[0]), float(p[-1]))
    l0, l1, lc = np.log(p[i - 1]), np.log(max(p[i], 1e-300)), np.log(threshold)
    frac = (l0 - lc) / (l0 - l1) if l0 != l1 else 1.0
    return TrappingTime(float(t[i - 1] + frac * (t[i] - t[i - 1])), float(p[-1]))


def consistency_check(
    H: EffectiveHamiltonian,
    s,
    t_max: float = 5.0,
    n_times: int = 51,
    omega_max: float = 100.0,
    omega_step: float = 0.005,
    rtol: float = 1e-3,
) -> dict:
    """Compare evolve() with a numerical inverse Fourier transform of b_s(omega).

    The pole of the isolated diagonal element, i / (omega - M_ss), is
    subtracted before quadrature and added back analytically, leaving a
    remainder that falls off as omega^-3.
    """
    s = _row(H, s)
    omega = np.arange(-omega_max, omega_max + omega_step / 2, omega_step)
    t = np.linspace(0.0, t_max, n_times)
    b_w = resolvent_amplitudes(H, s, omega)[:, s]
    m_ss = H.matrix[s, s]
    remainder = b_w - 1j / (omega - m_ss)
    weights = np.full(len(omega), omega_step)
    weights[[0, -1]] *= 0.5
    kernel = np.exp(-1j * np.outer(t, omega))
    b_fourier = kernel @ (weights * remainder) / (2.0 * np.pi) + np.exp(-1j * m_ss * t)
    b_eig = evolve(H, s, t).amplitude
    scale = np.max(np.abs(b_eig))
    err = float(np.max(np.abs(b_fourier - b_eig)) / scale)
    return {
        "max_relative_error": err,
        "rtol": rtol,
        "t_max": t_max,
        "omega_max": omega_max,
        "omega_step": omega_step,
        "passed": err <= rtol,
    }
