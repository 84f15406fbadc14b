"""Dipole basis and radiative couplings for J=0 -> J=1 emitters.

Units: lengths in reduced wavelength 1/k0 (k0 = 1), rates and frequencies
in the free-atom linewidth gamma0 (gamma0 = 1), times in 1/gamma0.  All
frequencies are detunings from the bare transition frequency.

The perfect conductor fills z < 0.  Its effect is represented by image
dipoles at (x, y, -z) whose tangential components are reversed.
"""

from __future__ import annotations

import numpy as np

GAMMA0 = 1.0
SUBLEVELS = (-1, 0, 1)

_SQRT2 = np.sqrt(2.0)

# columns follow SUBLEVELS order
SPHERICAL_BASIS = np.array(
    [
        [1.0 / _SQRT2, -1j / _SQRT2, 0.0],  # m = -1
        [0.0, 0.0, 1.0],  # m = 0
        [-1.0 / _SQRT2, -1j / _SQRT2, 0.0],  # m = +1
    ],
    dtype=complex,
).T

IMAGE_REFLECTION = np.diag([-1.0, -1.0, 1.0])


class DomainError(ValueError):
    """Raised when an argument lies outside the physical domain."""


def sublevel_index(m: int) -> int:
    if m not in SUBLEVELS:
        raise DomainError(f"sublevel must be one of {SUBLEVELS}, got {m!r}")
    return m + 1


def dipole_vector(m: int) -> np.ndarray:
    """Unit spherical vector u_m for the transition to sublevel ``m``."""
    return SPHERICAL_BASIS[:, sublevel_index(m)].copy()


def scalar_coefficients(x):
    """Isotropic and radial parts of the dyadic coupling at distance ``x``.

    Returns ``(P, Q)`` with

        P(x) = e^{ix} (1/x + i/x^2 - 1/x^3)
        Q(x) = e^{ix} (-1/x - 3i/x^2 + 3/x^3)

    Accepts scalars or arrays; every entry must be finite and positive.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("distance must be finite and strictly positive")
    phase = np.exp(1j * x)
    inv = 1.0 / x
    inv2 = inv * inv
    inv3 = inv2 * inv
    p = phase * (inv + 1j * inv2 - inv3)
    q = phase * (-inv - 3j * inv2 + 3.0 * inv3)
    if p.ndim == 0:
        return complex(p), complex(q)
    return p, q


def dyadic_tensor(r: np.ndarray) -> np.ndarray:
    """Cartesian coupling tensor -(3/4)[P I + Q r^r^] for separation(s) ``r``.

    ``r`` has shape (..., 3); the result has shape (..., 3, 3).
    """
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    p, q = scalar_coefficients(dist)
    p = np.asarray(p)[..., None, None]
    q = np.asarray(q)[..., None, None]
    rhat = r / dist[..., None]
    outer = rhat[..., :, None] * rhat[..., None, :]
    return -0.75 * GAMMA0 * (p * np.eye(3) + q * outer)


def free_space_coupling(r_a, r_b, m: int, m_prime: int) -> complex:
    """Photon-exchange element between (a, m) and (b, m') in free space.

    Real part is the dipole-dipole level shift, imaginary part the
    collective decay contribution (both in units of gamma0).
    """
    sep = np.asarray(r_a, dtype=float) - np.asarray(r_b, dtype=float)
    if np.linalg.norm(sep) == 0.0:
        raise DomainError("coincident positions have no finite coupling")
    g = dyadic_tensor(sep)
    return complex(np.conj(dipole_vector(m)) @ g @ dipole_vector(m_prime))


def image_coupling(r_a, r_b, m: int, m_prime: int) -> complex:
    """Coupling of (a, m) to the mirror image of (b, m').

    ``r_a`` may equal ``r_b``; that gives the self-image term which fixes
    the surface-modified linewidth and level shift of a single atom.
    """
    r_a = np.asarray(r_a, dtype=float)
    r_b = np.asarray(r_b, dtype=float)
    if r_a[2] <= 0 or r_b[2] <= 0:
        raise DomainError("atoms must sit above the mirror (z > 0)")
    mirrored = r_b * np.array([1.0, 1.0, -1.0])
    g = dyadic_tensor(r_a - mirrored) @ IMAGE_REFLECTION
    return complex(np.conj(dipole_vector(m)) @ g @ dipole_vector(m_prime))


def single_atom_rate(z: float, m: int) -> float:
    """Closed-form decay rate of one atom at height ``z`` above the mirror.

    Tangential dipoles (m = +-1) are suppressed at the surface and the
    normal dipole (m = 0) is doubled; both approach gamma0 far away.
    """
    if not np.isfinite(z) or z <= 0:
        raise DomainError("height must be finite and strictly positive")
    sublevel_index(m)
    x = 2.0 * z
    s, c = np.sin(x), np.cos(x)
    if m == 0:
        return GAMMA0 * (1.0 - 3.0 * (c / x**2 - s / x**3))
    return GAMMA0 * (1.0 - 1.5 * (s / x + c / x**2 - s / x**3))
