"""D2Q9 moment basis: velocity set, moment transform, equilibria, relaxation.

The nine discrete velocities are ordered rest, axis, diagonal:

    (0,0), (1,0), (0,1), (-1,0), (0,-1), (1,1), (-1,1), (-1,-1), (1,-1)

and the nine moments are ordered

    rho, jx, jy, e, xx, xy, qx, qy, eps

(density, momentum, energy, normal stress difference, shear stress,
energy flux, fourth-order scalar).  Every moment row is a polynomial in
the velocity components, so the whole matrix is generated from the
velocity table; its inverse is computed once in exact rational
arithmetic.  Moment arrays carry the moment/population index on axis 0
and any grid shape after that, so the same functions serve scalar unit
tests and full fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

VELOCITIES = np.array(
    [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)],
    dtype=np.int64,
)

#: index of the opposite velocity, OPPOSITE[a] = index of -c_a
OPPOSITE = np.array([0, 3, 4, 1, 2, 7, 8, 5, 6], dtype=np.int64)

MOMENT_NAMES = ("rho", "jx", "jy", "e", "xx", "xy", "qx", "qy", "eps")
RHO, JX, JY, E, XX, XY, QX, QY, EPS = range(9)

#: lattice sound speed of the standard scheme
SOUND_SPEED = 1.0 / np.sqrt(3.0)


def _build_moment_matrix() -> np.ndarray:
    cx = VELOCITIES[:, 0]
    cy = VELOCITIES[:, 1]
    c2 = cx * cx + cy * cy
    rows = [
        np.ones(9, dtype=np.int64),  # rho
        cx,                          # jx
        cy,                          # jy
        3 * c2 - 4,                  # e
        cx * cx - cy * cy,           # xx
        cx * cy,                     # xy
        (3 * c2 - 5) * cx,           # qx
        (3 * c2 - 5) * cy,           # qy
        (9 * c2 * c2 - 21 * c2 + 8) // 2,  # eps
    ]
    return np.array(rows, dtype=np.int64)


def _invert_exact(m: np.ndarray) -> np.ndarray:
    # rows are mutually orthogonal, so M^-1 = M^T diag(1/|row|^2), in rationals
    inv = [[Fraction(0)] * 9 for _ in range(9)]
    for i in range(9):
        norm = Fraction(int(np.dot(m[i], m[i])))
        for j in range(9):
            inv[j][i] = Fraction(int(m[i, j])) / norm
    return np.array([[float(x) for x in row] for row in inv])


@dataclass(frozen=True)
class MomentMatrix:
    """The 9x9 integer moment matrix and its exact inverse."""

    m: np.ndarray
    m_inv: np.ndarray


_MATRIX = MomentMatrix(m=_build_moment_matrix(), m_inv=_invert_exact(_build_moment_matrix()))


def moment_matrix() -> MomentMatrix:
    return _MATRIX


def to_moments(f: np.ndarray) -> np.ndarray:
    """Map populations (9, ...) to moments (9, ...)."""
    return np.einsum("ab,b...->a...", _MATRIX.m.astype(float), np.asarray(f, dtype=float))


def from_moments(m: np.ndarray) -> np.ndarray:
    """Map moments (9, ...) to populations (9, ...)."""
    return np.einsum("ab,b...->a...", _MATRIX.m_inv, np.asarray(m, dtype=float))


def equilibrium_moments(rho, jx, jy) -> np.ndarray:
    """Equilibrium moment vector for given density and momentum.

    e   = -2 rho + 3 (jx^2 + jy^2) / rho
    xx  = (jx^2 - jy^2) / rho        xy = jx jy / rho
    qx  = -jx                        qy = -jy
    eps =  rho - 3 (jx^2 + jy^2) / rho
    """
    rho = np.asarray(rho, dtype=float)
    jx = np.asarray(jx, dtype=float)
    jy = np.asarray(jy, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("density must be positive")
    j2 = jx * jx + jy * jy
    shape = np.broadcast_shapes(rho.shape, jx.shape, jy.shape)
    m = np.empty((9,) + shape)
    m[RHO] = rho
    m[JX] = jx
    m[JY] = jy
    m[E] = -2.0 * rho + 3.0 * j2 / rho
    m[XX] = (jx * jx - jy * jy) / rho
    m[XY] = jx * jy / rho
    m[QX] = -jx
    m[QY] = -jy
    m[EPS] = rho - 3.0 * j2 / rho
    return m


def equilibrium_populations(rho, jx, jy) -> np.ndarray:
    return from_moments(equilibrium_moments(rho, jx, jy))


def odd_equilibrium_populations(rho, jx, jy) -> np.ndarray:
    """Odd-in-velocity half of the equilibrium, (feq(rho,u) - feq(rho,-u))/2.

    Only the jx, jy, qx, qy moments are odd in the momentum, so the
    result is exact, not a finite difference.
    """
    jx = np.asarray(jx, dtype=float)
    jy = np.asarray(jy, dtype=float)
    shape = np.broadcast_shapes(np.shape(rho), jx.shape, jy.shape)
    m = np.zeros((9,) + shape)
    m[JX] = jx
    m[JY] = jy
    m[QX] = -jx
    m[QY] = -jy
    return from_moments(m)


@dataclass
class RelaxationRates:
    """Per-moment relaxation rates; conserved moments are never relaxed."""

    s_e: float
    s_xx: float
    s_q: float
    s_eps: float

    def validate(self) -> "RelaxationRates":
        for name in ("s_e", "s_xx", "s_q", "s_eps"):
            s = getattr(self, name)
            if not 0.0 < s < 2.0:
                raise ValueError(f"{name} = {s} outside (0, 2)")
        return self

    def as_vector(self) -> np.ndarray:
        return np.array(
            [0.0, 0.0, 0.0, self.s_e, self.s_xx, self.s_xx, self.s_q, self.s_q, self.s_eps]
        )


def relax(m: np.ndarray, rates: RelaxationRates) -> np.ndarray:
    """Moment-space relaxation m* = m + s (m_eq - m).

    Equilibria are rebuilt from the conserved rows of m, which are
    returned bit-for-bit unchanged (their rate is exactly zero).
    """
    m = np.asarray(m, dtype=float)
    meq = equilibrium_moments(m[RHO], m[JX], m[JY])
    s = rates.as_vector().reshape((9,) + (1,) * (m.ndim - 1))
    return m + s * (meq - m)


def viscosity(s_xx: float) -> float:
    """Shear viscosity of the relaxation rate s_xx."""
    return (1.0 / s_xx - 0.5) / 3.0


def bulk_viscosity(s_e: float) -> float:
    return (1.0 / s_e - 0.5) / 3.0


def rate_for_viscosity(nu: float) -> float:
    """Relaxation rate producing shear viscosity nu."""
    if nu <= -1.0 / 6.0:
        raise ValueError(f"viscosity {nu} unreachable (requires rate <= 0)")
    return 1.0 / (3.0 * nu + 0.5)


def quartic_s_q(s_xx: float) -> float:
    """Energy-flux rate satisfying (1/s_xx - 1/2)(1/s_q - 1/2) = 1/6.

    Tunes the k^4 term of the shear mode to be isotropic.
    """
    sigma = 1.0 / s_xx - 0.5
    if sigma == 0.0:
        raise ValueError("s_xx = 2 leaves the quartic condition unsatisfiable")
    return 1.0 / (0.5 + 1.0 / (6.0 * sigma))


def transport(rates: RelaxationRates) -> tuple[float, float, float]:
    """(shear viscosity, bulk viscosity, sound speed) of the rates."""
    return viscosity(rates.s_xx), bulk_viscosity(rates.s_e), SOUND_SPEED
