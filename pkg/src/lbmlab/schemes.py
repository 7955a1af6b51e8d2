"""Time steppers for the three schemes.

* ``mrt`` / ``bgk``: populations are mapped to moments, relaxed toward the
  equilibria, mapped back and streamed.  ``bgk`` is the same step with all
  rates equal.
* ``acm``: the state is (rho, v); populations are rebuilt every step from
  the equilibrium plus a link-wise correction,
  f(x, t+1) = feq(x - c) + Theta * (feo(x) - feo(x - c)),
  with feo the odd-in-velocity half of the equilibrium and Theta = 1 - 6 nu.
* ``fdlbm``: the state is (rho, v); the non-conserved moments are
  reconstructed from the equilibria plus finite-difference estimates of
  their first-order deviation (the theta fields), then streamed.

All steps are pure: they take a FieldSet and return a new one.  Walls, if
any, are handled by a boundary object (see ``boundaries``) that refreshes
the virtual layer before reconstruction and patches wall-crossing
populations after streaming.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lattice
from .errors import ConfigError, NumericalError
from .lattice import E, JX, JY, XX, XY, RelaxationRates, VELOCITIES
from .stencils import StencilKind, ddx, ddy

SCHEMES = ("mrt", "bgk", "acm", "fdlbm")

THETA_XY_SYMMETRIC = "symmetric"
THETA_XY_AS_PRINTED = "as_printed"


@dataclass
class SchemeConfig:
    """Which scheme to run and with what parameters.

    ``mean_velocity`` is the uniform background used by analysis runs;
    simulations carry their advection in the fields themselves.
    """

    scheme: str
    rates: RelaxationRates | None = None
    stencil: StencilKind = StencilKind.THREE_POINT
    acm_nu: float | None = None
    theta_xy_sign: str = THETA_XY_SYMMETRIC
    mean_velocity: tuple[float, float] = (0.0, 0.0)

    def validate(self) -> "SchemeConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "acm":
            if self.acm_nu is None or not 0.0 < self.acm_nu <= 1.0 / 6.0:
                raise ConfigError("acm requires 0 < nu <= 1/6")
        else:
            if self.rates is None:
                raise ConfigError(f"{self.scheme} requires relaxation rates")
            try:
                self.rates.validate()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.theta_xy_sign not in (THETA_XY_SYMMETRIC, THETA_XY_AS_PRINTED):
            raise ConfigError(f"unknown theta_xy_sign {self.theta_xy_sign!r}")
        return self

    @property
    def population_based(self) -> bool:
        return self.scheme in ("mrt", "bgk")

    @property
    def viscosity(self) -> float:
        if self.scheme == "acm":
            return self.acm_nu
        return lattice.viscosity(self.rates.s_xx)

    @classmethod
    def mrt(cls, nu, s_q=None, quartic=False, s_e=None, s_eps=1.0, mean_velocity=(0.0, 0.0)):
        """Moment relaxation; ``quartic`` ties s_q to s_xx for an isotropic
        k^4 shear term, otherwise s_q defaults to the plain reference 1.3."""
        s_xx = lattice.rate_for_viscosity(nu)
        if quartic:
            if s_q is not None:
                raise ConfigError("pass either quartic=True or s_q, not both")
            s_q = lattice.quartic_s_q(s_xx)
        elif s_q is None:
            s_q = 1.3
        rates = RelaxationRates(s_e=s_e if s_e is not None else s_xx, s_xx=s_xx, s_q=s_q, s_eps=s_eps)
        return cls(scheme="mrt", rates=rates, mean_velocity=mean_velocity).validate()

    @classmethod
    def bgk(cls, nu, mean_velocity=(0.0, 0.0)):
        s = lattice.rate_for_viscosity(nu)
        rates = RelaxationRates(s_e=s, s_xx=s, s_q=s, s_eps=s)
        return cls(scheme="bgk", rates=rates, mean_velocity=mean_velocity).validate()

    @classmethod
    def acm(cls, nu, mean_velocity=(0.0, 0.0)):
        return cls(scheme="acm", acm_nu=nu, mean_velocity=mean_velocity).validate()

    @classmethod
    def fdlbm(
        cls,
        nu,
        stencil=StencilKind.THREE_POINT,
        s_e=None,
        theta_xy_sign=THETA_XY_SYMMETRIC,
        mean_velocity=(0.0, 0.0),
    ):
        s_xx = lattice.rate_for_viscosity(nu)
        rates = RelaxationRates(
            s_e=s_e if s_e is not None else s_xx, s_xx=s_xx, s_q=1.0, s_eps=1.0
        )
        return cls(
            scheme="fdlbm",
            rates=rates,
            stencil=StencilKind(stencil),
            theta_xy_sign=theta_xy_sign,
            mean_velocity=mean_velocity,
        ).validate()


@dataclass
class FieldSet:
    """State on an (nx, ny) periodic grid.

    Population schemes carry ``f`` with shape (9, nx, ny); the
    reconstruction schemes carry (rho, vx, vy).
    """

    rho: np.ndarray | None = None
    vx: np.ndarray | None = None
    vy: np.ndarray | None = None
    f: np.ndarray | None = None

    @classmethod
    def primitive(cls, rho, vx, vy) -> "FieldSet":
        rho, vx, vy = (np.array(a, dtype=float) for a in (rho, vx, vy))
        return cls(rho=rho, vx=vx, vy=vy)

    @classmethod
    def populations(cls, f) -> "FieldSet":
        return cls(f=np.array(f, dtype=float))

    @classmethod
    def uniform(cls, cfg: SchemeConfig, nx: int, ny: int, rho=1.0, velocity=(0.0, 0.0)) -> "FieldSet":
        r = np.full((nx, ny), float(rho))
        vx = np.full((nx, ny), float(velocity[0]))
        vy = np.full((nx, ny), float(velocity[1]))
        if cfg.population_based:
            return cls.populations(lattice.equilibrium_populations(r, r * vx, r * vy))
        return cls(rho=r, vx=vx, vy=vy)

    @property
    def population_based(self) -> bool:
        return self.f is not None

    @property
    def shape(self) -> tuple[int, int]:
        a = self.f[0] if self.population_based else self.rho
        return a.shape

    def macros(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rho, jx, jy) regardless of representation."""
        if self.population_based:
            return macroscopic(self.f)
        return self.rho, self.rho * self.vx, self.rho * self.vy

    def copy(self) -> "FieldSet":
        return FieldSet(
            rho=None if self.rho is None else self.rho.copy(),
            vx=None if self.vx is None else self.vx.copy(),
            vy=None if self.vy is None else self.vy.copy(),
            f=None if self.f is None else self.f.copy(),
        )


@dataclass
class ThetaFields:
    theta_e: np.ndarray
    theta_xx: np.ndarray
    theta_xy: np.ndarray


def stream(f: np.ndarray) -> np.ndarray:
    """Advect every population one lattice link: f'(x + c_a) = f(x)."""
    out = np.empty_like(f)
    for a, (cx, cy) in enumerate(VELOCITIES):
        out[a] = np.roll(f[a], (cx, cy), axis=(0, 1))
    return out


def macroscopic(f: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho = f.sum(axis=0)
    jx = np.einsum("a,a...->...", VELOCITIES[:, 0].astype(float), f)
    jy = np.einsum("a,a...->...", VELOCITIES[:, 1].astype(float), f)
    return rho, jx, jy


def _check_density(rho: np.ndarray) -> None:
    if not np.all(np.isfinite(rho)):
        raise NumericalError("non-finite density; run diverged")
    if rho.min() <= 0.0:
        raise NumericalError("non-positive density; run diverged")


def _sanitize_solid(rho, jx, jy, fluid_mask):
    """Park non-fluid nodes at rest so the momentum/density divide stays
    benign; the boundary refresh rewrites them before they are used."""
    if fluid_mask is None:
        return rho, jx, jy
    solid = ~fluid_mask
    rho = rho.copy()
    jx = jx.copy()
    jy = jy.copy()
    rho[solid] = 1.0
    jx[solid] = 0.0
    jy[solid] = 0.0
    return rho, jx, jy


def apply_force_strang(fields: FieldSet, g: tuple[float, float], when: str,
                       fluid_mask: np.ndarray | None = None) -> None:
    """Add half of the body-force momentum g/2 to every fluid node, in place.

    Called once with when='before' and once with when='after' around the
    collision/reconstruction of a step, so a full step adds exactly g.
    """
    if when not in ("before", "after"):
        raise ConfigError(f"when must be 'before' or 'after', got {when!r}")
    gx, gy = 0.5 * g[0], 0.5 * g[1]
    if fields.population_based:
        minv = lattice.moment_matrix().m_inv
        dj = minv[:, JX] * gx + minv[:, JY] * gy  # population change per node
        if fluid_mask is None:
            fields.f += dj[:, None, None]
        else:
            fields.f[:, fluid_mask] += dj[:, None]
    else:
        if fluid_mask is None:
            fields.vx += gx / fields.rho
            fields.vy += gy / fields.rho
        else:
            fields.vx[fluid_mask] += gx / fields.rho[fluid_mask]
            fields.vy[fluid_mask] += gy / fields.rho[fluid_mask]


def mrt_step(fields: FieldSet, cfg: SchemeConfig, walls=None, force=None) -> FieldSet:
    """One collide-and-stream step in moment space."""
    if not fields.population_based:
        raise ConfigError("mrt/bgk need a population FieldSet")
    fluid = None if walls is None else walls.fluid_mask
    m = lattice.to_moments(fields.f)
    if force is not None:
        _kick_moments(m, force, fluid)
    m = lattice.relax(m, cfg.rates)
    if force is not None:
        _kick_moments(m, force, fluid)
    fstar = lattice.from_moments(m)
    fnew = stream(fstar)
    if walls is not None:
        walls.fix_populations(fstar, fnew)
    _check_density(fnew.sum(axis=0) if walls is None else fnew.sum(axis=0)[fluid])
    return FieldSet.populations(fnew)


def _kick_moments(m: np.ndarray, g, fluid_mask) -> None:
    if fluid_mask is None:
        m[JX] += 0.5 * g[0]
        m[JY] += 0.5 * g[1]
    else:
        m[JX][fluid_mask] += 0.5 * g[0]
        m[JY][fluid_mask] += 0.5 * g[1]


def acm_step(fields: FieldSet, cfg: SchemeConfig, walls=None, force=None) -> FieldSet:
    """One link-wise artificial-compressibility step."""
    if fields.population_based:
        raise ConfigError("acm needs a primitive FieldSet")
    theta = 1.0 - 6.0 * cfg.acm_nu
    fields = fields.copy()
    fluid = None if walls is None else walls.fluid_mask
    if force is not None:
        apply_force_strang(fields, force, "before", fluid)
    if walls is not None:
        walls.refresh_primitive(fields.rho, fields.vx, fields.vy)
    rho, vx, vy = fields.rho, fields.vx, fields.vy
    feq = lattice.equilibrium_populations(rho, rho * vx, rho * vy)
    feo = lattice.odd_equilibrium_populations(rho, rho * vx, rho * vy)
    fnew = np.empty_like(feq)
    for a, (cx, cy) in enumerate(VELOCITIES):
        # f(x) = feq(x - c) + Theta * (feo(x) - feo(x - c))
        fnew[a] = np.roll(feq[a], (cx, cy), axis=(0, 1)) + theta * (
            feo[a] - np.roll(feo[a], (cx, cy), axis=(0, 1))
        )
    rho2, jx2, jy2 = macroscopic(fnew)
    _check_density(rho2 if fluid is None else rho2[fluid])
    rho2, jx2, jy2 = _sanitize_solid(rho2, jx2, jy2, fluid)
    out = FieldSet.primitive(rho2, jx2 / rho2, jy2 / rho2)
    if force is not None:
        apply_force_strang(out, force, "after", fluid)
    return out


def fdlbm_theta(fields: FieldSet, cfg: SchemeConfig,
                stencil: StencilKind | None = None) -> ThetaFields:
    """First-order moment deviations estimated by finite differences.

    Derivatives of products are taken by differencing the pointwise
    product grids.  theta_xy's linear term is (dx vy + dy vx)/3 with the
    default 'symmetric' switch; 'as_printed' uses (dx vy - dy vx)/3.
    stencil overrides cfg.stencil (used for the near-wall downgrade).
    """
    if fields.population_based:
        raise ConfigError("theta fields are defined for the primitive state")
    k = cfg.stencil if stencil is None else stencil
    rho, vx, vy = fields.rho, fields.vx, fields.vy
    dxr, dyr = ddx(rho, k), ddy(rho, k)
    dxvx, dyvx = ddx(vx, k), ddy(vx, k)
    dxvy, dyvy = ddx(vy, k), ddy(vy, k)
    vxvx, vxvy, vyvy = vx * vx, vx * vy, vy * vy
    dx_vxvx, dy_vxvx = ddx(vxvx, k), ddy(vxvx, k)
    dx_vxvy, dy_vxvy = ddx(vxvy, k), ddy(vxvy, k)
    dx_vyvy, dy_vyvy = ddx(vyvy, k), ddy(vyvy, k)

    v2 = vxvx + vyvy
    theta_e = (2.0 + 6.0 * v2) * (dxvx + dyvy) - 2.0 * (vx * dxr + vy * dyr)
    theta_xx = (
        (2.0 / 3.0) * (dxvx - dyvy)
        - (2.0 / 3.0) * (vx * dxr - vy * dyr)
        - 2.0 * (vx * (dx_vxvx + dy_vxvy) - vy * (dx_vxvy + dy_vyvy))
    )
    sgn = 1.0 if cfg.theta_xy_sign == THETA_XY_SYMMETRIC else -1.0
    theta_xy = (
        (dxvy + sgn * dyvx) / 3.0
        - (vx * dyr + vy * dxr) / 3.0
        - vx * (dx_vxvy + dy_vyvy)
        - vy * (dx_vxvx + dy_vxvy)
    )
    return ThetaFields(theta_e=theta_e, theta_xx=theta_xx, theta_xy=theta_xy)


def fdlbm_step(fields: FieldSet, cfg: SchemeConfig, walls=None, force=None) -> FieldSet:
    """One finite-difference reconstruction step."""
    if fields.population_based:
        raise ConfigError("fdlbm needs a primitive FieldSet")
    fields = fields.copy()
    fluid = None if walls is None else walls.fluid_mask
    if force is not None:
        apply_force_strang(fields, force, "before", fluid)
    if walls is not None:
        walls.refresh_primitive(fields.rho, fields.vx, fields.vy)
    rho, vx, vy = fields.rho, fields.vx, fields.vy
    theta = fdlbm_theta(fields, cfg)
    if walls is not None and cfg.stencil == StencilKind.FIVE_POINT:
        # the five-point stencil reads two links deep, which straddles
        # the one-link wall closure; downgrade to the three-point form
        # on nodes within one link of the solid region
        th3 = fdlbm_theta(fields, cfg, stencil=StencilKind.THREE_POINT)
        nw = walls.near_wall_mask
        theta.theta_e[nw] = th3.theta_e[nw]
        theta.theta_xx[nw] = th3.theta_xx[nw]
        theta.theta_xy[nw] = th3.theta_xy[nw]
    m = lattice.equilibrium_moments(rho, rho * vx, rho * vy)
    m[E] += (1.0 - 1.0 / cfg.rates.s_e) * theta.theta_e
    m[XX] += (1.0 - 1.0 / cfg.rates.s_xx) * theta.theta_xx
    m[XY] += (1.0 - 1.0 / cfg.rates.s_xx) * theta.theta_xy
    fnew = stream(lattice.from_moments(m))
    rho2, jx2, jy2 = macroscopic(fnew)
    _check_density(rho2 if fluid is None else rho2[fluid])
    rho2, jx2, jy2 = _sanitize_solid(rho2, jx2, jy2, fluid)
    out = FieldSet.primitive(rho2, jx2 / rho2, jy2 / rho2)
    if force is not None:
        apply_force_strang(out, force, "after", fluid)
    return out


def step(fields: FieldSet, cfg: SchemeConfig, walls=None, force=None) -> FieldSet:
    """Dispatch one step of whatever scheme cfg selects."""
    if cfg.scheme in ("mrt", "bgk"):
        return mrt_step(fields, cfg, walls, force)
    if cfg.scheme == "acm":
        return acm_step(fields, cfg, walls, force)
    if cfg.scheme == "fdlbm":
        return fdlbm_step(fields, cfg, walls, force)
    raise ConfigError(f"unknown scheme {cfg.scheme!r}")
