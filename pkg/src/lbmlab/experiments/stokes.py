"""Decaying Stokes eigenmodes in a rigid disk.

The stream function psi = [J_m(a r/R) - J_m(a) (r/R)^m] cos(m theta)
satisfies no-slip on r = R when a is a zero of J_{m+1}: the radial part
F vanishes at R by construction and F'(R) = -(a/R) J_{m+1}(a) = 0.
Singlet modes are axisymmetric (m = 0, a the l-th zero of J_1); doublet
modes take m = l with a the first zero of J_{l+1}.  Each mode decays as
exp(-Gamma t) with Gamma = nu a^2 / R^2.

A run initializes the analytic velocity field at a small amplitude,
evolves it with walls active, projects the momentum onto the initial
mode shape each step, and fits the decay rate of the projection.  The
cosine-squared similarity between the momentum field and the mode shape
(purity) is tracked to detect contamination by other modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import lattice, schemes
from ..boundaries import INTERPOLATED, Disk, build_walls
from ..errors import ConfigError, NumericalError
from ..schemes import FieldSet, SchemeConfig
from .bessel import bessel_j, bessel_j_prime, zeros_of_j

SINGLET = "singlet"
DOUBLET = "doublet"


@dataclass(frozen=True)
class StokesDiskSpec:
    """One eigenmode in one disk."""

    family: str = SINGLET
    index: int = 1
    radius: float = 29.9
    extent: int = 64
    center: tuple[float, float] = (32.03, 32.07)
    amplitude: float = 1e-5
    max_steps: int = 12000
    fit_start: int = 50
    corr_floor: float = 0.01
    purity_steps: int = 1000
    population_rule: str = INTERPOLATED

    def validate(self) -> "StokesDiskSpec":
        if self.family not in (SINGLET, DOUBLET):
            raise ConfigError(f"unknown mode family {self.family!r}")
        if self.index < 1:
            raise ConfigError("mode index must be >= 1")
        if not 0.0 < self.amplitude <= 1e-4:
            raise ConfigError("amplitude must stay in the linear regime (0, 1e-4]")
        m, a = mode_parameters(self.family, self.index)
        if self.radius / a < 1.0:
            raise ConfigError(
                f"mode (m={m}, a={a:.3f}) is not resolvable on radius {self.radius}"
            )
        return self


def mode_parameters(family: str, index: int) -> tuple[int, float]:
    """(azimuthal order m, radial eigenvalue a) for one mode."""
    if family == SINGLET:
        return 0, zeros_of_j(1, index)[index - 1]
    if family == DOUBLET:
        return index, zeros_of_j(index + 1, 1)[0]
    raise ConfigError(f"unknown mode family {family!r}")


def mode_velocity(spec: StokesDiskSpec) -> tuple[np.ndarray, np.ndarray, int, float]:
    """Analytic (vx, vy) of the eigenmode on the grid, unscaled, plus
    (m, a).  The curl of psi is evaluated in closed form, not by
    stencils, so the initial state carries no discretization error."""
    m, a = mode_parameters(spec.family, spec.index)
    n = spec.extent
    cx, cy = spec.center
    r_cap = spec.radius
    x = np.arange(n, dtype=float)[:, None] - cx
    y = np.arange(n, dtype=float)[None, :] - cy
    r = np.maximum(np.hypot(x, y), 1e-12)
    theta = np.arctan2(y, x)
    st, ct = np.sin(theta), np.cos(theta)
    jma = bessel_j(m, a)
    f_val = bessel_j(m, a * r / r_cap) - jma * (r / r_cap) ** m
    f_prime = (a / r_cap) * bessel_j_prime(m, a * r / r_cap)
    if m > 0:
        f_prime = f_prime - jma * m * r ** (m - 1) / r_cap**m
    cos_m = np.cos(m * theta)
    sin_m = np.sin(m * theta)
    vx = f_prime * st * cos_m - (m * f_val / r) * ct * sin_m
    vy = -f_prime * ct * cos_m - (m * f_val / r) * st * sin_m
    return vx, vy, m, a


@dataclass
class StokesResult:
    family: str
    index: int
    m: int
    a: float
    a_squared: float
    nu0: float
    gamma_theory: float
    gamma_measured: float
    nu_effective: float
    rel_deviation: float
    min_purity: float
    contaminated: bool
    steps_used: int
    fit_start: int
    fit_stop: int
    projection: np.ndarray
    purity: np.ndarray
    spec: StokesDiskSpec


def run_stokes_disk(cfg: SchemeConfig, spec: StokesDiskSpec) -> StokesResult:
    """Evolve one eigenmode and measure its decay rate.

    Returns the relative deviation of the effective viscosity
    (nu_eff / nu0 - 1), which equals the relative deviation of the decay
    rate from Gamma = nu0 a^2 / R^2."""
    spec.validate()
    cfg.validate()
    n = spec.extent
    geom = Disk(cx=spec.center[0], cy=spec.center[1], radius=spec.radius)
    walls = build_walls(geom, n, n, population_rule=spec.population_rule)
    fluid = walls.fluid_mask
    vx, vy, m, a = mode_velocity(spec)
    speed = np.hypot(vx, vy)
    scale = spec.amplitude / speed[fluid].max()
    ux = np.where(fluid, vx * scale, 0.0)
    uy = np.where(fluid, vy * scale, 0.0)
    rho = np.ones((n, n))
    if cfg.population_based:
        fields = FieldSet.populations(lattice.equilibrium_populations(rho, ux, uy))
    else:
        fields = FieldSet.primitive(rho, ux, uy)

    mode_norm = float(np.sum(ux[fluid] ** 2 + uy[fluid] ** 2))
    projections: list[float] = []
    purities: list[float] = []

    def measure(fs: FieldSet) -> None:
        _, jx, jy = fs.macros()
        dot = float(np.sum(jx[fluid] * ux[fluid] + jy[fluid] * uy[fluid]))
        total = float(np.sum(jx[fluid] ** 2 + jy[fluid] ** 2))
        projections.append(dot / mode_norm)
        purities.append(dot * dot / (mode_norm * total) if total > 0 else 0.0)

    measure(fields)
    p0 = abs(projections[0])
    failure = None
    for _ in range(spec.max_steps):
        try:
            fields = schemes.step(fields, cfg, walls=walls)
        except NumericalError as exc:
            failure = str(exc)
            break
        measure(fields)
        if abs(projections[-1]) < spec.corr_floor * p0:
            break
    if failure is not None:
        raise NumericalError(f"stokes run failed at step {len(projections)}: {failure}")

    proj = np.array(projections)
    fit_stop = len(proj)
    fit_start = spec.fit_start
    if fit_stop - fit_start < 20:
        raise NumericalError(
            f"stokes fit window [{fit_start}, {fit_stop}) has fewer than 20 samples"
        )
    t = np.arange(fit_start, fit_stop, dtype=float)
    gamma_measured = -float(np.polyfit(t, np.log(np.abs(proj[fit_start:fit_stop])), 1)[0])

    nu0 = cfg.viscosity
    r_cap = spec.radius
    gamma_theory = nu0 * a * a / (r_cap * r_cap)
    nu_effective = gamma_measured * r_cap * r_cap / (a * a)
    purity_horizon = min(spec.purity_steps + 1, len(purities))
    min_purity = float(np.min(purities[:purity_horizon]))
    return StokesResult(
        family=spec.family,
        index=spec.index,
        m=m,
        a=a,
        a_squared=a * a,
        nu0=nu0,
        gamma_theory=gamma_theory,
        gamma_measured=gamma_measured,
        nu_effective=nu_effective,
        rel_deviation=nu_effective / nu0 - 1.0,
        min_purity=min_purity,
        contaminated=min_purity < 0.9,
        steps_used=len(proj) - 1,
        fit_start=fit_start,
        fit_stop=fit_stop,
        projection=proj,
        purity=np.array(purities),
        spec=spec,
    )
