"""Decaying transverse plane wave in a fully periodic box.

A small transverse velocity wave is superposed on a uniform stream V
aligned with the wave vector.  Each step, the velocity fluctuation is
projected onto the initial transverse mode; the complex correlation
C(t) decays as C(0) exp(-Gamma t) with Gamma = -log z of the shear
branch, so the log-linear fit of C over the configured window measures
the per-step attenuation (Re) and frequency (Im) directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import lattice, schemes
from ..errors import NumericalError
from ..schemes import FieldSet, SchemeConfig

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ShearWaveSpec:
    """Grid, wave vector (integer multiples of 2 pi / extent), amplitude,
    background speed along the wave vector, and the fit window."""

    direction: tuple[int, int] = (3, 2)
    extent: int = 191
    extent_y: int | None = None
    amplitude: float = 1e-5
    mean_velocity: float = 0.0
    max_steps: int = 2000
    fit_start: int = 50
    corr_floor: float = 0.01
    blowup_factor: float = 1e3

    @property
    def shape(self) -> tuple[int, int]:
        return self.extent, self.extent_y if self.extent_y is not None else self.extent

    def wave_vector(self) -> tuple[float, float, float]:
        nx, ny = self.shape
        kx = TWO_PI * self.direction[0] / nx
        ky = TWO_PI * self.direction[1] / ny
        return kx, ky, math.hypot(kx, ky)

    def validate(self) -> "ShearWaveSpec":
        if min(self.shape) < 8:
            raise ValueError("extents must be at least 8 nodes")
        if not 0.0 < self.amplitude <= 1e-4:
            raise ValueError("amplitude must stay in the linear regime (0, 1e-4]")
        if self.direction == (0, 0):
            raise ValueError("direction must be nonzero")
        if self.fit_start >= self.max_steps:
            raise ValueError("fit window starts after the run ends")
        return self


@dataclass
class ShearWaveResult:
    kx: float
    ky: float
    k: float
    gamma: complex
    nu_eff: float
    correlation: np.ndarray
    steps_used: int
    fit_start: int
    fit_stop: int
    stopped_early: bool
    failure: str | None = None
    spec: ShearWaveSpec | None = None

    @property
    def normalized(self) -> np.ndarray:
        return np.abs(self.correlation) / abs(self.correlation[0])


def _initial_state(cfg: SchemeConfig, spec: ShearWaveSpec):
    nx, ny = spec.shape
    kx, ky, k = spec.wave_vector()
    x = np.arange(nx, dtype=float)[:, None]
    y = np.arange(ny, dtype=float)[None, :]
    phase = kx * x + ky * y
    ex, ey = kx / k, ky / k
    tx, ty = -ey, ex
    a, v = spec.amplitude, spec.mean_velocity
    rho = np.ones((nx, ny))
    jx = a * tx * np.cos(phase) + v * ex
    jy = a * ty * np.cos(phase) + v * ey
    if cfg.population_based:
        fields = FieldSet.populations(lattice.equilibrium_populations(rho, jx, jy))
    else:
        fields = FieldSet.primitive(rho, jx / rho, jy / rho)
    return fields, phase, (tx, ty)


def _project(fields: FieldSet, phase, transverse, norm) -> complex:
    tx, ty = transverse
    _, jx, jy = fields.macros()
    djx = jx - jx.mean()
    djy = jy - jy.mean()
    signal = djx * tx + djy * ty
    return 2.0 * complex(np.sum(signal * np.exp(-1j * phase))) / norm


def run_shear_wave(cfg: SchemeConfig, spec: ShearWaveSpec) -> ShearWaveResult:
    """Evolve the wave and fit C(t) = C(0) exp(-Gamma t) over
    [fit_start, t_stop]; t_stop is the first step where |C| falls below
    corr_floor * |C(0)| (decay) or exceeds blowup_factor * |C(0)|
    (instability), else max_steps."""
    spec.validate()
    cfg.validate()
    kx, ky, k = spec.wave_vector()
    fields, phase, transverse = _initial_state(cfg, spec)
    norm = spec.shape[0] * spec.shape[1]
    series = [_project(fields, phase, transverse, norm)]
    failure = None
    stopped_early = False
    c0 = abs(series[0])
    for _ in range(spec.max_steps):
        try:
            fields = schemes.step(fields, cfg)
        except NumericalError as exc:
            failure = str(exc)
            stopped_early = True
            break
        c = _project(fields, phase, transverse, norm)
        series.append(c)
        if not np.isfinite(c.real) or not np.isfinite(c.imag):
            failure = "correlation lost to overflow"
            stopped_early = True
            break
        if abs(c) < spec.corr_floor * c0 or abs(c) > spec.blowup_factor * c0:
            stopped_early = True
            break
    correlation = np.array(series)
    good = np.isfinite(correlation.real) & np.isfinite(correlation.imag) & (np.abs(correlation) > 0)
    fit_stop = int(np.flatnonzero(good)[-1]) + 1 if good.any() else 0
    fit_start = spec.fit_start
    if fit_stop - fit_start < 10:
        raise NumericalError(
            f"shear-wave fit window [{fit_start}, {fit_stop}) has fewer than 10 samples"
        )
    t = np.arange(fit_start, fit_stop, dtype=float)
    window = correlation[fit_start:fit_stop]
    log_mag = np.log(np.abs(window))
    re_gamma = -float(np.polyfit(t, log_mag, 1)[0])
    im_gamma = -float(np.polyfit(t, np.unwrap(np.angle(window)), 1)[0])
    return ShearWaveResult(
        kx=kx,
        ky=ky,
        k=k,
        gamma=complex(re_gamma, im_gamma),
        nu_eff=re_gamma / k**2,
        correlation=correlation,
        steps_used=len(correlation) - 1,
        fit_start=fit_start,
        fit_stop=fit_stop,
        stopped_early=stopped_early,
        failure=failure,
        spec=spec,
    )
