"""Plane-wave (von Neumann) analysis of the time steppers.

The amplification matrix H(k) is measured from the real scheme, not
re-derived symbolically: each state component is perturbed by a cosine
and a sine plane wave of amplitude delta on a minimal periodic grid, one
step of the actual update is applied, and the response is Fourier
projected back onto the probe wave.  Central differences in delta remove
the quadratic terms, so H is the exact Jacobian spectrum at machine
precision.  Eigenvalues z of H give the per-step attenuation
Gamma = -log z; the shear branch yields the k-dependent viscosity
nu(k) = Re Gamma / k^2 and its small-k fit Gamma = nu0 k^2 + nu2 k^4.

Wave numbers must be commensurate with a periodic grid (k = 2 pi a / N);
`commensurate_k` builds the nearest such wave vector along an integer
direction.  Modes with k exactly 0 or pi in both components degenerate
(the sine probe vanishes) and are rejected, except the plain k = 0 probe
used for conservation checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import lattice, schemes
from .errors import ConfigError, NumericalError
from .lattice import JX, JY, RHO
from .schemes import FieldSet, SchemeConfig

TWO_PI = 2.0 * math.pi

SHEAR = "shear"
ACOUSTIC_PLUS = "acoustic+"
ACOUSTIC_MINUS = "acoustic-"
KINETIC = "kinetic"


@dataclass(frozen=True)
class PlaneWaveProbe:
    """One plane wave on a uniform background."""

    kx: float
    ky: float
    velocity: tuple[float, float] = (0.0, 0.0)
    base_rho: float = 1.0


def _axis_extent(k: float, max_den: int = 4096) -> int:
    """Smallest periodic extent commensurate with k, padded to >= 8."""
    cycles = k / TWO_PI
    frac = Fraction(cycles).limit_denominator(max_den)
    if abs(cycles - float(frac)) > 1e-9:
        raise ConfigError(
            f"wave number {k!r} is not commensurate with any grid of period <= {max_den}"
        )
    n0 = frac.denominator
    return n0 * max(1, math.ceil(8 / n0))


def _half_turn(k: float) -> bool:
    frac = Fraction(k / TWO_PI).limit_denominator(4096)
    return frac != 0 and frac.denominator <= 2


def commensurate_k(direction, k_target: float, max_den: int = 256, rel_tol: float = 0.05):
    """Nearest commensurate wave vector of magnitude ~ k_target along an
    integer direction (p, q).  Returns (kx, ky, k_actual).

    Prefers grid periods up to max_den; when the target needs a finer
    grid to stay within rel_tol of the requested magnitude, the period
    cap doubles as needed up to the hard limit of 4096."""
    p, q = int(direction[0]), int(direction[1])
    if p == 0 and q == 0:
        raise ConfigError("direction must be a nonzero integer vector")
    norm = math.hypot(p, q)
    cycles = k_target / (TWO_PI * norm)
    den = max_den
    while True:
        fs = Fraction(cycles).limit_denominator(den)
        if fs > 0 and abs(float(fs) / cycles - 1.0) <= rel_tol:
            break
        if den >= 4096:
            raise ConfigError(
                f"k = {k_target} along {(p, q)} has no commensurate probe within "
                f"{rel_tol:.0%} on grids of period <= 4096"
            )
        den = min(2 * den, 4096)
    kx = TWO_PI * float(p * fs)
    ky = TWO_PI * float(q * fs)
    return kx, ky, TWO_PI * float(fs) * norm


def _population_state(rho0, vx0, vy0, nx, ny):
    shape = (nx, ny)
    rho = np.full(shape, rho0)
    return lattice.equilibrium_populations(rho, rho * vx0, rho * vy0)


def _step_response(cfg, probe, comp, bump, nx, ny):
    """State after one step from the uniform background plus a bump on
    one component; components are populations or (rho, Jx, Jy)."""
    rho0, (vx0, vy0) = probe.base_rho, probe.velocity
    if cfg.population_based:
        f = _population_state(rho0, vx0, vy0, nx, ny)
        f[comp] = f[comp] + bump
        out = schemes.step(FieldSet.populations(f), cfg)
        return out.f
    rho = np.full((nx, ny), rho0)
    jx = np.full((nx, ny), rho0 * vx0)
    jy = np.full((nx, ny), rho0 * vy0)
    if comp == RHO:
        rho = rho + bump
    elif comp == JX:
        jx = jx + bump
    else:
        jy = jy + bump
    out = schemes.step(FieldSet.primitive(rho, jx / rho, jy / rho), cfg)
    return np.stack([out.rho, out.rho * out.vx, out.rho * out.vy])


def amplification_matrix(cfg: SchemeConfig, probe: PlaneWaveProbe, delta: float = 1e-6) -> np.ndarray:
    """Complex n x n one-step propagator of plane-wave fluctuations
    (n = 9 for population schemes, 3 for reconstruction schemes)."""
    cfg.validate()
    kx, ky = probe.kx, probe.ky
    at_zero = kx == 0.0 and ky == 0.0
    if not at_zero and _half_turn(kx) and _half_turn(ky):
        raise ConfigError("probes with both components at 0 or pi are degenerate")
    nx, ny = _axis_extent(kx), _axis_extent(ky)
    x = np.arange(nx, dtype=float)[:, None]
    y = np.arange(ny, dtype=float)[None, :]
    phase = kx * x + ky * y
    cosw = np.cos(phase)
    sinw = np.sin(phase)
    proj = np.exp(-1j * phase)
    norm = nx * ny
    n = 9 if cfg.population_based else 3
    h = np.zeros((n, n), dtype=complex)
    for j in range(n):
        rc = (
            _step_response(cfg, probe, j, delta * cosw, nx, ny)
            - _step_response(cfg, probe, j, -delta * cosw, nx, ny)
        ) / (2.0 * delta)
        if at_zero:
            h[:, j] = rc.mean(axis=(1, 2))
            continue
        rs = (
            _step_response(cfg, probe, j, delta * sinw, nx, ny)
            - _step_response(cfg, probe, j, -delta * sinw, nx, ny)
        ) / (2.0 * delta)
        pc = 2.0 * np.einsum("axy,xy->a", rc, proj) / norm
        ps = 2.0 * np.einsum("axy,xy->a", rs, proj) / norm
        h[:, j] = 0.5 * (pc + 1j * ps)
    return h


@dataclass
class ModeBranch:
    """One eigenvalue branch followed across the k samples."""

    label: str
    k: np.ndarray
    z: np.ndarray
    gamma: np.ndarray
    vectors: np.ndarray
    ambiguous: np.ndarray


def _safe_log(z: np.ndarray) -> np.ndarray:
    tiny = np.abs(z) < 1e-300
    out = -np.log(np.where(tiny, 1.0, z))
    out[tiny] = np.inf
    return out


def _moment_rows(vectors: np.ndarray, population: bool) -> np.ndarray:
    if population:
        return lattice.moment_matrix().m @ vectors
    return vectors


def _initial_labels(w, v, kx, ky, population):
    n = len(w)
    m = _moment_rows(v, population)
    k = math.hypot(kx, ky)
    ex, ey = kx / k, ky / k
    jt = np.abs(-ey * m[JX] + ex * m[JY])
    jl = np.abs(ex * m[JX] + ey * m[JY])
    rr = np.abs(m[RHO])
    labels = [KINETIC] * n
    shear = int(np.argmax(jt))
    labels[shear] = SHEAR
    acoustic_score = rr + jl
    acoustic_score[shear] = -np.inf
    pair = np.argsort(acoustic_score)[-2:]
    freq = [-np.angle(w[i]) for i in pair]
    plus, minus = (pair[0], pair[1]) if freq[0] >= freq[1] else (pair[1], pair[0])
    labels[int(plus)] = ACOUSTIC_PLUS
    labels[int(minus)] = ACOUSTIC_MINUS
    return labels


def dispersion_modes(
    cfg: SchemeConfig,
    direction,
    k_values,
    velocity=None,
    base_rho: float = 1.0,
    delta: float = 1e-6,
    max_den: int = 256,
) -> list[ModeBranch]:
    """Eigenvalue branches along one direction, tracked by eigenvector
    overlap from sample to sample and labeled at the smallest k.

    ``velocity`` defaults to the background stored on the scheme config.
    """
    if velocity is None:
        velocity = cfg.mean_velocity
    targets = sorted(float(k) for k in k_values)
    if not targets or targets[0] <= 0.0:
        raise ConfigError("k samples must be positive")
    seen = set()
    samples = []
    for kt in targets:
        kx, ky, ka = commensurate_k(direction, kt, max_den)
        key = round(ka, 12)
        if key in seen:
            continue
        seen.add(key)
        samples.append((kx, ky, ka))
    ks = np.array([s[2] for s in samples])
    k_edge = math.pi * math.hypot(*direction) / max(abs(int(direction[0])), abs(int(direction[1])))
    if np.any(ks >= k_edge):
        raise ConfigError(
            f"k samples must keep both components below pi (k < {k_edge:.6g} along {tuple(direction)})"
        )
    spectra = []
    vectors = []
    for kx, ky, _ in samples:
        h = amplification_matrix(
            cfg, PlaneWaveProbe(kx=kx, ky=ky, velocity=velocity, base_rho=base_rho), delta
        )
        w, v = np.linalg.eig(h)
        spectra.append(w)
        vectors.append(v)

    n = len(spectra[0])
    s_count = len(samples)
    order = np.arange(n)
    z_tab = np.empty((n, s_count), dtype=complex)
    v_tab = np.empty((n, s_count, n), dtype=complex)
    amb_tab = np.zeros((n, s_count), dtype=bool)
    z_tab[:, 0] = spectra[0][order]
    v_tab[:, 0] = vectors[0][:, order].T
    prev = vectors[0][:, order]
    for s in range(1, s_count):
        cur = vectors[s]
        overlap = np.abs(prev.conj().T @ cur)
        row, col = linear_sum_assignment(-overlap)
        matched = col[np.argsort(row)]
        z_tab[:, s] = spectra[s][matched]
        v_tab[:, s] = cur[:, matched].T
        amb_tab[:, s] = overlap[np.arange(n), matched] < 0.5
        prev = cur[:, matched]

    labels = _initial_labels(
        z_tab[:, 0], v_tab[:, 0].T, samples[0][0], samples[0][1], cfg.population_based
    )
    return [
        ModeBranch(
            label=labels[i],
            k=ks.copy(),
            z=z_tab[i],
            gamma=_safe_log(z_tab[i]),
            vectors=v_tab[i],
            ambiguous=amb_tab[i],
        )
        for i in range(n)
    ]


def branch(branches: list[ModeBranch], label: str) -> ModeBranch:
    for b in branches:
        if b.label == label:
            return b
    raise NumericalError(f"no branch labeled {label!r}")


@dataclass
class TransportFit:
    """Small-k transport coefficients plus the sampled curve."""

    nu0: float
    nu2: float
    c_s: float | None
    gamma_s: float | None
    residual: float
    unstable: bool
    first_unstable_k: float | None
    k: np.ndarray
    gamma: np.ndarray
    nu_k: np.ndarray
    max_abs_z: np.ndarray
    ambiguous: bool


def _intercept_fit(x, y):
    coeffs = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(np.polyval(coeffs, x) - y)))
    return float(coeffs[1]), float(coeffs[0]), resid


def effective_viscosity_curve(
    cfg: SchemeConfig,
    direction,
    k_max: float = 0.5,
    samples: int = 12,
    fit_k_max: float | None = None,
    velocity=None,
    base_rho: float = 1.0,
    delta: float = 1e-6,
    max_den: int = 256,
    fit_samples: int = 6,
) -> TransportFit:
    """nu(k) = Re Gamma_shear / k^2 along one direction, with the
    weighted small-k fit Gamma = nu0 k^2 + nu2 k^4 (weights 1/k^4, i.e.
    ordinary least squares on Gamma/k^2 vs k^2).

    The fit uses samples with k <= fit_k_max (default: the smaller of
    k_max and 0.5); instability truncates the fit window at the first
    unstable sample and raises the flag.
    """
    if fit_k_max is None:
        fit_k_max = min(k_max, 0.5)
    targets = list(np.linspace(k_max / samples, k_max, samples))
    if fit_k_max < k_max and fit_samples > 0:
        targets += list(np.linspace(fit_k_max / fit_samples, fit_k_max, fit_samples))
    branches = dispersion_modes(
        cfg, direction, targets, velocity=velocity, base_rho=base_rho,
        delta=delta, max_den=max_den,
    )
    shear = branch(branches, SHEAR)
    ks = shear.k
    max_abs_z = np.max(np.abs(np.stack([b.z for b in branches])), axis=0)
    unstable_idx = np.flatnonzero(max_abs_z > 1.0 + 1e-9)
    unstable = bool(len(unstable_idx))
    first_bad = float(ks[unstable_idx[0]]) if unstable else None
    hydro = (SHEAR, ACOUSTIC_PLUS, ACOUSTIC_MINUS)
    ambiguous = any(bool(b.ambiguous.any()) for b in branches if b.label in hydro)

    nu_k = np.real(shear.gamma) / ks**2
    usable = ks <= fit_k_max + 1e-12
    if unstable:
        usable &= ks < first_bad
    if usable.sum() < 3:
        if not unstable:
            raise NumericalError("fewer than three samples in the fit window")
        # instability swallowed the whole window: report the flag, no fit
        nu0 = nu2 = resid = float("nan")
    else:
        x = ks[usable] ** 2
        nu0, nu2, resid = _intercept_fit(x, nu_k[usable])

    c_s = gamma_s = None
    if usable.sum() >= 3:
        try:
            ac_p = branch(branches, ACOUSTIC_PLUS)
            ac_m = branch(branches, ACOUSTIC_MINUS)
        except NumericalError:
            ac_p = ac_m = None
        if ac_p is not None and ac_m is not None:
            speed = (np.imag(ac_p.gamma) - np.imag(ac_m.gamma)) / (2.0 * ks)
            damp = (np.real(ac_p.gamma) + np.real(ac_m.gamma)) / (2.0 * ks**2)
            if np.all(np.isfinite(speed[usable])) and np.all(np.isfinite(damp[usable])):
                x = ks[usable] ** 2
                c_s, _, _ = _intercept_fit(x, speed[usable])
                gamma_s, _, _ = _intercept_fit(x, damp[usable])

    return TransportFit(
        nu0=nu0,
        nu2=nu2,
        c_s=c_s,
        gamma_s=gamma_s,
        residual=resid,
        unstable=unstable,
        first_unstable_k=first_bad,
        k=ks,
        gamma=shear.gamma,
        nu_k=nu_k,
        max_abs_z=max_abs_z,
        ambiguous=ambiguous,
    )


AS_PRINTED = "as_printed"
TABLE_MATCHED = "table_matched"


def closed_form_hyperviscosity(kind, s_xx: float, phi: float, sign_variant: str = AS_PRINTED) -> float:
    """Reference shear-hyperviscosity formulas for the three stencils.

    phi is the wave-vector angle in radians.  The printed 3- and 5-point
    expressions reproduce the reference values only when the angular
    term enters with the opposite sign; `table_matched` applies that
    flip.  The 9-point expression does not reproduce its reference value
    at phi = 0 under either variant; the numerical fit is authoritative
    for that stencil.
    """
    from .stencils import StencilKind

    kind = StencilKind(kind)
    if not 0.0 < s_xx < 2.0:
        raise ConfigError("s_xx must lie in (0, 2)")
    if sign_variant not in (AS_PRINTED, TABLE_MATCHED):
        raise ConfigError(f"unknown sign variant {sign_variant!r}")
    sigma = 1.0 / s_xx - 0.5
    g = math.cos(phi) ** 2 - math.cos(phi) ** 4
    if kind == StencilKind.THREE_POINT:
        base = (2 * sigma - 3) * (2 * sigma - 1) / 72.0
        angular = (8 * sigma - 3) / 36.0
    elif kind == StencilKind.FIVE_POINT:
        base = sigma * (2 * sigma - 1) / 36.0
        angular = sigma / 18.0
    else:
        base = (3 - 2 * sigma) * (2 * sigma - 1) / (24.0 * sigma)
        angular = (20 * sigma - 9) / (12.0 * sigma)
    sign = -1.0 if sign_variant == AS_PRINTED else 1.0
    return base + sign * angular * g


def acm_predictions(nu: float, v: float = 0.0):
    """Closed forms for the link-wise scheme: sound speed, sound damping
    coefficient, and the velocity-dependent effective shear viscosity."""
    if not 0.0 < nu <= 1.0 / 6.0:
        raise ConfigError("acm requires 0 < nu <= 1/6")
    return math.sqrt(2.0 * nu), nu / 2.0 + 1.0 / 12.0, nu - 0.5 * v * v
