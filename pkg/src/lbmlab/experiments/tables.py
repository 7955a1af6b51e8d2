"""Parameter sweeps behind the reference tables and figure data sets.

Each driver returns a TableData: column names, rows, and the parameter
dictionary that fully determines every number in the rows.  Reference
values from the published study are embedded as comparison columns;
measured columns always come from this package's own runs.

Sweeps are embarrassingly parallel across rows; the worker count comes
from the LBMLAB_WORKERS environment variable (default 1).  Results are
assembled in submission order, so output is identical for any worker
count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..boundaries import BOUNCE_BACK, INTERPOLATED
from ..errors import ConfigError, NumericalError
from ..schemes import SchemeConfig
from ..stencils import StencilKind
from ..vonneumann import effective_viscosity_curve
from .poiseuille import PoiseuilleSpec, run_poiseuille
from .shearwave import ShearWaveSpec, run_shear_wave
from .stokes import DOUBLET, SINGLET, StokesDiskSpec, run_stokes_disk

NU_TABLE1 = (1.0 / 1.85 - 0.5) / 3.0  # s_xx = 1.85
NU_QUARTIC = 1.0 / math.sqrt(108.0)

DIRECTIONS = ((1, 0), (2, 1), (1, 1))

# Reference hyperviscosity nu2 per (stencil points, direction), s_xx = 1.85.
HYPERVISCOSITY_REFERENCE = {
    (3, (1, 0)): 0.03725,
    (3, (2, 1)): 0.02534,
    (3, (1, 1)): 0.01867,
    (5, (1, 0)): -0.00103,
    (5, (2, 1)): -0.00067,
    (5, (1, 1)): -0.00047,
    (9, (1, 0)): 0.03725,
    (9, (2, 1)): 0.00079,
    (9, (1, 1)): -0.0196,
}

# Reference relative viscosity deviations for the disk modes at
# nu0 = 0.05: (family, index) -> (a^2, fd3, fd5, bgk, mrt_quartic).
STOKES_REFERENCE_005 = {
    (SINGLET, 1): (14.68200, 0.00729, 0.00003, 0.00053, -0.00010),
    (SINGLET, 2): (49.21850, 0.02191, -0.00141, 0.00179, -0.00114),
    (SINGLET, 3): (103.49950, 0.04663, -0.00313, 0.00382, -0.00276),
    (SINGLET, 4): (177.52080, 0.07969, -0.00400, 0.00672, -0.00489),
    (SINGLET, 5): (271.28171, 0.12335, -0.00358, 0.01071, -0.00752),
    (SINGLET, 6): (384.78189, 0.17778, -0.00099, 0.01623, -0.01053),
    (DOUBLET, 1): (26.37460, 0.01324, -0.00090, 0.00106, -0.00042),
    (DOUBLET, 2): (40.70650, 0.02078, -0.00103, 0.00164, -0.00087),
    (DOUBLET, 3): (57.58290, 0.02959, -0.00147, 0.00236, -0.00133),
    (DOUBLET, 4): (76.93890, 0.03966, -0.00186, 0.00323, -0.00183),
    (DOUBLET, 5): (98.72630, 0.05060, -0.00231, 0.00424, -0.00236),
    (DOUBLET, 6): (122.90760, 0.06241, -0.00254, 0.00538, -0.00293),
    (DOUBLET, 7): (149.45290, 0.07545, -0.00275, 0.00667, -0.00354),
    (DOUBLET, 8): (178.33730, 0.08948, -0.00267, 0.00809, -0.00419),
    (DOUBLET, 9): (209.54010, 0.10418, -0.00230, 0.00965, -0.00488),
    (DOUBLET, 10): (243.04340, 0.12003, -0.00175, 0.01138, -0.00563),
    (DOUBLET, 11): (278.83160, 0.13682, -0.00099, 0.01328, -0.00643),
}

# Same at nu0 = 1/sqrt(108):
# (family, index) -> (a^2, fd3, fd5, bgk, mrt, mrt_quartic).
STOKES_REFERENCE_Q = {
    (SINGLET, 1): (14.68200, 0.00165, -0.00052, 0.00069, 0.00070, 0.00035),
    (SINGLET, 2): (49.21850, 0.00628, -0.00104, 0.00179, 0.00189, 0.00010),
    (SINGLET, 3): (103.49950, 0.01382, -0.00175, 0.00355, 0.00377, -0.00028),
    (SINGLET, 4): (177.52080, 0.02399, -0.00230, 0.00599, 0.00640, -0.00078),
    (SINGLET, 5): (271.28171, 0.03665, -0.00244, 0.00923, 0.00989, -0.00138),
    (SINGLET, 6): (384.78189, 0.05198, -0.00202, 0.01341, 0.01442, -0.00204),
    (DOUBLET, 1): (26.37460, 0.00410, -0.00027, 0.00143, 0.00147, 0.00058),
    (DOUBLET, 2): (40.70650, 0.00662, -0.00029, 0.00189, 0.00197, 0.00044),
    (DOUBLET, 3): (57.58290, 0.00943, -0.00053, 0.00249, 0.00262, 0.00035),
    (DOUBLET, 4): (76.93890, 0.01251, -0.00066, 0.00321, 0.00339, 0.00029),
    (DOUBLET, 5): (98.72630, 0.01601, -0.00086, 0.00404, 0.00428, 0.00025),
    (DOUBLET, 6): (122.90760, 0.01979, -0.00101, 0.00498, 0.00530, 0.00023),
    (DOUBLET, 7): (149.45290, 0.02380, -0.00115, 0.00603, 0.00643, 0.00021),
    (DOUBLET, 8): (178.33730, 0.02814, -0.00121, 0.00720, 0.00768, 0.00022),
    (DOUBLET, 9): (209.54010, 0.03281, -0.00126, 0.00846, 0.00905, 0.00023),
    (DOUBLET, 10): (243.04340, 0.03766, -0.00123, 0.00983, 0.01053, 0.00022),
    (DOUBLET, 11): (278.83160, 0.04274, -0.00118, 0.01133, 0.01215, 0.00022),
}

FIG1_VELOCITIES = (0.0, 0.05, 0.10, 0.15, 0.20)


@dataclass
class TableData:
    """One rectangular artifact plus the parameters that produced it."""

    name: str
    columns: list[str]
    rows: list[list]
    params: dict


def worker_count() -> int:
    raw = os.environ.get("LBMLAB_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"LBMLAB_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, n)


def _map_ordered(fn, items):
    """Map preserving order, optionally across worker threads."""
    n = worker_count()
    if n == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def table1_data(fit_k_max: float = 0.12, samples: int = 10) -> TableData:
    """Fitted hyperviscosity nu2 of the reconstruction scheme for the
    three stencils and three wave-vector directions at s_xx = 1.85."""
    cells = [
        (points, direction)
        for points in (3, 5, 9)
        for direction in DIRECTIONS
    ]

    def run(cell):
        points, direction = cell
        cfg = SchemeConfig.fdlbm(NU_TABLE1, stencil=StencilKind(points))
        fit = effective_viscosity_curve(
            cfg, direction, k_max=fit_k_max, samples=samples, fit_k_max=fit_k_max
        )
        return fit

    fits = _map_ordered(run, cells)
    rows = []
    for (points, direction), fit in zip(cells, fits):
        angle = math.degrees(math.atan2(direction[1], direction[0]))
        rows.append(
            [
                points,
                direction[0],
                direction[1],
                angle,
                fit.nu2,
                HYPERVISCOSITY_REFERENCE[(points, direction)],
                fit.nu0,
                fit.residual,
            ]
        )
    return TableData(
        name="table1",
        columns=[
            "stencil_points",
            "direction_p",
            "direction_q",
            "angle_deg",
            "nu2_measured",
            "nu2_reference",
            "nu0_measured",
            "fit_residual",
        ],
        rows=rows,
        params={
            "scheme": "fdlbm",
            "s_xx": 1.85,
            "nu0": NU_TABLE1,
            "fit_k_max": fit_k_max,
            "samples": samples,
            "directions": "{1,0} {2,1} {1,1}",
        },
    )


def _stokes_columns(scheme_names):
    cols = ["family", "index", "a_squared", "a_squared_reference"]
    for name in scheme_names:
        cols += [f"dev_{name}", f"dev_{name}_reference", f"purity_{name}"]
    return cols


def _stokes_table(name, nu0, scheme_names, configs, reference, max_index=None):
    modes = [(SINGLET, l) for l in range(1, 7)] + [(DOUBLET, l) for l in range(1, 12)]
    if max_index is not None:
        modes = [m for m in modes if m[1] <= max_index]

    jobs = [
        (family, index, cfg_name, cfg)
        for family, index in modes
        for cfg_name, cfg in zip(scheme_names, configs)
    ]

    def run(job):
        family, index, _, cfg = job
        spec = StokesDiskSpec(family=family, index=index)
        return run_stokes_disk(cfg, spec)

    results = _map_ordered(run, jobs)
    by_mode = {}
    for job, res in zip(jobs, results):
        family, index, cfg_name, _ = job
        by_mode.setdefault((family, index), {})[cfg_name] = res

    rows = []
    for family, index in modes:
        ref = reference[(family, index)]
        per = by_mode[(family, index)]
        row = [family, index, per[scheme_names[0]].a_squared, ref[0]]
        for pos, cfg_name in enumerate(scheme_names):
            res = per[cfg_name]
            row += [res.rel_deviation, ref[1 + pos], res.min_purity]
        rows.append(row)
    return TableData(
        name=name,
        columns=_stokes_columns(scheme_names),
        rows=rows,
        params={
            "nu0": nu0,
            "radius": 29.9,
            "extent": 64,
            "center": "(32.03, 32.07)",
            "amplitude": 1e-5,
            "schemes": " ".join(scheme_names),
            "population_rule": INTERPOLATED,
        },
    )


def table2_data(max_index: int | None = None) -> TableData:
    """Disk-mode viscosity deviations at nu0 = 0.05."""
    nu0 = 0.05
    names = ["fd3", "fd5", "bgk", "mrt_quartic"]
    configs = [
        SchemeConfig.fdlbm(nu0, stencil=StencilKind.THREE_POINT),
        SchemeConfig.fdlbm(nu0, stencil=StencilKind.FIVE_POINT),
        SchemeConfig.bgk(nu0),
        SchemeConfig.mrt(nu0, quartic=True),
    ]
    return _stokes_table("table2", nu0, names, configs, STOKES_REFERENCE_005, max_index)


def table3_data(max_index: int | None = None) -> TableData:
    """Disk-mode viscosity deviations at nu0 = 1/sqrt(108)."""
    nu0 = NU_QUARTIC
    names = ["fd3", "fd5", "bgk", "mrt", "mrt_quartic"]
    configs = [
        SchemeConfig.fdlbm(nu0, stencil=StencilKind.THREE_POINT),
        SchemeConfig.fdlbm(nu0, stencil=StencilKind.FIVE_POINT),
        SchemeConfig.bgk(nu0),
        SchemeConfig.mrt(nu0),
        SchemeConfig.mrt(nu0, quartic=True),
    ]
    return _stokes_table("table3", nu0, names, configs, STOKES_REFERENCE_Q, max_index)


def fig1_data(nu: float = 0.01) -> TableData:
    """Correlation decay of an advected transverse wave for five mean
    speeds with the link-wise scheme; led to its velocity-defect form."""
    threshold = math.sqrt(2.0 * nu)

    def run(v):
        steps = 2000 if v <= threshold else 250
        spec = ShearWaveSpec(mean_velocity=v, max_steps=steps)
        return run_shear_wave(SchemeConfig.acm(nu), spec)

    results = _map_ordered(run, FIG1_VELOCITIES)
    longest = max(len(r.correlation) for r in results)
    rows = []
    for t in range(longest):
        row = [t]
        for res in results:
            ratio = res.normalized
            row.append(float(ratio[t]) if t < len(ratio) else None)
        rows.append(row)
    return TableData(
        name="fig1",
        columns=["t"] + [f"ratio_v{v:g}" for v in FIG1_VELOCITIES],
        rows=rows,
        params={
            "scheme": "acm",
            "nu": nu,
            "extent": 191,
            "wave_multiples": "(3, 2)",
            "amplitude": 1e-5,
            "velocities": " ".join(f"{v:g}" for v in FIG1_VELOCITIES),
            "stable_speed_limit": threshold,
        },
    )


def _fig_panels():
    return [
        ("fd3", SchemeConfig.fdlbm(0.01, stencil=StencilKind.THREE_POINT), 0.01),
        ("fd5", SchemeConfig.fdlbm(0.01, stencil=StencilKind.FIVE_POINT), 0.01),
        ("fd9", SchemeConfig.fdlbm(0.01, stencil=StencilKind.NINE_POINT), 0.01),
        ("mrt_quartic", SchemeConfig.mrt(NU_QUARTIC, quartic=True), NU_QUARTIC),
    ]


_FIG_SIM_MULTIPLES = {  # wave multiples on a 64-node box per direction
    (1, 0): (3, 10, 20),
    (2, 1): (2, 6, 9),
    (1, 1): (3, 8, 14),
}


def _fig_simulation_point(cfg, nu0, direction, multiple):
    extent = 64
    k = 2.0 * math.pi * multiple * math.hypot(*direction) / extent
    expected = max(nu0 * k * k, 1e-9)
    fit_start = 50 if math.log(2.0) / expected >= 200.0 else 10
    spec = ShearWaveSpec(
        direction=(direction[0] * multiple, direction[1] * multiple),
        extent=extent,
        max_steps=3000,
        fit_start=fit_start,
        corr_floor=1e-3,
    )
    try:
        res = run_shear_wave(cfg, spec)
    except NumericalError:
        return k, None
    if res.failure is not None or abs(res.correlation[-1]) > abs(res.correlation[0]):
        return k, None
    return k, res.nu_eff / nu0


def fig2to5_data(curve_samples: int = 16, k_max: float = 2.0) -> TableData:
    """Relative viscosity nu(k)/nu0 versus k for the three stencils of
    the reconstruction scheme (nu0 = 0.01) and the quartic moment scheme
    (nu0 = 1/sqrt(108)), three directions each: analyzer curve, small-k
    hyperviscosity fit, and direct simulation points where stable."""
    jobs = [
        (panel_name, cfg, nu0, direction)
        for panel_name, cfg, nu0 in _fig_panels()
        for direction in DIRECTIONS
    ]

    def run(job):
        panel_name, cfg, nu0, direction = job
        fit = effective_viscosity_curve(
            cfg, direction, k_max=k_max, samples=curve_samples
        )
        sims = [
            _fig_simulation_point(cfg, nu0, direction, mult)
            for mult in _FIG_SIM_MULTIPLES[direction]
        ]
        if fit.unstable:
            sims = [(k, None) for k, _ in sims]
        return fit, sims

    outputs = _map_ordered(run, jobs)
    rows = []
    for (panel_name, cfg, nu0, direction), (fit, sims) in zip(jobs, outputs):
        sim_lookup = dict(sims)
        for i, k in enumerate(fit.k):
            rows.append(
                [
                    panel_name,
                    direction[0],
                    direction[1],
                    float(k),
                    float(fit.nu_k[i] / nu0),
                    float((fit.nu0 + fit.nu2 * k * k) / nu0),
                    bool(fit.max_abs_z[i] > 1.0 + 1e-9),
                    None,
                ]
            )
        for k, ratio in sims:
            rows.append(
                [panel_name, direction[0], direction[1], k, None, None, None, ratio]
            )
    return TableData(
        name="fig2to5",
        columns=[
            "panel",
            "direction_p",
            "direction_q",
            "k",
            "nu_ratio_analyzer",
            "nu_ratio_smallk_fit",
            "unstable",
            "nu_ratio_simulation",
        ],
        rows=rows,
        params={
            "panels": "fd3 fd5 fd9 (nu0=0.01), mrt_quartic (nu0=1/sqrt(108))",
            "k_max": k_max,
            "curve_samples": curve_samples,
            "simulation_extent": 64,
            "simulation_multiples": str(_FIG_SIM_MULTIPLES),
        },
    )


FIG6_XIS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def fig6_data(nu: float = 0.1) -> TableData:
    """Measured wall offset xi_m versus the imposed xi for plain
    bounce-back, the moment scheme with interpolated links, and the
    five-point reconstruction scheme with extrapolated virtual nodes."""
    variants = [
        ("bounce_back", SchemeConfig.mrt(nu), BOUNCE_BACK),
        ("mrt_interpolated", SchemeConfig.mrt(nu), INTERPOLATED),
        ("fd5_virtual", SchemeConfig.fdlbm(nu, stencil=StencilKind.FIVE_POINT), BOUNCE_BACK),
    ]
    jobs = [(xi, name, cfg, rule) for xi in FIG6_XIS for name, cfg, rule in variants]

    def run(job):
        xi, _, cfg, rule = job
        spec = PoiseuilleSpec(xi=xi, population_rule=rule)
        return run_poiseuille(cfg, spec)

    results = _map_ordered(run, jobs)
    by_xi = {}
    for (xi, name, _, _), res in zip(jobs, results):
        by_xi.setdefault(xi, {})[name] = res
    rows = []
    for xi in FIG6_XIS:
        per = by_xi[xi]
        rows.append(
            [
                xi,
                per["bounce_back"].xi_measured,
                per["mrt_interpolated"].xi_measured,
                per["fd5_virtual"].xi_measured,
            ]
        )
    return TableData(
        name="fig6",
        columns=["xi_imposed", "xi_bounce_back", "xi_mrt_interpolated", "xi_fd5_virtual"],
        rows=rows,
        params={
            "nu": nu,
            "width": 15,
            "force": 1e-6,
            "schemes": "mrt+bounce_back, mrt+interpolated, fdlbm5+virtual",
        },
    )


REPRODUCIBLES = ("table1", "table2", "table3", "fig1", "fig2to5", "fig6")


def reproduce(which: str) -> list[TableData]:
    """Build the requested artifact (or all of them)."""
    builders = {
        "table1": table1_data,
        "table2": table2_data,
        "table3": table3_data,
        "fig1": fig1_data,
        "fig2to5": fig2to5_data,
        "fig6": fig6_data,
    }
    if which == "all":
        return [builders[name]() for name in REPRODUCIBLES]
    if which not in builders:
        raise ConfigError(f"unknown artifact {which!r}")
    return [builders[which]()]
