"""Command-line entry point.

Subcommands: analyze (plane-wave spectra and viscosity curves),
shear-wave, stokes-disk, poiseuille (single experiments), tables
(reference-table and figure-data reproduction), selftest (fast invariant
suite).  Every run writes a CSV plus a manifest recording parameters and
derived quantities; outputs are deterministic and overwritten atomically.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
1 internal error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import lattice, schemes, vonneumann
from .boundaries import BOUNCE_BACK, INTERPOLATED
from .config import load_config, parse_pair
from .errors import ConfigError, NumericalError
from .experiments import bessel, poiseuille, shearwave, stokes, tables
from .experiments.tables import TableData
from .runio import write_artifact
from .schemes import SCHEMES, THETA_XY_AS_PRINTED, THETA_XY_SYMMETRIC, SchemeConfig
from .stencils import StencilKind, ddx, ddy, stencil_symbol

SCHEME_DEFAULTS = {
    "kind": "mrt",
    "nu": 0.01,
    "s_q": None,
    "quartic": None,
    "s_e": None,
    "s_eps": None,
    "stencil": 3,
    "theta_xy_sign": THETA_XY_SYMMETRIC,
}


def _merge(defaults: dict, file_values: dict, flag_values: dict) -> dict:
    merged = dict(defaults)
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


def _build_scheme(settings: dict) -> SchemeConfig:
    kind = settings["kind"]
    nu = float(settings["nu"])
    if kind == "mrt":
        kwargs = {}
        if settings["s_q"] is not None:
            kwargs["s_q"] = float(settings["s_q"])
        if settings["quartic"]:
            kwargs["quartic"] = True
        if settings["s_e"] is not None:
            kwargs["s_e"] = float(settings["s_e"])
        if settings["s_eps"] is not None:
            kwargs["s_eps"] = float(settings["s_eps"])
        return SchemeConfig.mrt(nu, **kwargs)
    if kind == "bgk":
        return SchemeConfig.bgk(nu)
    if kind == "acm":
        return SchemeConfig.acm(nu)
    if kind == "fdlbm":
        return SchemeConfig.fdlbm(
            nu,
            stencil=StencilKind(int(settings["stencil"])),
            s_e=None if settings["s_e"] is None else float(settings["s_e"]),
            theta_xy_sign=settings["theta_xy_sign"],
        )
    raise ConfigError(f"unknown scheme kind {settings['kind']!r}")


def _scheme_params(settings: dict) -> dict:
    return {f"scheme_{key}": value for key, value in settings.items()}


def _add_scheme_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="configuration file (strict key = value sections)")
    sub.add_argument("--out", help="output directory (default: out)")
    sub.add_argument("--scheme", dest="kind", choices=SCHEMES)
    sub.add_argument("--nu", type=float, help="kinematic shear viscosity")
    sub.add_argument("--s-q", dest="s_q", type=float, help="heat-flux relaxation rate (mrt)")
    sub.add_argument(
        "--quartic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="tie s_q to s_xx for an isotropic k^4 shear term (mrt)",
    )
    sub.add_argument("--s-e", dest="s_e", type=float, help="energy relaxation rate")
    sub.add_argument("--s-eps", dest="s_eps", type=float, help="energy-square relaxation rate (mrt)")
    sub.add_argument("--stencil", type=int, choices=(3, 5, 9), help="derivative stencil (fdlbm)")
    sub.add_argument(
        "--theta-xy-sign",
        dest="theta_xy_sign",
        choices=(THETA_XY_SYMMETRIC, THETA_XY_AS_PRINTED),
        help="cross-derivative convention in the xy correction (fdlbm)",
    )


def _flags(args, names) -> dict:
    return {name: getattr(args, name) for name in names}


def _settings(args, section: str, section_defaults: dict, flag_names) -> tuple[dict, dict, str]:
    file_cfg = load_config(args.config) if args.config else {}
    scheme_settings = _merge(
        SCHEME_DEFAULTS,
        file_cfg.get("scheme", {}),
        _flags(args, SCHEME_DEFAULTS.keys()),
    )
    run_settings = _merge(
        section_defaults,
        file_cfg.get(section, {}),
        _flags(args, flag_names),
    )
    out_dir = args.out or file_cfg.get("output", {}).get("directory") or "out"
    return scheme_settings, run_settings, out_dir


ANALYSIS_DEFAULTS = {
    "direction": "1,0",
    "k": None,
    "k_max": 0.5,
    "samples": 12,
    "fit_k_max": None,
    "velocity": 0.0,
    "delta": 1e-6,
}


def cmd_analyze(args) -> int:
    scheme_settings, run, out_dir = _settings(
        args, "analysis", ANALYSIS_DEFAULTS, ANALYSIS_DEFAULTS.keys()
    )
    cfg = _build_scheme(scheme_settings)
    p, q = parse_pair(str(run["direction"]), int)
    speed = float(run["velocity"])
    norm = math.hypot(p, q)
    if norm == 0:
        raise ConfigError("direction must be a nonzero integer vector")
    velocity = (speed * p / norm, speed * q / norm)
    params = {**_scheme_params(scheme_settings), **{f"analysis_{k}": v for k, v in run.items()}}

    if run["k"] is not None:
        k_target = float(run["k"])
        if k_target == 0.0:
            kx = ky = k_actual = 0.0
        else:
            kx, ky, k_actual = vonneumann.commensurate_k((p, q), k_target)
        probe = vonneumann.PlaneWaveProbe(kx=kx, ky=ky, velocity=velocity)
        h = vonneumann.amplification_matrix(cfg, probe, delta=float(run["delta"]))
        eigenvalues = np.linalg.eigvals(h)
        order = np.lexsort((np.angle(eigenvalues), -np.abs(eigenvalues)))
        rows = []
        for i, z in enumerate(eigenvalues[order]):
            gamma = -np.log(z) if abs(z) > 1e-300 else complex(np.inf, 0.0)
            rows.append([i, z.real, z.imag, abs(z), gamma.real, gamma.imag])
        data = TableData(
            name="eigenvalues",
            columns=["mode", "z_re", "z_im", "z_abs", "gamma_re", "gamma_im"],
            rows=rows,
            params=params,
        )
        csv_path, _ = write_artifact(out_dir, data, derived={"kx": kx, "ky": ky, "k": k_actual})
        print(csv_path)
        return 0

    fit = vonneumann.effective_viscosity_curve(
        cfg,
        (p, q),
        k_max=float(run["k_max"]),
        samples=int(run["samples"]),
        fit_k_max=None if run["fit_k_max"] is None else float(run["fit_k_max"]),
        velocity=velocity,
        delta=float(run["delta"]),
    )
    rows = [
        [
            float(fit.k[i]),
            float(fit.gamma[i].real),
            float(fit.gamma[i].imag),
            float(fit.nu_k[i]),
            float(fit.max_abs_z[i]),
            bool(fit.max_abs_z[i] > 1.0 + 1e-9),
        ]
        for i in range(len(fit.k))
    ]
    data = TableData(
        name="dispersion",
        columns=["k", "gamma_re", "gamma_im", "nu_k", "max_abs_z", "unstable"],
        rows=rows,
        params=params,
    )
    derived = {
        "nu0_fit": fit.nu0,
        "nu2_fit": fit.nu2,
        "sound_speed_fit": fit.c_s,
        "sound_damping_fit": fit.gamma_s,
        "fit_residual": fit.residual,
        "unstable": fit.unstable,
        "first_unstable_k": fit.first_unstable_k,
        "tracking_ambiguous": fit.ambiguous,
    }
    csv_path, _ = write_artifact(out_dir, data, derived=derived)
    print(csv_path)
    return 0


SHEAR_DEFAULTS = {
    "extent": 191,
    "multiples": "3,2",
    "amplitude": 1e-5,
    "mean_velocity": 0.0,
    "max_steps": 2000,
    "fit_start": 50,
    "corr_floor": 0.01,
}


def cmd_shear_wave(args) -> int:
    scheme_settings, run, out_dir = _settings(
        args, "shear_wave", SHEAR_DEFAULTS, SHEAR_DEFAULTS.keys()
    )
    cfg = _build_scheme(scheme_settings)
    multiples = parse_pair(str(run["multiples"]), int)
    spec = shearwave.ShearWaveSpec(
        direction=multiples,
        extent=int(run["extent"]),
        amplitude=float(run["amplitude"]),
        mean_velocity=float(run["mean_velocity"]),
        max_steps=int(run["max_steps"]),
        fit_start=int(run["fit_start"]),
        corr_floor=float(run["corr_floor"]),
    )
    try:
        result = shearwave.run_shear_wave(cfg, spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ratio = result.normalized
    rows = [
        [t, result.correlation[t].real, result.correlation[t].imag, float(ratio[t])]
        for t in range(len(result.correlation))
    ]
    data = TableData(
        name="shear_wave",
        columns=["t", "correlation_re", "correlation_im", "abs_ratio"],
        rows=rows,
        params={**_scheme_params(scheme_settings), **{f"wave_{k}": v for k, v in run.items()}},
    )
    derived = {
        "kx": result.kx,
        "ky": result.ky,
        "k": result.k,
        "gamma_re": result.gamma.real,
        "gamma_im": result.gamma.imag,
        "nu_effective": result.nu_eff,
        "fit_start": result.fit_start,
        "fit_stop": result.fit_stop,
        "stopped_early": result.stopped_early,
        "failure": result.failure,
    }
    csv_path, _ = write_artifact(out_dir, data, derived=derived)
    print(csv_path)
    return 0


STOKES_DEFAULTS = {
    "family": stokes.SINGLET,
    "index": 1,
    "radius": 29.9,
    "extent": 64,
    "center": "32.03,32.07",
    "amplitude": 1e-5,
    "max_steps": 12000,
    "fit_start": 50,
    "corr_floor": 0.01,
    "population_rule": INTERPOLATED,
}


def cmd_stokes_disk(args) -> int:
    scheme_settings, run, out_dir = _settings(
        args, "stokes", STOKES_DEFAULTS, STOKES_DEFAULTS.keys()
    )
    cfg = _build_scheme(scheme_settings)
    spec = stokes.StokesDiskSpec(
        family=str(run["family"]),
        index=int(run["index"]),
        radius=float(run["radius"]),
        extent=int(run["extent"]),
        center=parse_pair(str(run["center"])),
        amplitude=float(run["amplitude"]),
        max_steps=int(run["max_steps"]),
        fit_start=int(run["fit_start"]),
        corr_floor=float(run["corr_floor"]),
        population_rule=str(run["population_rule"]),
    )
    result = stokes.run_stokes_disk(cfg, spec)
    rows = [
        [t, float(result.projection[t]), float(result.purity[t])]
        for t in range(len(result.projection))
    ]
    data = TableData(
        name="stokes_disk",
        columns=["t", "projection", "purity"],
        rows=rows,
        params={**_scheme_params(scheme_settings), **{f"mode_{k}": v for k, v in run.items()}},
    )
    derived = {
        "azimuthal_order": result.m,
        "a": result.a,
        "a_squared": result.a_squared,
        "gamma_theory": result.gamma_theory,
        "gamma_measured": result.gamma_measured,
        "nu_effective": result.nu_effective,
        "rel_deviation": result.rel_deviation,
        "min_purity": result.min_purity,
        "contaminated": result.contaminated,
        "steps_used": result.steps_used,
    }
    csv_path, _ = write_artifact(out_dir, data, derived=derived)
    print(csv_path)
    return 0


POISEUILLE_DEFAULTS = {
    "width": 15,
    "xi": 0.5,
    "nx": 8,
    "ny": None,
    "force": 1e-6,
    "max_steps": 100000,
    "check_every": 100,
    "tol": 1e-10,
    "population_rule": BOUNCE_BACK,
}


def cmd_poiseuille(args) -> int:
    scheme_settings, run, out_dir = _settings(
        args, "poiseuille", POISEUILLE_DEFAULTS, POISEUILLE_DEFAULTS.keys()
    )
    cfg = _build_scheme(scheme_settings)
    spec = poiseuille.PoiseuilleSpec(
        width=int(run["width"]),
        xi=float(run["xi"]),
        nx=int(run["nx"]),
        ny=None if run["ny"] is None else int(run["ny"]),
        force=float(run["force"]),
        max_steps=int(run["max_steps"]),
        check_every=int(run["check_every"]),
        tol=float(run["tol"]),
        population_rule=str(run["population_rule"]),
    )
    result = poiseuille.run_poiseuille(cfg, spec)
    rows = [[float(result.y[i]), float(result.u[i])] for i in range(len(result.y))]
    data = TableData(
        name="poiseuille",
        columns=["y", "u"],
        rows=rows,
        params={**_scheme_params(scheme_settings), **{f"channel_{k}": v for k, v in run.items()}},
    )
    derived = {
        "xi_measured": result.xi_measured,
        "xi_bottom": result.xi_bottom,
        "xi_top": result.xi_top,
        "u_max_fit": result.u_max_fit,
        "u_max_theory": result.u_max_theory,
        "fit_residual": result.residual,
        "parabolic": result.parabolic,
        "steps_used": result.steps_used,
    }
    csv_path, _ = write_artifact(out_dir, data, derived=derived)
    print(csv_path)
    return 0


def cmd_tables(args) -> int:
    file_cfg = load_config(args.config) if args.config else {}
    which = args.which or file_cfg.get("tables", {}).get("which") or "all"
    out_dir = args.out or file_cfg.get("output", {}).get("directory") or "out"
    for data in tables.reproduce(which):
        csv_path, _ = write_artifact(out_dir, data)
        print(csv_path)
    return 0


def _selftest_checks():
    yield "moment_matrix_inverse", _check_moment_inverse
    yield "stencil_symbols", _check_stencil_symbols
    yield "conservation_at_zero_k", _check_conservation
    yield "mass_momentum_drift", _check_drift
    yield "bessel_zero_residuals", _check_bessel
    yield "deterministic_rerun", _check_determinism
    yield "simulation_analysis_duality", _check_duality


def _check_moment_inverse() -> None:
    mm = lattice.moment_matrix()
    err = float(np.max(np.abs(mm.m @ mm.m_inv - np.eye(9))))
    if err > 1e-14:
        raise NumericalError(f"moment matrix inverse error {err}")


def _check_stencil_symbols() -> None:
    rng = np.random.default_rng(11)
    grid = rng.standard_normal((16, 16))
    spectrum = np.fft.fft2(grid)
    kx = 2.0 * math.pi * np.fft.fftfreq(16)[:, None]
    ky = 2.0 * math.pi * np.fft.fftfreq(16)[None, :]
    for kind in StencilKind:
        sym = stencil_symbol(kind, kx, ky)
        err = float(np.max(np.abs(np.fft.fft2(ddx(grid, kind)) - sym * spectrum)))
        err_y = float(
            np.max(np.abs(np.fft.fft2(ddy(grid, kind)) - stencil_symbol(kind, ky, kx) * spectrum))
        )
        if max(err, err_y) > 1e-10:
            raise NumericalError(f"stencil {int(kind)} symbol mismatch {max(err, err_y)}")


def _check_conservation() -> None:
    for cfg, count in (
        (SchemeConfig.acm(0.01), 3),
        (SchemeConfig.mrt(0.01), 3),
    ):
        h = vonneumann.amplification_matrix(cfg, vonneumann.PlaneWaveProbe(0.0, 0.0))
        ones = np.sum(np.abs(np.linalg.eigvals(h) - 1.0) < 1e-9)
        if ones < count:
            raise NumericalError(f"{cfg.scheme}: expected >= {count} unit eigenvalues, saw {ones}")


def _check_drift() -> None:
    rng = np.random.default_rng(7)
    rho = 1.0 + 0.01 * rng.standard_normal((12, 12))
    jx = 0.01 * rng.standard_normal((12, 12))
    jy = 0.01 * rng.standard_normal((12, 12))
    f = lattice.equilibrium_populations(rho, jx, jy)
    fields = schemes.FieldSet.populations(f)
    cfg = SchemeConfig.mrt(0.02)
    mass0, px0, py0 = (float(a.sum()) for a in fields.macros())
    for _ in range(20):
        fields = schemes.step(fields, cfg)
    mass, px, py = (float(a.sum()) for a in fields.macros())
    if abs(mass - mass0) / abs(mass0) > 1e-13:
        raise NumericalError(f"mass drift {abs(mass - mass0) / abs(mass0)}")
    if max(abs(px - px0), abs(py - py0)) > 1e-12:
        raise NumericalError(f"momentum drift {max(abs(px - px0), abs(py - py0))}")


def _check_bessel() -> None:
    for order, count in ((1, 6), (2, 1)):
        for root in bessel.zeros_of_j(order, count):
            residual = abs(bessel.bessel_j(order, root))
            if residual > 1e-12:
                raise NumericalError(f"zero of J_{order} residual {residual}")


def _check_determinism() -> None:
    spec = shearwave.ShearWaveSpec(direction=(1, 0), extent=16, max_steps=120, fit_start=20)
    cfg = SchemeConfig.mrt(0.05)
    first = shearwave.run_shear_wave(cfg, spec)
    second = shearwave.run_shear_wave(cfg, spec)
    if first.gamma != second.gamma or not np.array_equal(first.correlation, second.correlation):
        raise NumericalError("rerun produced different bits")


def _check_duality() -> None:
    cfg = SchemeConfig.mrt(0.01)
    spec = shearwave.ShearWaveSpec(direction=(2, 1), extent=64, max_steps=1500)
    sim = shearwave.run_shear_wave(cfg, spec)
    branches = vonneumann.dispersion_modes(cfg, (2, 1), [sim.k], max_den=64)
    gamma = vonneumann.branch(branches, vonneumann.SHEAR).gamma[0]
    if abs(sim.gamma.real - gamma.real) > 1e-6:
        raise NumericalError(
            f"simulated {sim.gamma.real} vs analyzed {gamma.real} attenuation"
        )


def cmd_selftest(args) -> int:
    failed = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:  # report every failure, keep going
            failed += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    if failed:
        print(f"{failed} check(s) failed")
        return 3
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbmlab",
        description="Lattice kinetic scheme workbench: spectra, benchmarks, artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="plane-wave spectra and viscosity curves")
    _add_scheme_flags(analyze)
    analyze.add_argument("--direction", help="integer wave direction, e.g. 1,0")
    analyze.add_argument("--k", type=float, help="single wave number: emit the eigenvalue report")
    analyze.add_argument("--k-max", dest="k_max", type=float)
    analyze.add_argument("--samples", type=int)
    analyze.add_argument("--fit-k-max", dest="fit_k_max", type=float)
    analyze.add_argument("--velocity", type=float, help="background speed along the wave vector")
    analyze.add_argument("--delta", type=float, help="linearization step")
    analyze.set_defaults(handler=cmd_analyze)

    wave = sub.add_parser("shear-wave", help="decaying transverse wave experiment")
    _add_scheme_flags(wave)
    wave.add_argument("--extent", type=int)
    wave.add_argument("--multiples", help="integer wave multiples, e.g. 3,2")
    wave.add_argument("--amplitude", type=float)
    wave.add_argument("--mean-velocity", dest="mean_velocity", type=float)
    wave.add_argument("--max-steps", dest="max_steps", type=int)
    wave.add_argument("--fit-start", dest="fit_start", type=int)
    wave.add_argument("--corr-floor", dest="corr_floor", type=float)
    wave.set_defaults(handler=cmd_shear_wave)

    disk = sub.add_parser("stokes-disk", help="decaying disk eigenmode experiment")
    _add_scheme_flags(disk)
    disk.add_argument("--family", choices=(stokes.SINGLET, stokes.DOUBLET))
    disk.add_argument("--index", type=int)
    disk.add_argument("--radius", type=float)
    disk.add_argument("--extent", type=int)
    disk.add_argument("--center")
    disk.add_argument("--amplitude", type=float)
    disk.add_argument("--max-steps", dest="max_steps", type=int)
    disk.add_argument("--fit-start", dest="fit_start", type=int)
    disk.add_argument("--corr-floor", dest="corr_floor", type=float)
    disk.add_argument(
        "--population-rule",
        dest="population_rule",
        choices=(BOUNCE_BACK, INTERPOLATED),
    )
    disk.set_defaults(handler=cmd_stokes_disk)

    chan = sub.add_parser("poiseuille", help="forced channel wall calibration")
    _add_scheme_flags(chan)
    chan.add_argument("--width", type=int)
    chan.add_argument("--xi", type=float)
    chan.add_argument("--nx", type=int)
    chan.add_argument("--ny", type=int)
    chan.add_argument("--force", type=float)
    chan.add_argument("--max-steps", dest="max_steps", type=int)
    chan.add_argument("--check-every", dest="check_every", type=int)
    chan.add_argument("--tol", type=float)
    chan.add_argument(
        "--population-rule",
        dest="population_rule",
        choices=(BOUNCE_BACK, INTERPOLATED),
    )
    chan.set_defaults(handler=cmd_poiseuille)

    tab = sub.add_parser("tables", help="reproduce the reference tables and figure data")
    tab.add_argument("--config")
    tab.add_argument("--out")
    tab.add_argument(
        "--which",
        choices=tables.REPRODUCIBLES + ("all",),
        help="which artifact to build (default all)",
    )
    tab.set_defaults(handler=cmd_tables)

    self_test = sub.add_parser("selftest", help="run the fast invariant suite")
    self_test.set_defaults(handler=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
