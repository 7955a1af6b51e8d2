"""Benchmark experiments: Bessel kernels, decay fits, channel calibration."""

from __future__ import annotations

import numpy as np
import pytest

from lbmlab.errors import ConfigError
from lbmlab.experiments import tables
from lbmlab.experiments.bessel import bessel_j, bessel_j_prime, zeros_of_j
from lbmlab.experiments.poiseuille import PoiseuilleSpec, run_poiseuille
from lbmlab.experiments.shearwave import ShearWaveSpec, run_shear_wave
from lbmlab.experiments.stokes import (
    DOUBLET,
    SINGLET,
    StokesDiskSpec,
    mode_parameters,
    mode_velocity,
    run_stokes_disk,
)
from lbmlab.schemes import SchemeConfig
from lbmlab.stencils import StencilKind


# -- Bessel kernels ----------------------------------------------------


def test_bessel_values_against_frozen_references():
    # reference values computed independently to full double precision
    assert abs(bessel_j(0, 0.0) - 1.0) <= 1e-15
    assert abs(bessel_j(1, 0.0)) <= 1e-15
    assert abs(bessel_j(0, 1.0) - 0.7651976865579666) <= 1e-12
    assert abs(bessel_j(1, 1.0) - 0.44005058574493355) <= 1e-12
    assert abs(bessel_j(2, 2.5) - 0.44605905843961724) <= 1e-12
    assert abs(bessel_j(5, 8.3) - 0.11607131384553515) <= 1e-12


def test_bessel_zeros_against_frozen_references():
    z1 = zeros_of_j(1, 3)
    assert np.allclose(
        z1, (3.8317059702075125, 7.015586669815619, 10.173468135062722), atol=1e-10
    )
    assert abs(zeros_of_j(2, 1)[0] - 5.135622301840683) <= 1e-10
    assert abs(zeros_of_j(3, 1)[0] - 6.380161895923984) <= 1e-10
    assert abs(zeros_of_j(12, 1)[0] - 16.698249933848246) <= 1e-10


def test_bessel_zero_residuals():
    for m in (1, 2, 3, 7, 12):
        for z in zeros_of_j(m, 4):
            assert abs(bessel_j(m, z)) <= 1e-12


def test_bessel_recurrence():
    xs = np.linspace(0.3, 18.0, 40)
    for m in (1, 2, 5):
        lhs = bessel_j(m - 1, xs) + bessel_j(m + 1, xs)
        rhs = 2.0 * m * bessel_j(m, xs) / xs
        assert np.max(np.abs(lhs - rhs)) <= 1e-11


def test_bessel_derivative_identities():
    xs = np.linspace(0.1, 12.0, 25)
    assert np.max(np.abs(bessel_j_prime(0, xs) + bessel_j(1, xs))) <= 1e-12
    half = 0.5 * (bessel_j(0, xs) - bessel_j(2, xs))
    assert np.max(np.abs(bessel_j_prime(1, xs) - half)) <= 1e-12


# -- disk eigenmodes ---------------------------------------------------


def test_mode_parameters():
    m, a = mode_parameters(SINGLET, 1)
    assert m == 0 and abs(a - 3.8317059702075125) <= 1e-10
    assert abs(a * a - 14.68200) <= 1e-3
    m, a = mode_parameters(DOUBLET, 2)
    assert m == 2 and abs(a - 6.380161895923984) <= 1e-10
    with pytest.raises(ConfigError):
        mode_parameters("triplet", 1)


def test_mode_a_squared_matches_reference_table():
    for (family, index), row in tables.STOKES_REFERENCE_005.items():
        _, a = mode_parameters(family, index)
        assert abs(a * a - row[0]) <= 1e-3, (family, index)


def test_singlet_velocity_is_purely_azimuthal():
    spec = StokesDiskSpec(family=SINGLET, index=2)
    vx, vy, m, a = mode_velocity(spec)
    assert m == 0
    assert np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))
    n = spec.extent
    x = np.arange(n)[:, None] - spec.center[0]
    y = np.arange(n)[None, :] - spec.center[1]
    r = np.maximum(np.hypot(x, y), 1e-12)
    radial = vx * (x / r) + vy * (y / r)
    assert np.max(np.abs(radial)) <= 1e-13


def test_mode_velocity_vanishes_on_the_rim():
    # both families satisfy no slip at r = radius by construction
    for family, index in ((SINGLET, 1), (DOUBLET, 2)):
        spec = StokesDiskSpec(family=family, index=index)
        vx, vy, _, _ = mode_velocity(spec)
        n = spec.extent
        x = np.arange(n)[:, None] - spec.center[0]
        y = np.arange(n)[None, :] - spec.center[1]
        r = np.hypot(x, y)
        scale = max(np.max(np.abs(vx)), np.max(np.abs(vy)))
        # nodes sit off the rim, so the no-slip zero is blurred by the
        # wall-normal gradient; the dip must deepen linearly with the band
        for band, ceiling in ((0.5, 0.12), (0.2, 0.05)):
            rim = np.abs(r - spec.radius) < band
            rim_speed = np.max(np.hypot(vx[rim], vy[rim]))
            assert rim_speed <= ceiling * scale, (family, index, band)


def test_stokes_spec_validation():
    with pytest.raises(ConfigError):
        StokesDiskSpec(family="quartet").validate()
    with pytest.raises(ConfigError):
        StokesDiskSpec(index=0).validate()
    with pytest.raises(ConfigError):
        StokesDiskSpec(amplitude=1.0).validate()
    with pytest.raises(ConfigError):
        StokesDiskSpec(index=9, radius=8.0).validate()  # unresolvable


def test_stokes_decay_run_doublet():
    # one fast-decaying mode end to end: the measured rate must sit
    # within a fraction of a percent of nu a^2 / R^2
    cfg = SchemeConfig.mrt(1.0 / np.sqrt(108.0), quartic=True)
    spec = StokesDiskSpec(family=DOUBLET, index=3)
    res = run_stokes_disk(cfg, spec)
    assert res.m == 3 and abs(res.a_squared - 57.58290) <= 1e-3
    expected = res.nu0 * res.a_squared / spec.radius**2
    assert np.isclose(res.gamma_theory, expected, rtol=1e-12)
    assert abs(res.rel_deviation) <= 5e-3
    assert res.min_purity > 0.9
    assert not res.contaminated
    assert res.steps_used < spec.max_steps  # the decay floor stops it early
    assert len(res.projection) == res.steps_used + 1


# -- shear-wave decay --------------------------------------------------


def test_shear_wave_oblique_decay_rate():
    # wave multiples (3, 2) on a square grid: k^2 = 13 k0^2
    nu = 0.02
    spec = ShearWaveSpec(direction=(3, 2), extent=191, max_steps=1200)
    res = run_shear_wave(SchemeConfig.mrt(nu), spec)
    k0 = 2.0 * np.pi / 191
    assert np.isclose(res.k**2, 13.0 * k0**2, rtol=1e-12)
    assert res.failure is None
    assert abs(res.gamma.real / (nu * 13.0 * k0**2) - 1.0) <= 0.01
    assert abs(res.nu_eff / nu - 1.0) <= 0.01


def test_shear_wave_advected_reconstruction():
    # the reconstruction scheme sees nu (1 - 3 V^2) at V = 0.1
    nu, v = 0.05, 0.1
    cfg = SchemeConfig.fdlbm(nu, stencil=StencilKind.FIVE_POINT)
    spec = ShearWaveSpec(
        direction=(3, 0), extent=191, extent_y=16, mean_velocity=v, max_steps=1500
    )
    res = run_shear_wave(cfg, spec)
    assert res.failure is None
    expected = nu * (1.0 - 3.0 * v * v)
    assert abs(res.nu_eff / expected - 1.0) <= 0.02


def test_shear_wave_blowup_is_reported():
    # advected link-wise scheme far above its speed limit: the wave
    # grows as exp(|nu - V^2/2| k^2 t) and trips the blow-up stopper
    spec = ShearWaveSpec(
        direction=(1, 0), extent=16, mean_velocity=0.3, max_steps=8000, fit_start=5
    )
    res = run_shear_wave(SchemeConfig.acm(0.01), spec)
    assert res.stopped_early
    assert res.steps_used < spec.max_steps
    assert res.nu_eff < 0.0  # the fit sees growth, not decay


def test_shear_wave_spec_validation():
    with pytest.raises(ValueError):
        ShearWaveSpec(extent=4).validate()
    with pytest.raises(ValueError):
        ShearWaveSpec(amplitude=0.5).validate()
    with pytest.raises(ValueError):
        ShearWaveSpec(direction=(0, 0)).validate()
    with pytest.raises(ValueError):
        ShearWaveSpec(fit_start=3000, max_steps=2000).validate()


# -- forced channel ----------------------------------------------------


def test_poiseuille_converges_to_a_parabola():
    cfg = SchemeConfig.mrt(0.1)
    spec = PoiseuilleSpec(width=7, xi=0.5, nx=4, max_steps=20000)
    res = run_poiseuille(cfg, spec)
    assert res.parabolic
    assert res.steps_used < spec.max_steps
    assert abs(res.xi_bottom - res.xi_top) <= 0.02  # symmetric channel
    assert abs(res.u_max_fit / res.u_max_theory - 1.0) <= 0.1
    assert len(res.u) == 7
    assert np.all(res.u > 0.0)


def test_poiseuille_spec_validation():
    with pytest.raises(ConfigError):
        PoiseuilleSpec(force=0.0).validate()
    with pytest.raises(ConfigError):
        PoiseuilleSpec(max_steps=10, check_every=100).validate()
    assert PoiseuilleSpec().extent_y == 19
    assert np.isclose(PoiseuilleSpec(width=15, xi=0.3).wall_gap, 14.6, rtol=1e-12)


# -- table drivers -----------------------------------------------------


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("LBMLAB_WORKERS", raising=False)
    assert tables.worker_count() == 1
    monkeypatch.setenv("LBMLAB_WORKERS", "4")
    assert tables.worker_count() == 4
    monkeypatch.setenv("LBMLAB_WORKERS", "0")
    assert tables.worker_count() == 1
    monkeypatch.setenv("LBMLAB_WORKERS", "three")
    with pytest.raises(ConfigError):
        tables.worker_count()


def test_reproducibles_registry():
    names = set(tables.REPRODUCIBLES)
    assert {"table1", "table2", "table3", "fig1", "fig2to5", "fig6"} <= names
    with pytest.raises(ConfigError):
        tables.reproduce("table9")


def test_reference_constants():
    assert np.isclose(tables.NU_TABLE1, (1.0 / 1.85 - 0.5) / 3.0, rtol=1e-15)
    assert np.isclose(tables.NU_QUARTIC, 1.0 / np.sqrt(108.0), rtol=1e-15)
    assert tables.HYPERVISCOSITY_REFERENCE[(3, (1, 0))] == 0.03725
    assert len(tables.STOKES_REFERENCE_005) == 17
    assert len(tables.STOKES_REFERENCE_Q) == 17
