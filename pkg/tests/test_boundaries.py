"""Wall geometry: node labels, cut links, extrapolation, population fixups."""

from __future__ import annotations

import numpy as np
import pytest

from lbmlab import lattice
from lbmlab.boundaries import (
    BOUNCE_BACK,
    DEEP_SOLID,
    FLUID,
    INTERPOLATED,
    VIRTUAL,
    Channel,
    Disk,
    PeriodicBox,
    build_walls,
    classify,
    virtual_state,
)
from lbmlab.errors import ConfigError
from lbmlab.schemes import FieldSet, SchemeConfig, step, stream
from lbmlab.stencils import StencilKind


def test_channel_labels():
    nc = classify(Channel(width=15, xi=0.5), 8, 19)
    labels = nc.labels
    assert np.all(labels[:, 1:16] == FLUID)
    assert np.all(labels[:, 0] == VIRTUAL)
    assert np.all(labels[:, 16] == VIRTUAL)
    assert np.all(labels[:, 17] == DEEP_SOLID)
    assert np.all(labels[:, 18] == DEEP_SOLID)


def test_disk_labels_match_direct_recomputation():
    geom = Disk(cx=32.03, cy=32.07, radius=29.9)
    nc = classify(geom, 64, 64)
    x = np.arange(64)[:, None] - geom.cx
    y = np.arange(64)[None, :] - geom.cy
    fluid = np.hypot(x, y) <= geom.radius
    near = np.zeros_like(fluid)
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            near |= np.roll(fluid, (sx, sy), axis=(0, 1))
    assert np.array_equal(nc.labels == FLUID, fluid)
    assert np.array_equal(nc.labels == VIRTUAL, near & ~fluid)
    assert np.array_equal(nc.labels == DEEP_SOLID, ~near)
    # specific radii quoted in link units from the center
    assert nc.labels[int(geom.cx), int(geom.cy)] == FLUID
    iy = int(np.floor(geom.cy + geom.radius))  # last inside node on the +y axis
    assert nc.labels[32, iy] == FLUID
    assert nc.labels[32, iy + 1] == VIRTUAL


def test_channel_link_fractions_equal_xi():
    for xi in (0.25, 0.5, 0.9):
        nc = classify(Channel(width=5, xi=xi), 6, 9)
        assert len(nc.link_fraction) > 0
        assert np.max(np.abs(nc.link_fraction - xi)) <= 1e-9
        # bottom-row virtual nodes reach the fluid through the three
        # upward directions
        dirs = sorted(d for d, _ in nc.links_of(3, 0))
        assert dirs == [2, 5, 6]


def test_disk_link_fractions_solve_the_circle():
    geom = Disk(cx=16.03, cy=16.07, radius=10.4)
    nc = classify(geom, 32, 32)
    assert len(nc.link_fraction) > 0
    for (vx_, vy_), d, frac in zip(
        nc.link_virtual.tolist(), nc.link_dir.tolist(), nc.link_fraction.tolist()
    ):
        c = lattice.VELOCITIES[d]
        fx, fy = vx_ + c[0], vy_ + c[1]  # the fluid end of the link
        # walk from the fluid node toward the virtual node
        px, py = fx - geom.cx, fy - geom.cy
        dx, dy = -c[0], -c[1]
        a = float(dx * dx + dy * dy)
        b = 2.0 * float(px * dx + py * dy)
        cc = float(px * px + py * py) - geom.radius**2
        roots = np.roots([a, b, cc])
        t = min(r.real for r in roots if abs(r.imag) < 1e-12 and 0.0 < r.real <= 1.0)
        assert abs(frac - t) <= 1e-9


def test_virtual_state_extrapolation_values():
    rho, v = virtual_state(1.2, 0.1, 1.0)
    assert rho == 1.2 and abs(v) == 0.0
    _, v = virtual_state(1.0, 0.1, 0.5)
    assert np.isclose(v, -0.1, atol=1e-15)
    _, v = virtual_state(1.0, 0.1, 0.25, v_f2=0.05)
    assert np.isclose(v, -0.6 * 0.05, atol=1e-15)
    # at q >= 1/2 the one-node form wins even when a second value exists
    _, v = virtual_state(1.0, 0.09, 0.75, v_f2=123.0)
    assert np.isclose(v, 0.09 * (0.75 - 1.0) / 0.75, atol=1e-15)
    with pytest.raises(ConfigError):
        virtual_state(1.0, 0.1, 0.0)
    with pytest.raises(ConfigError):
        virtual_state(1.0, 0.1, 1.5)


def test_geometry_validation():
    with pytest.raises(ConfigError):
        build_walls(Disk(8.0, 8.0, 1.5), 16, 16)  # radius too small
    with pytest.raises(ConfigError):
        build_walls(Disk(8.0, 8.0, 7.0), 16, 16)  # margin < 2
    with pytest.raises(ConfigError):
        build_walls(Channel(width=15, xi=0.5), 8, 16)  # does not fit
    with pytest.raises(ConfigError):
        build_walls(Channel(width=15, xi=1.5), 8, 19)  # offset out of range
    with pytest.raises(ConfigError):
        classify(Channel(width=5, xi=0.5), 3, 9)  # grid too small
    assert build_walls(PeriodicBox(), 8, 8) is None


def test_near_wall_mask_covers_one_fluid_shell():
    walls = build_walls(Channel(width=15, xi=0.5), 8, 19)
    mask = walls.near_wall_mask
    solid_rows = (0, 16, 17, 18)
    edge_fluid_rows = (1, 15)
    for row in solid_rows + edge_fluid_rows:
        assert np.all(mask[:, row])
    for row in range(2, 15):
        assert not np.any(mask[:, row])


def test_refresh_reconstructs_a_linear_profile():
    # profile vanishing at the bottom wall, linear in y everywhere:
    # every bottom-family solid node must come back on the same line
    width, ny = 15, 19
    for xi in (0.3, 0.5, 0.8):
        walls = build_walls(Channel(width=width, xi=xi), 8, ny)
        y_wall = 1.0 - xi
        y = np.arange(ny, dtype=float)[None, :] * np.ones((8, 1))
        alpha, beta = 3e-3, -2e-3
        rho = np.ones((8, ny))
        vx = alpha * (y - y_wall)
        vy = beta * (y - y_wall)
        # poison the solid nodes to prove they are rewritten
        solid = walls.solid_mask
        vx[solid] = 99.0
        vy[solid] = 99.0
        rho[solid] = 99.0
        walls.refresh_primitive(rho, vx, vy)
        for row, y_here in ((0, 0.0), (ny - 1, -1.0)):
            assert np.max(np.abs(vx[:, row] - alpha * (y_here - y_wall))) <= 1e-12, xi
            assert np.max(np.abs(vy[:, row] - beta * (y_here - y_wall))) <= 1e-12, xi
            assert np.max(np.abs(rho[:, row] - 1.0)) <= 1e-12


def test_refresh_reconstructs_a_quadratic_on_the_first_shell():
    # the first solid shell fits a parabola through the wall zero, so a
    # quadratic profile vanishing at the wall is reproduced exactly there
    width, ny = 15, 19
    for xi in (0.3, 0.7):
        walls = build_walls(Channel(width=width, xi=xi), 8, ny)
        y_wall = 1.0 - xi
        y = np.arange(ny, dtype=float)[None, :] * np.ones((8, 1))
        rho = np.ones((8, ny))
        vx = (y - y_wall) * (0.01 - 1e-3 * (y - y_wall))
        vy = np.zeros((8, ny))
        vx[walls.solid_mask] = 99.0
        walls.refresh_primitive(rho, vx, vy)
        expected = (0.0 - y_wall) * (0.01 - 1e-3 * (0.0 - y_wall))
        assert np.max(np.abs(vx[:, 0] - expected)) <= 1e-12, xi


def test_refresh_rho_takes_nearest_fluid_value():
    walls = build_walls(Channel(width=15, xi=0.5), 8, 19)
    rho = np.ones((8, 19))
    rho[:, 1] = 1.07  # bottom edge fluid row
    rho[:, 15] = 1.02  # top edge fluid row
    vx = np.zeros((8, 19))
    vy = np.zeros((8, 19))
    walls.refresh_primitive(rho, vx, vy)
    # zero-gradient closure: the first shell copies its adjacent row
    assert np.max(np.abs(rho[:, 0] - 1.07)) <= 1e-12
    assert np.max(np.abs(rho[:, 16] - 1.02)) <= 1e-12


def test_bounce_back_reverses_the_crossing_population():
    walls = build_walls(Channel(width=3, xi=0.5), 4, 7, population_rule=BOUNCE_BACK)
    fstar = np.zeros((9, 4, 7))
    fstar[2, 1, 3] = 1.0  # moving up from the top fluid row
    fnew = stream(fstar)
    walls.fix_populations(fstar, fnew)
    assert fnew[4, 1, 3] == 1.0  # reversed at the same node
    # solid nodes are parked at the rest weights
    rest = lattice.equilibrium_populations(1.0, 0.0, 0.0)
    assert np.allclose(fnew[:, 1, 5], rest, atol=1e-15)


def test_interpolated_rule_weights():
    # upper branch, q = 0.75: (0.5/q) f_a + (2q-1)/(2q) f_opp, same node
    walls = build_walls(Channel(width=3, xi=0.75), 4, 7, population_rule=INTERPOLATED)
    fstar = np.zeros((9, 4, 7))
    fstar[2, 1, 3] = 1.0
    fstar[4, 1, 3] = 0.5
    fnew = stream(fstar)
    walls.fix_populations(fstar, fnew)
    assert np.isclose(fnew[4, 1, 3], (0.5 / 0.75) * 1.0 + (0.5 / 1.5) * 0.5, atol=1e-14)

    # lower branch, q = 0.25: 2q f_a(node) + (1-2q) f_a(one node back)
    walls = build_walls(Channel(width=3, xi=0.25), 4, 7, population_rule=INTERPOLATED)
    fstar = np.zeros((9, 4, 7))
    fstar[2, 1, 3] = 1.0
    fstar[2, 1, 2] = 0.4
    fnew = stream(fstar)
    walls.fix_populations(fstar, fnew)
    assert np.isclose(fnew[4, 1, 3], 0.5 * 1.0 + 0.5 * 0.4, atol=1e-14)


def test_rest_state_is_preserved_inside_walls():
    geoms = (Channel(width=15, xi=0.4), Disk(16.03, 16.07, 10.4))
    shapes = ((8, 19), (32, 32))
    configs = (
        SchemeConfig.mrt(0.05),
        SchemeConfig.fdlbm(0.05, stencil=StencilKind.FIVE_POINT),
        SchemeConfig.acm(0.01),
    )
    for geom, (nx, ny) in zip(geoms, shapes):
        for rule in (BOUNCE_BACK, INTERPOLATED):
            for cfg in configs:
                walls = build_walls(geom, nx, ny, population_rule=rule)
                fields = FieldSet.uniform(cfg, nx, ny)
                out = step(fields, cfg, walls=walls)
                rho0, jx0, jy0 = fields.macros()
                rho1, jx1, jy1 = out.macros()
                fl = walls.fluid_mask
                label = f"{geom} {rule} {cfg.scheme}"
                assert np.max(np.abs(rho1[fl] - rho0[fl])) <= 1e-13, label
                assert np.max(np.abs(jx1[fl] - jx0[fl])) <= 1e-13, label
                assert np.max(np.abs(jy1[fl] - jy0[fl])) <= 1e-13, label


def test_unknown_population_rule_rejected():
    with pytest.raises(ConfigError):
        build_walls(Channel(width=3, xi=0.5), 4, 7, population_rule="slip")
