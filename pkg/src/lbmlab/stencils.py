"""Periodic central-difference stencils and their Fourier symbols.

Three first-derivative stencils are supported (widths quoted along the
differenced axis):

* 3-point:  (g[i+1] - g[i-1]) / 2                      symbol  i sin k
* 5-point:  3/4 (g[i+1] - g[i-1]) - 1/8 (g[i+2] - g[i-2])
            symbol  i (1.5 sin k - 0.25 sin 2k) = i (k + k^3/12 + ...)
            (the coefficients are intentionally not the classical
            4th-order ones; the leading error is +k^3/12)
* 9-point:  cross-coupled first derivative using the four diagonal
            neighbours, symbol  i sin kx (2 - cos ky) for d/dx

Grids are g[i, j] with axis 0 = x, axis 1 = y, periodic wrap.
"""

from __future__ import annotations

import enum

import numpy as np


class StencilKind(enum.IntEnum):
    THREE_POINT = 3
    FIVE_POINT = 5
    NINE_POINT = 9


def _check_grid(g: np.ndarray, kind: StencilKind) -> None:
    if g.ndim != 2:
        raise ValueError("expected a 2d grid")
    need = 5 if kind == StencilKind.FIVE_POINT else 3
    if g.shape[0] < need or g.shape[1] < need:
        raise ValueError(f"grid {g.shape} smaller than stencil support {need}")


def ddx(g: np.ndarray, kind: StencilKind = StencilKind.THREE_POINT) -> np.ndarray:
    """d/dx of a periodic grid (unit lattice spacing)."""
    g = np.asarray(g, dtype=float)
    _check_grid(g, kind)
    e = np.roll(g, -1, axis=0)
    w = np.roll(g, 1, axis=0)
    if kind == StencilKind.THREE_POINT:
        return 0.5 * (e - w)
    if kind == StencilKind.FIVE_POINT:
        ee = np.roll(g, -2, axis=0)
        ww = np.roll(g, 2, axis=0)
        return 0.75 * (e - w) - 0.125 * (ee - ww)
    if kind == StencilKind.NINE_POINT:
        ne = np.roll(e, -1, axis=1)
        se = np.roll(e, 1, axis=1)
        nw = np.roll(w, -1, axis=1)
        sw = np.roll(w, 1, axis=1)
        return (e - w) - 0.25 * (ne - nw + se - sw)
    raise ValueError(f"unknown stencil {kind}")


def ddy(g: np.ndarray, kind: StencilKind = StencilKind.THREE_POINT) -> np.ndarray:
    """d/dy, the 90-degree rotation of ddx."""
    return ddx(np.asarray(g, dtype=float).T, kind).T


def stencil_symbol(kind: StencilKind, kx, ky=0.0) -> np.ndarray:
    """Fourier symbol of ddx: ddx(e^{i k.x}) = symbol * e^{i k.x}."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    if kind == StencilKind.THREE_POINT:
        return 1j * np.sin(kx) + 0.0 * ky
    if kind == StencilKind.FIVE_POINT:
        return 1j * (1.5 * np.sin(kx) - 0.25 * np.sin(2.0 * kx)) + 0.0 * ky
    if kind == StencilKind.NINE_POINT:
        return 1j * np.sin(kx) * (2.0 - np.cos(ky))
    raise ValueError(f"unknown stencil {kind}")
