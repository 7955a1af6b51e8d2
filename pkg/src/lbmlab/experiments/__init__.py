"""Benchmark experiments: decaying shear waves, Stokes eigenmodes in a
disk, forced channel flow, and the sweep drivers that tabulate them."""

from __future__ import annotations

from . import bessel, poiseuille, shearwave, stokes, tables

__all__ = ["bessel", "poiseuille", "shearwave", "stokes", "tables"]
