"""lbmlab: a desk-scale workbench for two-dimensional lattice kinetic
schemes on the nine-velocity lattice.

The package provides three time steppers sharing one moment basis
(moment relaxation, the link-wise rebuild, and the finite-difference
reconstruction), exact wall geometry with extrapolated virtual nodes,
a numerically-linearized plane-wave analyzer, and benchmark experiments
(shear-wave decay, Stokes disk eigenmodes, forced channel calibration)
with CSV artifact drivers.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .boundaries import (
    BOUNCE_BACK,
    DEEP_SOLID,
    FLUID,
    INTERPOLATED,
    VIRTUAL,
    Channel,
    Disk,
    PeriodicBox,
    WallSet,
    build_walls,
    classify,
    virtual_state,
)
from .errors import ConfigError, NumericalError
from .lattice import MomentMatrix, RelaxationRates, moment_matrix
from .schemes import FieldSet, SchemeConfig, step
from .stencils import StencilKind, ddx, ddy, stencil_symbol
from .vonneumann import (
    ModeBranch,
    PlaneWaveProbe,
    TransportFit,
    acm_predictions,
    amplification_matrix,
    closed_form_hyperviscosity,
    commensurate_k,
    dispersion_modes,
    effective_viscosity_curve,
)

__all__ = [
    "__version__",
    "BOUNCE_BACK",
    "DEEP_SOLID",
    "FLUID",
    "INTERPOLATED",
    "VIRTUAL",
    "Channel",
    "Disk",
    "PeriodicBox",
    "WallSet",
    "build_walls",
    "classify",
    "virtual_state",
    "ConfigError",
    "NumericalError",
    "MomentMatrix",
    "RelaxationRates",
    "moment_matrix",
    "FieldSet",
    "SchemeConfig",
    "step",
    "StencilKind",
    "ddx",
    "ddy",
    "stencil_symbol",
    "ModeBranch",
    "PlaneWaveProbe",
    "TransportFit",
    "acm_predictions",
    "amplification_matrix",
    "closed_form_hyperviscosity",
    "commensurate_k",
    "dispersion_modes",
    "effective_viscosity_curve",
]
