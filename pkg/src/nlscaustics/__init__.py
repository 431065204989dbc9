"""Semiclassical focusing-NLS g-function machinery on finite-genus contours.

Layers, bottom to top:

* scattering  -- input data f0 and the phase f(z; x, t)
* geometry    -- branch configurations, arcs, loops, the radical R
* quadrature  -- adaptive Gauss-Kronrod on complex paths
* period      -- period/moment tables, determinant D, kernel K and its x/t
                 derivatives
* gfunction   -- h = 2g - f evaluation, sign checks, level curves
* modulation  -- branchpoint equations (vanishing regular parts) and
                 parameter continuation
* breaking    -- breaking-point location, curve tracing, genus transitions
* surfacecheck -- bilinear period identities on the spectral curve
* cli         -- command-line front end
"""

__version__ = "0.1.0"

from .scattering import ScatteringDatum, ExternalParams, eval_f0, eval_f
from .geometry import (
    BranchConfiguration,
    ContourSystem,
    RadicalEvaluator,
    build_contour,
    eval_radical,
    eval_radical_plus,
    plant_pair,
    remove_pair,
)

__all__ = [
    "__version__",
    "ScatteringDatum",
    "ExternalParams",
    "eval_f0",
    "eval_f",
    "BranchConfiguration",
    "ContourSystem",
    "RadicalEvaluator",
    "build_contour",
    "eval_radical",
    "eval_radical_plus",
    "plant_pair",
    "remove_pair",
]
