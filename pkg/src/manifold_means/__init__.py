"""Nonparametric inference for intrinsic and extrinsic means on manifolds.

Spheres (intrinsic Karcher and extrinsic means), axial data on RP^(N-1),
planar shapes on CP^(k-2) and tetrad shapes in Bookstein coordinates, with
chi-square and bootstrap confidence regions and paired tests.
"""
__version__ = "0.1.0"

from .errors import (
    BootstrapDegeneracyError,
    ConvergenceError,
    CutLocusError,
    DataError,
    DegeneracyError,
    DegenerateTetradError,
    FocalMeanError,
    ManifoldStatsError,
    NotSymmetricError,
    SingularCovarianceError,
)
