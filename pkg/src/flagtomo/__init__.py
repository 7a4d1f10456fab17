"""Reconstruction of convex bodies from projection curvature radii."""

from .bodies import (
    Ball,
    BodySpec,
    CallableSupport,
    Ellipsoid,
    MinkowskiSum,
    SampledSupport,
    SupportFunction,
    Translated,
    ZonalHarmonic,
    ball,
    ellipsoid,
    minkowski_sum,
    restrict,
    support,
    surface_point,
    translated,
    zonal_harmonic,
)
from .conditions import (
    ConditionReport,
    check_belt_derivative,
    check_orthogonality,
    ode_residual,
    particular_flag_solution,
)
from .errors import (
    DegenerateFrame,
    FlagTomoError,
    IllConditioned,
    InsufficientSmoothness,
    InvalidParameter,
    NearPoleSingularity,
    NegativeRadius,
    NonSmooth,
    PoleDivergence,
    QuadratureUnderresolved,
    StepTooLarge,
)
from .estimators import ForwardMap, SupportFunctionReconstructor
from .forward import (
    FlagFunction,
    ForwardFlagFunction,
    SampledFlagFunction,
    VectorFlagFunction,
    projection_curvature_radius,
    read_flag_csv,
    write_flag_csv,
)
from .frames import CANONICAL, Direction, DualFlag, Flag, Frame, SphericalCoord, dual
from .reconstruct import (
    CentroidResult,
    QuadratureSpec,
    ReconstructionResult,
    belt_functional,
    centroid,
    ode_path_support,
    reconstruct_grid,
    reconstruct_support,
)

__version__ = "0.1.0"
