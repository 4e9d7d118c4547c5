"""Explicit needle sequences for the probe method and a 2D cavity
reconstruction pipeline driven by Dirichlet-to-Neumann data."""

from .bessel import bessel_j1, bessel_j_half
from .errors import (
    BasisMismatchError,
    GeometryError,
    NeedleProbeError,
    QuadratureError,
    ScheduleError,
    SingularRayError,
    SolverError,
)
from .forward2d import DtnOperator, dtn_assemble, energy_gap, solve_mixed_bvp
from .geometry import Circle, Ellipse, Geometry2, RoundedPolygon, parse_geometry
from .mittag_leffler import ml_deriv, ml_eval, select_regime
from .needle2d import Box2, Direction2, Needle, NeedleSchedule, build_schedule, needle2d_eval, needle2d_grad
from .needle3d import (
    Frame3,
    SemiInfiniteQuadrature,
    needle3d_eval,
    needle3d_grad_on_axis,
    needle3d_on_axis,
    phi_k_eval,
    verify_harmonic,
    verify_singularity_extraction,
)
from .probe import (
    IndicatorTrace,
    Verdict,
    VerdictParams,
    classify,
    cone_energy_growth,
    indicator_function_direct,
    indicator_sequence,
    scan_reconstruct,
)
from .scenario import Scenario, parse_scenario, serialize_scenario
from .vekua import (
    HelmholtzNeedleParams,
    helmholtz_needle_eval,
    helmholtz_needle_on_axis,
    identity_5_10,
    tilde_needle_eval,
    vekua_transform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
