"""Random planar maps with Boltzmann face weights via labeled four-type trees."""

from ._accel import NUMBA_ENABLED, backend_name
from .bijection import RootedPlanarMap, bdg_forward, boltzmann_weight, distances, faces
from .errors import *  # noqa: F401,F403
from .reroot import min_label_vertex, rebase_displacements, plan_reroot, reroot, truncate_at
from .snake import SnakePath, condition_snake, sample_snake, snake_ensemble
from .stats import (
    OccupationPaths,
    ProfileHistogram,
    ScalingEstimate,
    estimate_scaling,
    occupation_paths,
    profile,
    profile_functional_compare,
    radius,
    uniform_vertex_distance,
)
from .trees import (
    Condition,
    DisplacementLaw,
    MultitypeSpatialTree,
    contour,
    sample_conditioned,
    sample_displacement,
    sample_gw,
    validate,
)
from .weights import (
    CriticalityReport,
    OffspringLaws,
    WeightSequence,
    build_offspring,
    fixture,
    mixed_fixture,
    q4_fixture,
    solve_fixed_point,
)

__version__ = "0.1.0"
