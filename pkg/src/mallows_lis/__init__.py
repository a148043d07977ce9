"""Mallows permutation models with L1 and L2 distances.

Hit-and-run and resampling samplers, longest-increasing-subsequence
statistics, the limiting-density fixed point, refined-path LIS bounds,
and a reproducible law-of-large-numbers experiment harness.
"""

from .density import (
    DensityConvergenceError,
    DensityGrid,
    density_bounds,
    lln_constant,
    rho_at,
    solve_density,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    parse_config,
    run_lln_experiment,
    target_constant,
    verify_detailed_balance,
    verify_displacement,
    verify_local_measure,
    verify_paths,
    verify_stationarity,
)
from .models import (
    ExactDistribution,
    ModelKind,
    ModelParams,
    energy,
    exact_distribution,
    exact_sample,
    log_weight,
)
from .paths import (
    PathSpec,
    PathGeometry,
    RefinedPath,
    block_bounds,
    enumerate_refined_paths,
    geometry,
    lower_bound_lis,
    upper_bound_lis,
)
from .perm import (
    PartialBijection,
    Permutation,
    PointSet,
    displacement_count,
    graph_points,
    inverse,
    lis,
    lis_bruteforce,
    lis_dp,
    restrict,
    reverse_complement,
)
from .samplers import (
    ChainState,
    ResampleSpec,
    StepTrace,
    har_step_l1,
    har_step_l2,
    resample_l2,
    run_chain,
    uniform_perm,
)
from .stats import (
    EmpiricalMeasure2D,
    TestFunction,
    bk_functions,
    displacement_tail,
    integrate,
    mu_local,
    nu_measure,
    reference_integral,
    tv_distance,
)

__version__ = "0.1.0"
