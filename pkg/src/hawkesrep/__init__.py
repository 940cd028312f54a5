"""Multivariate unmarked representations of univariate marked Hawkes processes."""

from .core import (
    Event,
    EventStream,
    KernelSpec,
    MarkPartition,
    MarkSpace,
    MvParams,
    TargetSpec,
    affine_fn,
    build_uniform_partition,
    categorical_density,
    constant_fn,
    locate_cell,
    select_bin_count,
    uniform_density,
)
from .estimator import HawkesRepresentation
from .infer import (
    AssumptionReport,
    FitResult,
    check_assumptions,
    fit_mle,
    fit_poisson_closed_form,
    log_likelihood,
    log_likelihood_gradient,
    mae,
)
from .io import (
    read_events,
    read_params,
    read_spec,
    write_events,
    write_params,
    write_spec,
)
from .quadrature import QuadratureError
from .represent import (
    AnsatzParams,
    DiscrepancyReport,
    build_ansatz,
    cell_averages,
    component_intensities,
    histogram_density,
    induced_ground_intensity,
    induced_mark_density,
    l1_discrepancy,
)
from .simulate import (
    ExplosionError,
    SimConfig,
    mv_residuals,
    simulate_mv,
    simulate_target,
    target_residuals,
)
from .stability import (
    BranchingMatrix,
    StationarityVerdict,
    branching_matrix,
    is_stationary,
    j_statistic,
    spectral_radius,
)
from .study import StudyConfig, StudyResult, load_config, log_spaced_counts, run_study

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "AssumptionReport",
    "BranchingMatrix",
    "DiscrepancyReport",
    "Event",
    "EventStream",
    "ExplosionError",
    "FitResult",
    "HawkesRepresentation",
    "KernelSpec",
    "MarkPartition",
    "MarkSpace",
    "MvParams",
    "QuadratureError",
    "SimConfig",
    "StationarityVerdict",
    "StudyConfig",
    "StudyResult",
    "TargetSpec",
    "affine_fn",
    "branching_matrix",
    "build_ansatz",
    "build_uniform_partition",
    "categorical_density",
    "cell_averages",
    "check_assumptions",
    "component_intensities",
    "constant_fn",
    "fit_mle",
    "fit_poisson_closed_form",
    "histogram_density",
    "induced_ground_intensity",
    "induced_mark_density",
    "is_stationary",
    "j_statistic",
    "l1_discrepancy",
    "load_config",
    "locate_cell",
    "log_likelihood",
    "log_likelihood_gradient",
    "log_spaced_counts",
    "mae",
    "mv_residuals",
    "read_events",
    "read_params",
    "read_spec",
    "run_study",
    "select_bin_count",
    "simulate_mv",
    "simulate_target",
    "spectral_radius",
    "target_residuals",
    "uniform_density",
    "write_events",
    "write_params",
    "write_spec",
]
