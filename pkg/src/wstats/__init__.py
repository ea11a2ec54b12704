"""Wasserstein statistics for one-dimensional location-scale models."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .densities import (
    LocationScaleModel,
    StandardDensity,
    load_tabulated,
    make_custom,
    make_standard,
    quantile_numeric,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSampleError,
    DensityError,
    EmptySampleError,
    QuantileError,
    SampleSizeMismatchError,
    SimulationError,
    SingularDensityError,
    UnknownFamilyError,
    WStatsError,
)
from .estimation import (
    FitResult,
    SolverOptions,
    fit_mle_location_scale,
    fit_w_general,
    fit_w_location_scale,
)
from .geometry import MetricTensor, metric_tensor, pythagoras_residual, verify_euclidean
from .models import LocationScaleFamily, ParametricModel, PdfModel
from .montecarlo import SimConfig, SimReport, convergence_sweep, run_simulation, sample
from .transport import (
    OrderedSample,
    Partition,
    cost_empirical_to_model,
    cost_general,
    cost_interval_sum,
    load_sample_csv,
    partition,
    w2_squared_models,
    w2_squared_samples,
)
