"""Deterministic simulation and numerics for decentralized entropy-regularized
semi-discrete barycenters.

The package splits into graph utilities (`graphs`), transport-dual numerics
(`transport`), the accelerated stale-block optimizer (`optim`), the
virtual-clock network simulator (`simulate`), presets and traces
(`experiments`), IDX ingestion (`mnist`), run configuration (`config`), the
command line (`cli`), and an estimator facade (`estimator`).
"""
from .config import ConfigError, RunConfig, config_from_dict, config_to_dict, execute, load_config, resolve, save_config
from .estimator import DecentralizedBarycenter
from .experiments import (
    BarycenterProblem,
    QuadraticNetworkProblem,
    Trace,
    TraceRow,
    consensus_distance,
    emit_csv,
    gaussian_preset,
    primal_estimate,
    quadratic_preset,
    read_trace,
    trace_from_snapshots,
)
from .graphs import (
    Graph,
    TopologySpec,
    build_topology,
    consensus_quadratic,
    lambda_max,
    laplacian,
    sqrt_laplacian,
)
from .mnist import (
    IdxFormatError,
    IdxImages,
    image_to_measure,
    parse_idx_images,
    parse_idx_labels,
    pixel_grid,
    read_manifest,
    synthetic_digit_idx,
    write_manifest,
)
from .optim import (
    DelaySchedule,
    QuadraticConsensusProblem,
    QuadraticOracle,
    ThetaSchedule,
    batch_size,
    quadratic_dual_eval,
    run_asbcds,
    run_pasbcds,
    step_size,
    theta_next,
)
from .simulate import VARIANTS, ActivationSchedule, CommModel, Snapshot, build_schedule, run_sim, sample_delay
from .transport import (
    DiscreteMeasure,
    Gaussian1D,
    SupportGrid,
    cost_column,
    dual_value_mc,
    exact_dual,
    grid_1d,
    sample_measure,
    softmax_primal,
    stochastic_grad,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunConfig",
    "config_from_dict",
    "config_to_dict",
    "execute",
    "load_config",
    "resolve",
    "save_config",
    "DecentralizedBarycenter",
    "BarycenterProblem",
    "QuadraticNetworkProblem",
    "Trace",
    "TraceRow",
    "consensus_distance",
    "emit_csv",
    "gaussian_preset",
    "primal_estimate",
    "quadratic_preset",
    "read_trace",
    "trace_from_snapshots",
    "Graph",
    "TopologySpec",
    "build_topology",
    "consensus_quadratic",
    "lambda_max",
    "laplacian",
    "sqrt_laplacian",
    "IdxFormatError",
    "IdxImages",
    "image_to_measure",
    "parse_idx_images",
    "parse_idx_labels",
    "pixel_grid",
    "read_manifest",
    "synthetic_digit_idx",
    "write_manifest",
    "DelaySchedule",
    "QuadraticConsensusProblem",
    "QuadraticOracle",
    "ThetaSchedule",
    "batch_size",
    "quadratic_dual_eval",
    "run_asbcds",
    "run_pasbcds",
    "step_size",
    "theta_next",
    "VARIANTS",
    "ActivationSchedule",
    "CommModel",
    "Snapshot",
    "build_schedule",
    "run_sim",
    "sample_delay",
    "DiscreteMeasure",
    "Gaussian1D",
    "SupportGrid",
    "cost_column",
    "dual_value_mc",
    "exact_dual",
    "grid_1d",
    "sample_measure",
    "softmax_primal",
    "stochastic_grad",
    "__version__",
]
