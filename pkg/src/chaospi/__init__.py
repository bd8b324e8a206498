"""Prediction intervals for univariate series via phase-space reconstruction
and bi-objective evolutionary optimization."""

from .chaos import (
    AnalyzeOptions,
    ChaosReport,
    EmbeddedDataset,
    EmbeddingParams,
    LyapunovEstimate,
    RosensteinOptions,
    analyze,
    autocorrelation,
    cao_min_dimension,
    lyapunov_rosenstein,
    reconstruct,
    select_delay,
)
from .eaf import (
    AttainmentSurface,
    FrontEnsemble,
    attainment_surface,
    attained_count,
    standard_levels,
)
from .metrics import directional_symmetry, piaw, picp, smape
from .nsga2 import Individual, NsgaParams, Problem, dominates, run as nsga2_run
from .pipeline import (
    ArModel,
    ExperimentReport,
    IntervalParams,
    IntervalSeries,
    PipelineConfig,
    RunResult,
    Stage2Solution,
    Stage3Solution,
    ar_predict,
    fit_stage2,
    fit_stage3,
    grid_search_r,
    pi_bounds,
    run_experiment,
    run_model,
    run_three_stage,
    run_two_stage,
    select_interval_params,
    select_point_model,
)
from .series import (
    SplitSeries,
    SummaryStats,
    TimeSeries,
    load_series,
    split_last_k,
    summarize,
    write_series,
)

__version__ = "0.1.0"
