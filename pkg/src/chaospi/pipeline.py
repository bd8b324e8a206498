"""Interval-forecast pipelines built on lagged autoregression and NSGA-II.

Two model families share the same first two steps:

1. Embed the series (delay ``tau``, dimension ``m``, usually from the chaos
   diagnostics) into lagged input/target rows and hold out the last
   ``test_horizon`` targets.
2. Fit a linear autoregression ``y = a0 + a1*y[t-tau] + ... + am*y[t-m*tau]``
   with NSGA-II, minimizing SMAPE and maximizing directional symmetry over
   the training rows; coefficients live in (-0.5, 0.5).

They then diverge on how the interval half-widths around the point forecast
are chosen, both expressed as multiples (r1 down, r2 up) of the population
standard deviation of the training point predictions:

* two-stage: exhaustive grid search over (r1, r2), smallest average width
  subject to a training coverage target;
* three-stage: a second NSGA-II run trading coverage (PICP) against width
  (PIAW) directly, with a single shared r or separate r1/r2 depending on the
  variant.

Every run is reproducible from its integer seed: the two optimizer stages
draw their own seeds from disjoint SeedSequence children, so two- and
three-stage runs with the same seed share an identical stage-2 model.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .chaos import AnalyzeOptions, ChaosReport, EmbeddingParams, analyze, reconstruct
from .errors import (
    ConfigError,
    DegenerateTrainingWarning,
    DimensionMismatchError,
    EmptyFrontError,
    InvalidSplitError,
    SeriesTooShortError,
    ZeroVarianceError,
)
from .nsga2 import NsgaParams, Problem, run as nsga_run
from .series import TimeSeries

# Open-interval constraints (-0.5, 0.5) for coefficients and (0, 1) for the
# width multipliers are realized by shrinking the optimizer box by a margin,
# so clipping can never park a variable on an excluded endpoint.
_BOUND_MARGIN = 1e-6

MODEL_KINDS = ("two_stage", "three_stage_single", "three_stage_dual")
POINT_POLICIES = ("min_smape", "max_ds", "knee")
INTERVAL_POLICIES = ("max_picp", "min_piaw_above")


@dataclass
class ArModel:
    """Linear autoregression on delayed lags; ``coeffs[0]`` is the intercept."""

    coeffs: np.ndarray
    params: EmbeddingParams

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.params.m + 1,):
            raise DimensionMismatchError(
                f"need {self.params.m + 1} coefficients, got {self.coeffs.shape}"
            )
        if not np.all(np.abs(self.coeffs) < 0.5):
            raise ConfigError("coefficients must lie strictly inside (-0.5, 0.5)")


@dataclass(frozen=True)
class Stage2Solution:
    """One non-dominated point model with its training objectives."""

    model: ArModel
    smape: float
    ds: float


@dataclass(frozen=True)
class IntervalParams:
    """Interval geometry: bounds are ``point - r1*sigma`` and ``point + r2*sigma``."""

    r1: float
    r2: float
    sigma: float

    def __post_init__(self):
        if not (0.0 < self.r1 < 1.0 and 0.0 < self.r2 < 1.0):
            raise ConfigError("r1 and r2 must lie strictly inside (0, 1)")
        if not self.sigma >= 0.0:
            raise ConfigError("sigma must be non-negative")


@dataclass(frozen=True)
class Stage3Solution:
    """One non-dominated width configuration with its training objectives."""

    params: IntervalParams
    picp: float
    piaw: float


@dataclass
class IntervalSeries:
    """Aligned point forecasts, interval bounds, and actuals."""

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    actual: np.ndarray
    indices: np.ndarray
    labels: list[str] | None
    picp: float
    piaw: float

    def __post_init__(self):
        n = self.point.shape[0]
        for name in ("lower", "upper", "actual", "indices"):
            if getattr(self, name).shape != (n,):
                raise DimensionMismatchError(f"{name} must align with point forecasts")
        if not np.all(self.lower <= self.upper):
            raise ConfigError("lower bounds must not exceed upper bounds")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to run one model on one series."""

    model: str = "two_stage"
    test_horizon: int = 6
    tau: int | None = None
    m: int | None = None
    chaos: AnalyzeOptions = field(default_factory=AnalyzeOptions)
    stage2: NsgaParams = field(
        default_factory=lambda: NsgaParams(
            pop_size=50,
            generations=300,
            crossover_prob=0.8,
            crossover_eta=15.0,
            mutation_prob=1.0,
            mutation_eta=20.0,
        )
    )
    stage3: NsgaParams = field(
        default_factory=lambda: NsgaParams(
            pop_size=90,
            generations=300,
            crossover_prob=0.75,
            crossover_eta=15.0,
            mutation_prob=1.0,
            mutation_eta=20.0,
        )
    )
    grid_step: float = 0.01
    picp_target: float = 0.95
    point_policy: str = "min_smape"
    interval_policy: str = "max_picp"
    picp_threshold: float = 0.95
    standardize: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.test_horizon < 1:
            raise ConfigError("test_horizon must be >= 1")
        if self.point_policy not in POINT_POLICIES:
            raise ConfigError(f"point_policy must be one of {POINT_POLICIES}")
        if self.interval_policy not in INTERVAL_POLICIES:
            raise ConfigError(f"interval_policy must be one of {INTERVAL_POLICIES}")
        if not 0.0 < self.grid_step < 0.5:
            raise ConfigError("grid_step must lie in (0, 0.5)")
        if not 0.0 < self.picp_target <= 1.0:
            raise ConfigError("picp_target must lie in (0, 1]")
        if not 0.0 < self.picp_threshold <= 1.0:
            raise ConfigError("picp_threshold must lie in (0, 1]")


@dataclass
class RunResult:
    """One seeded end-to-end run of a model."""

    model_kind: str
    seed: int
    tau: int
    m: int
    lyapunov: float
    chaotic: bool
    point_model: ArModel
    interval: IntervalParams
    train: IntervalSeries
    test: IntervalSeries
    train_smape: float
    train_ds: float
    front: np.ndarray
    front_objectives: tuple[str, str]


@dataclass
class ExperimentReport:
    """Aggregate of one model re-run over many seeds on one series.

    Means and standard deviations (population) summarize test PICP/PIAW over
    the successful runs; failed seeds are kept in ``failures`` as
    (seed, message) pairs.
    """

    model_kind: str
    seeds: list[int]
    chaos: ChaosReport
    results: list[RunResult]
    failures: list[tuple[int, str]]
    picp_mean: float
    picp_std: float
    piaw_mean: float
    piaw_std: float


# NSGA-II blocks tuned for monthly CPI-style series (stage 2, then the
# three-stage single-r and dual-r refinements).
PRESETS: dict[str, dict[str, NsgaParams]] = {
    "cpi_food_beverages": {
        "stage2": NsgaParams(50, 300, 0.8, 15.0, 1.0, None, 20.0),
        "stage3_single": NsgaParams(90, 300, 0.75, 15.0, 1.0, None, 20.0),
        "stage3_dual": NsgaParams(70, 200, 0.75, 15.0, 1.0, None, 20.0),
    },
    "cpi_fuel_light": {
        "stage2": NsgaParams(50, 100, 0.85, 15.0, 1.0, None, 20.0),
        "stage3_single": NsgaParams(90, 350, 0.85, 15.0, 1.0, None, 20.0),
        # population bumped 75 -> 76: the engine pairs parents, so it needs
        # an even population
        "stage3_dual": NsgaParams(76, 300, 0.8, 15.0, 1.0, None, 20.0),
    },
    "cpi_headline": {
        "stage2": NsgaParams(50, 50, 0.95, 15.0, 1.0, None, 20.0),
        "stage3_single": NsgaParams(90, 100, 0.95, 15.0, 1.0, None, 20.0),
        "stage3_dual": NsgaParams(70, 400, 0.75, 15.0, 1.0, None, 20.0),
    },
}


def apply_preset(config: PipelineConfig, name: str) -> PipelineConfig:
    """Swap in the preset NSGA-II blocks matching ``config.model``."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    block = PRESETS[name]
    stage3 = block["stage3_dual"] if config.model == "three_stage_dual" else block["stage3_single"]
    return replace(config, stage2=block["stage2"], stage3=stage3)


def ar_predict(model: ArModel, inputs: np.ndarray) -> np.ndarray:
    """One-step-ahead predictions for rows of lagged inputs."""
    X = np.asarray(inputs, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.params.m:
        raise DimensionMismatchError(
            f"inputs must be (rows, {model.params.m}), got {X.shape}"
        )
    return model.coeffs[0] + X @ model.coeffs[1:]


def fit_stage2(
    inputs: np.ndarray,
    targets: np.ndarray,
    emb: EmbeddingParams,
    params: NsgaParams,
) -> list[Stage2Solution]:
    """Fit the autoregression front: minimize SMAPE, maximize directional
    symmetry (internally minimized as its negative)."""
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[1] != emb.m or y.shape != (X.shape[0],):
        raise DimensionMismatchError("inputs/targets shaped inconsistently with m")
    if X.shape[0] < emb.m + 2:
        raise SeriesTooShortError(
            f"need at least m + 2 = {emb.m + 2} training rows, got {X.shape[0]}"
        )

    def evaluate(c: np.ndarray) -> tuple[float, float]:
        pred = c[0] + X @ c[1:]
        return metrics.smape(y, pred), -metrics.directional_symmetry(y, pred)

    bound = 0.5 - _BOUND_MARGIN
    problem = Problem(
        n_vars=emb.m + 1,
        lower=np.full(emb.m + 1, -bound),
        upper=np.full(emb.m + 1, bound),
        evaluate=evaluate,
    )
    front = nsga_run(problem, params)
    return [
        Stage2Solution(model=ArModel(ind.x.copy(), emb), smape=ind.f[0], ds=-ind.f[1])
        for ind in front
    ]


def select_point_model(front: list[Stage2Solution], policy: str = "min_smape") -> Stage2Solution:
    """Pick one model from the stage-2 front.

    ``min_smape`` (default) prefers accuracy, breaking ties by higher DS and
    then position; ``max_ds`` is the mirror image; ``knee`` takes the point
    farthest from the chord through the front's two extreme points, falling
    back to ``min_smape`` when the front has fewer than three points.
    """
    if not front:
        raise EmptyFrontError("stage-2 front is empty")
    if policy not in POINT_POLICIES:
        raise ConfigError(f"unknown point policy {policy!r}")
    indexed = list(enumerate(front))
    if policy == "max_ds":
        return min(indexed, key=lambda t: (-t[1].ds, t[1].smape, t[0]))[1]
    if policy == "knee" and len(front) >= 3:
        pts = np.array([(s.smape, -s.ds) for s in front])
        a = min(indexed, key=lambda t: (pts[t[0], 0], pts[t[0], 1], t[0]))[0]
        b = min(indexed, key=lambda t: (pts[t[0], 1], pts[t[0], 0], t[0]))[0]
        chord = pts[b] - pts[a]
        norm = float(np.hypot(chord[0], chord[1]))
        if norm > 0.0:
            rel = pts - pts[a]
            dists = np.abs(chord[0] * rel[:, 1] - chord[1] * rel[:, 0]) / norm
            best = min(indexed, key=lambda t: (-dists[t[0]], t[0]))[0]
            return front[best]
    return min(indexed, key=lambda t: (t[1].smape, -t[1].ds, t[0]))[1]


def pi_bounds(predictions: np.ndarray, params: IntervalParams) -> tuple[np.ndarray, np.ndarray]:
    """Constant-width bounds around the point predictions."""
    p = np.asarray(predictions, dtype=float)
    return p - params.r1 * params.sigma, p + params.r2 * params.sigma


def grid_search_r(
    actual: np.ndarray,
    predicted: np.ndarray,
    sigma: float,
    grid_step: float = 0.01,
    picp_target: float = 0.95,
) -> IntervalParams:
    """Exhaustive search of (r1, r2) over the grid {step, 2*step, ..., 1-step}^2.

    Picks the smallest average width subject to training coverage reaching
    ``picp_target``; when no pair reaches it, maximizes coverage first. Ties
    always resolve to the lexicographically smallest (r1, r2).
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1 or a.size == 0:
        raise DimensionMismatchError("actual and predicted must be matching 1-d arrays")
    if not 0.0 < grid_step < 0.5:
        raise ConfigError("grid_step must lie in (0, 0.5)")
    if not 0.0 < picp_target <= 1.0:
        raise ConfigError("picp_target must lie in (0, 1]")
    if sigma < 0.0:
        raise ConfigError("sigma must be non-negative")

    count = int(math.floor((1.0 - grid_step) / grid_step + 1e-9))
    rs = grid_step * np.arange(1, count + 1)
    if sigma == 0.0:
        warnings.warn(
            "training predictions are constant; intervals collapse to zero width",
            DegenerateTrainingWarning,
            stacklevel=2,
        )
        return IntervalParams(r1=float(rs[0]), r2=float(rs[0]), sigma=0.0)

    d = p - a
    low_ok = d[:, None] <= rs[None, :] * sigma  # (n, k): r1 big enough below
    high_ok = (-d)[:, None] <= rs[None, :] * sigma  # (n, k): r2 big enough above
    covered = low_ok.astype(float).T @ high_ok.astype(float)  # (k, k) counts
    picp_grid = covered / a.size

    hit = np.argwhere(picp_grid >= picp_target)
    if hit.size == 0:
        best_cov = picp_grid.max()
        hit = np.argwhere(picp_grid == best_cov)
    best = min(hit.tolist(), key=lambda ij: (rs[ij[0]] + rs[ij[1]], rs[ij[0]], rs[ij[1]]))
    return IntervalParams(r1=float(rs[best[0]]), r2=float(rs[best[1]]), sigma=float(sigma))


def fit_stage3(
    actual: np.ndarray,
    predicted: np.ndarray,
    sigma: float,
    variant: str,
    params: NsgaParams,
) -> list[Stage3Solution]:
    """Optimize interval width multipliers directly: maximize PICP (minimized
    as its negative) against PIAW on the training rows.

    ``variant`` is ``"single"`` (one shared r) or ``"dual"`` (separate
    r1, r2); multipliers live strictly inside (0, 1).
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1 or a.size == 0:
        raise DimensionMismatchError("actual and predicted must be matching 1-d arrays")
    if variant not in ("single", "dual"):
        raise ConfigError(f"variant must be 'single' or 'dual', got {variant!r}")
    if sigma < 0.0:
        raise ConfigError("sigma must be non-negative")
    n_vars = 1 if variant == "single" else 2

    def evaluate(v: np.ndarray) -> tuple[float, float]:
        r1, r2 = float(v[0]), float(v[-1])
        lower = p - r1 * sigma
        upper = p + r2 * sigma
        return -metrics.picp(a, lower, upper), metrics.piaw(lower, upper)

    problem = Problem(
        n_vars=n_vars,
        lower=np.full(n_vars, _BOUND_MARGIN),
        upper=np.full(n_vars, 1.0 - _BOUND_MARGIN),
        evaluate=evaluate,
    )
    front = nsga_run(problem, params)
    return [
        Stage3Solution(
            params=IntervalParams(r1=float(ind.x[0]), r2=float(ind.x[-1]), sigma=float(sigma)),
            picp=-ind.f[0],
            piaw=ind.f[1],
        )
        for ind in front
    ]


def select_interval_params(
    front: list[Stage3Solution],
    policy: str = "max_picp",
    picp_threshold: float = 0.95,
) -> Stage3Solution:
    """Pick one width configuration from the stage-3 front.

    ``max_picp`` (default) takes the highest training coverage, tie-broken
    by smaller width; ``min_piaw_above`` takes the narrowest configuration
    whose coverage reaches ``picp_threshold``, falling back to ``max_picp``
    when none does.
    """
    if not front:
        raise EmptyFrontError("stage-3 front is empty")
    if policy not in INTERVAL_POLICIES:
        raise ConfigError(f"unknown interval policy {policy!r}")
    indexed = list(enumerate(front))
    if policy == "min_piaw_above":
        ok = [t for t in indexed if t[1].picp >= picp_threshold]
        if ok:
            return min(ok, key=lambda t: (t[1].piaw, -t[1].picp, t[0]))[1]
    return min(indexed, key=lambda t: (-t[1].picp, t[1].piaw, t[0]))[1]


def _stage_seeds(seed: int) -> tuple[int, int]:
    """Independent per-stage seeds derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(c.generate_state(1, np.uint64)[0]) for c in children)


def _chaos_options(config: PipelineConfig) -> AnalyzeOptions:
    opts = config.chaos
    if config.tau is not None:
        opts = replace(opts, tau=config.tau)
    if config.m is not None:
        opts = replace(opts, m=config.m)
    return opts


def _interval_series(pred, actual, indices, labels, ip: IntervalParams) -> IntervalSeries:
    lower, upper = pi_bounds(pred, ip)
    return IntervalSeries(
        point=pred,
        lower=lower,
        upper=upper,
        actual=actual,
        indices=indices,
        labels=labels,
        picp=metrics.picp(actual, lower, upper),
        piaw=metrics.piaw(lower, upper),
    )


def _run_seeded(
    series: TimeSeries,
    config: PipelineConfig,
    chaos: ChaosReport,
    seed: int,
) -> RunResult:
    """One seeded run after the (shared) chaos analysis."""
    x = series.values
    n = x.size
    k = config.test_horizon
    if k >= n:
        raise InvalidSplitError(f"test_horizon {k} leaves no training data for length {n}")
    emb_params = EmbeddingParams(tau=chaos.tau, m=chaos.m)

    if config.standardize:
        mu = float(np.mean(x[: n - k]))
        scale = float(np.std(x[: n - k]))
        if scale == 0.0:
            raise ZeroVarianceError("training segment is constant; cannot standardize")
        fit_values = (x - mu) / scale
    else:
        mu, scale = 0.0, 1.0
        fit_values = x

    data = reconstruct(TimeSeries(fit_values), emb_params)
    n_train = data.rows - k
    if n_train < emb_params.m + 2:
        raise SeriesTooShortError(
            f"{n_train} training rows after embedding; need at least {emb_params.m + 2}"
        )

    s2_seed, s3_seed = _stage_seeds(seed)
    front2 = fit_stage2(
        data.inputs[:n_train],
        data.targets[:n_train],
        emb_params,
        replace(config.stage2, seed=s2_seed),
    )
    chosen = select_point_model(front2, config.point_policy)
    model = chosen.model

    pred_all = ar_predict(model, data.inputs)
    if config.standardize:
        pred_all = mu + scale * pred_all
    actual_all = x[data.origin_indices]
    labels_all = (
        [series.labels[i] for i in data.origin_indices] if series.labels else None
    )
    pred_tr, pred_te = pred_all[:n_train], pred_all[n_train:]
    act_tr, act_te = actual_all[:n_train], actual_all[n_train:]
    sigma = float(np.std(pred_tr))

    if config.model == "two_stage":
        ip = grid_search_r(act_tr, pred_tr, sigma, config.grid_step, config.picp_target)
        front = np.array([(s.smape, -s.ds) for s in front2])
        front_objectives = ("smape", "neg_ds")
    else:
        variant = "single" if config.model == "three_stage_single" else "dual"
        front3 = fit_stage3(
            act_tr, pred_tr, sigma, variant, replace(config.stage3, seed=s3_seed)
        )
        sel3 = select_interval_params(front3, config.interval_policy, config.picp_threshold)
        ip = sel3.params
        front = np.array([(-s.picp, s.piaw) for s in front3])
        front_objectives = ("neg_picp", "piaw")

    idx_tr, idx_te = data.origin_indices[:n_train], data.origin_indices[n_train:]
    lab_tr = labels_all[:n_train] if labels_all else None
    lab_te = labels_all[n_train:] if labels_all else None
    return RunResult(
        model_kind=config.model,
        seed=seed,
        tau=emb_params.tau,
        m=emb_params.m,
        lyapunov=chaos.lyapunov,
        chaotic=chaos.chaotic,
        point_model=model,
        interval=ip,
        train=_interval_series(pred_tr, act_tr, idx_tr, lab_tr, ip),
        test=_interval_series(pred_te, act_te, idx_te, lab_te, ip),
        train_smape=metrics.smape(act_tr, pred_tr),
        train_ds=metrics.directional_symmetry(act_tr, pred_tr),
        front=front,
        front_objectives=front_objectives,
    )


def run_two_stage(series: TimeSeries, config: PipelineConfig) -> RunResult:
    """Grid-search interval model; uses ``config.seed``."""
    cfg = replace(config, model="two_stage")
    chaos = analyze(series, _chaos_options(cfg))
    return _run_seeded(series, cfg, chaos, cfg.seed)


def run_three_stage(
    series: TimeSeries, config: PipelineConfig, variant: str | None = None
) -> RunResult:
    """NSGA-II interval model; ``variant`` overrides the config's model kind."""
    if variant is not None:
        if variant not in ("single", "dual"):
            raise ConfigError(f"variant must be 'single' or 'dual', got {variant!r}")
        cfg = replace(config, model=f"three_stage_{variant}")
    else:
        cfg = config if config.model.startswith("three_stage") else replace(
            config, model="three_stage_single"
        )
    chaos = analyze(series, _chaos_options(cfg))
    return _run_seeded(series, cfg, chaos, cfg.seed)


def run_model(series: TimeSeries, config: PipelineConfig) -> tuple[RunResult, ChaosReport]:
    """Run ``config.model`` once with ``config.seed``; also hand back the
    chaos report so callers can serialize its curves."""
    chaos = analyze(series, _chaos_options(config))
    return _run_seeded(series, config, chaos, config.seed), chaos


def run_experiment(
    series: TimeSeries,
    config: PipelineConfig,
    seeds: list[int],
    workers: int = 1,
) -> ExperimentReport:
    """Re-run one model over many seeds and aggregate test-set quality.

    The chaos analysis runs once and is shared. Seeds run independently (in
    threads when ``workers`` > 1) and results are collected in seed order, so
    the report does not depend on scheduling. A failing seed is recorded and
    skipped; aggregates cover the successful runs.
    """
    if not seeds:
        raise ConfigError("need at least one seed")
    chaos = analyze(series, _chaos_options(config))

    def one(seed: int) -> RunResult:
        return _run_seeded(series, config, chaos, seed)

    outcomes: list[RunResult | Exception] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(one, s) for s in seeds]
            for fut in futures:
                outcomes.append(fut.exception() or fut.result())
    else:
        for s in seeds:
            try:
                outcomes.append(one(s))
            except Exception as exc:  # noqa: BLE001 - preserved in the report
                outcomes.append(exc)

    results = [o for o in outcomes if isinstance(o, RunResult)]
    failures = [
        (seed, f"{type(o).__name__}: {o}")
        for seed, o in zip(seeds, outcomes)
        if not isinstance(o, RunResult)
    ]
    if results:
        picps = np.array([r.test.picp for r in results])
        piaws = np.array([r.test.piaw for r in results])
        stats = (
            float(picps.mean()),
            float(picps.std()),
            float(piaws.mean()),
            float(piaws.std()),
        )
    else:
        stats = (math.nan, math.nan, math.nan, math.nan)
    return ExperimentReport(
        model_kind=config.model,
        seeds=list(seeds),
        chaos=chaos,
        results=results,
        failures=failures,
        picp_mean=stats[0],
        picp_std=stats[1],
        piaw_mean=stats[2],
        piaw_std=stats[3],
    )
