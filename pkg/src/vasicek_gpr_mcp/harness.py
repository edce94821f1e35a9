"""
Batch experiments: simulate -> calibrate cycles, summaries and prediction bands.

Run i of a batch draws everything (series and random initialization) from a
generator seeded with ``master_seed ^ i``, so results depend only on the run
index and never on worker scheduling.
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, VasicekGPRError
from .gpr import DEFAULT_JITTER, JitterPolicy, confidence_band, posterior
from .models import (
    BandRow,
    BatchSummary,
    CalibrationResult,
    CurveId,
    CurveParams,
    ExperimentConfig,
    Histogram,
    ObservationSet,
    OptimizerMethod,
    ParameterStats,
    PredictionRequest,
    RunRecord,
    TimeGrid,
    parameter_names,
)
from .optimize import calibrate
from .series_io import write_histograms, write_params_csv, write_summary_json
from .simulator import make_rng, simulate_log_bonds, sub_seed

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_RATES = (0.0001, 0.001, 0.01, 0.05, 0.1)


def default_threads() -> int:
    return os.cpu_count() or 1


# =============================================================================
# RUNS
# =============================================================================


def run_single(config: ExperimentConfig, run_index: int) -> RunRecord:
    """Simulate one series and calibrate to it; failures are recorded, not raised."""
    seed = sub_seed(config.master_seed, run_index)
    try:
        rng = make_rng(seed)
        grid = TimeGrid.uniform(config.n_points, config.maturity)
        series = simulate_log_bonds(config.true_params, config.curves, grid, rng, seed=seed, noise_var=config.noise_var)
        obs = ObservationSet.from_series(series, noise_var=config.noise_var)
        rho = getattr(config.true_params, "rho", 0.0)
        result = calibrate(obs, config.model_kind, config.optimizer, rng=rng, rho=rho)
    except (VasicekGPRError, ValueError, ArithmeticError) as e:
        logger.warning(f"Run {run_index} (seed {seed}) failed: {e}")
        return RunRecord(run_id=run_index, seed=seed, error=str(e))
    logger.debug(f"Run {run_index}: nll={result.final_nll:.6f} converged={result.converged}")
    return RunRecord(run_id=run_index, seed=seed, result=result)


def run_batch(config: ExperimentConfig, threads: Optional[int] = None) -> List[RunRecord]:
    """All runs of a batch in run-index order."""
    workers = threads or config.threads or default_threads()
    indices = range(config.n_runs)
    if workers <= 1 or config.n_runs == 1:
        return [run_single(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=min(workers, config.n_runs)) as pool:
        return list(pool.map(partial(run_single, config), indices))


# =============================================================================
# SUMMARIES
# =============================================================================


def histogram(values: Sequence[float], bins: int = 50) -> Histogram:
    """Equal-width bins spanning [min, max] of the values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("cannot build a histogram of no values")
    counts, edges = np.histogram(values, bins=bins, range=(float(values.min()), float(values.max())))
    return Histogram(edges=edges.tolist(), counts=counts.astype(int).tolist())


def _mean_std(values: np.ndarray) -> Tuple[float, float]:
    mean = float(np.mean(values))
    stdev = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return mean, stdev


def summarize(
    results: Sequence[CalibrationResult],
    bins: int = 50,
    n_failed: int = 0,
    true_params: Optional[CurveParams] = None,
) -> BatchSummary:
    """Per-parameter mean, sample stdev and histogram over the converged results."""
    if not results:
        raise DomainError("nothing to summarize")
    names = list(results[0].params.names)
    matrix = np.array([r.params.to_vector() for r in results], dtype=float)
    converged = np.array([r.converged for r in results], dtype=bool)
    included = matrix[converged]

    parameters: Dict[str, ParameterStats] = {}
    if included.shape[0]:
        for k, name in enumerate(names):
            mean, stdev = _mean_std(included[:, k])
            parameters[name] = ParameterStats(mean=mean, stdev=stdev, histogram=histogram(included[:, k], bins))
    else:
        logger.warning("No converged runs; only unfiltered statistics are available")

    unfiltered = {name: _mean_std(matrix[:, k]) for k, name in enumerate(names)}
    methods = {r.method for r in results}
    method: Optional[OptimizerMethod] = methods.pop() if len(methods) == 1 else None
    n_runs = len(results) + n_failed
    return BatchSummary(
        parameter_names=names,
        n_runs=n_runs,
        n_included=int(included.shape[0]),
        n_excluded=int(len(results) - included.shape[0]),
        n_failed=n_failed,
        convergence_rate=float(included.shape[0]) / n_runs,
        parameters=parameters,
        unfiltered_mean={name: value[0] for name, value in unfiltered.items()},
        unfiltered_stdev={name: value[1] for name, value in unfiltered.items()},
        true_params=true_params.as_dict() if true_params is not None else None,
        method=method,
    )


def summarize_records(records: Iterable[RunRecord], config: ExperimentConfig) -> BatchSummary:
    records = list(records)
    results = [record.result for record in records if record.result is not None]
    n_failed = len(records) - len(results)
    if results:
        summary = summarize(results, config.bins, n_failed=n_failed, true_params=config.true_params)
    else:
        logger.warning(f"All {n_failed} runs failed; the summary carries no statistics")
        summary = BatchSummary(
            parameter_names=list(parameter_names(config.model_kind)),
            n_runs=n_failed,
            n_included=0,
            n_excluded=0,
            n_failed=n_failed,
            convergence_rate=0.0,
            parameters={},
            unfiltered_mean={},
            unfiltered_stdev={},
            true_params=config.true_params.as_dict(),
            method=config.optimizer.method,
        )
    if config.optimizer.method == OptimizerMethod.ADAM:
        summary = summary.model_copy(update={"learning_rate": config.optimizer.learning_rate})
    return summary


def write_experiment_outputs(summary: BatchSummary, records: Sequence[RunRecord], out_dir: Path) -> List[Path]:
    """params.csv, summary.json and one hist_<param>.csv per parameter."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        write_params_csv(records, summary.parameter_names, out_dir / "params.csv"),
        write_summary_json(summary, out_dir / "summary.json"),
    ]
    written.extend(write_histograms(summary, out_dir))
    return written


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> BatchSummary:
    """Run the batch, aggregate it and, when ``output_dir`` is set, write the result files."""
    started = time.perf_counter()
    records = run_batch(config, threads)
    summary = summarize_records(records, config)
    elapsed = time.perf_counter() - started
    logger.info(
        f"Experiment {config.model_kind.value}/{config.optimizer.method.value}: {config.n_runs} runs in "
        f"{elapsed:.1f}s, {summary.n_included} converged, {summary.n_failed} failed"
    )
    if config.output_dir is not None:
        write_experiment_outputs(summary, records, config.output_dir)
        logger.info(f"Wrote experiment outputs to {config.output_dir}")
    return summary


def run_learning_rate_sweep(
    config: ExperimentConfig, rates: Sequence[float] = DEFAULT_SWEEP_RATES, threads: Optional[int] = None
) -> Dict[float, BatchSummary]:
    """One Adam batch per learning rate; outputs go to ``output_dir/lr_<rate>``."""
    summaries: Dict[float, BatchSummary] = {}
    for rate in rates:
        optimizer = config.optimizer.model_copy(update={"method": OptimizerMethod.ADAM, "learning_rate": float(rate)})
        update: Dict[str, object] = {"optimizer": optimizer}
        if config.output_dir is not None:
            update["output_dir"] = Path(config.output_dir) / f"lr_{rate:g}"
        summaries[float(rate)] = run_experiment(config.model_copy(update=update), threads)
    return summaries


# =============================================================================
# PREDICTION BANDS
# =============================================================================


def observed_subset(obs: ObservationSet, prefix: int, extra_indices: Sequence[int] = ()) -> Optional[ObservationSet]:
    """The first ``prefix`` grid positions plus ``extra_indices``; None when nothing is observed."""
    n = obs.grid.size
    if prefix < 0 or prefix > n:
        raise DomainError(f"observed prefix {prefix} outside [0, {n}]")
    for index in extra_indices:
        if not 0 <= index < n:
            raise DomainError(f"extra index {index} outside [0, {n - 1}]")
    positions = sorted(set(range(prefix)) | set(int(i) for i in extra_indices))
    return obs.take(positions) if positions else None


def predict_band(
    params: CurveParams,
    obs: ObservationSet,
    prefix: int,
    target_times: Optional[Sequence[float]] = None,
    extra_indices: Sequence[int] = (),
    level: float = 0.95,
    curves: Optional[Sequence[CurveId]] = None,
    policy: JitterPolicy = DEFAULT_JITTER,
) -> List[BandRow]:
    """Posterior band of the log prices at the target times, given part of the series.

    Targets default to every grid time on every curve of the series.
    """
    observed = observed_subset(obs, prefix, extra_indices)
    times = obs.grid.points if target_times is None else np.asarray(target_times, dtype=float)
    target_curves = tuple(CurveId(c) for c in curves) if curves else obs.curves
    request = PredictionRequest.on_times(times, target_curves, maturity=obs.maturity)
    belief = posterior(params, observed, request, policy)
    lower, upper = confidence_band(belief, level)
    return [
        BandRow(t=t, curve=curve, mean=m, lower=lo, upper=hi)
        for (t, curve), m, lo, hi in zip(belief.labels, belief.mean.tolist(), lower.tolist(), upper.tolist())
    ]


__all__ = [
    "DEFAULT_SWEEP_RATES",
    "default_threads",
    "run_single",
    "run_batch",
    "histogram",
    "summarize",
    "summarize_records",
    "write_experiment_outputs",
    "run_experiment",
    "run_learning_rate_sweep",
    "observed_subset",
    "predict_band",
]
