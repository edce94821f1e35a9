"""
Command-line interface of the Vasicek GPR toolkit.

    vasicek-gpr [--seed N] [--config FILE] [--out PATH] [--format csv|json]
                [--threads N] [--debug] <command> [options]

Commands: simulate, calibrate, predict, experiment, metrics, serve.
Exit codes: 0 success, 1 usage/configuration/input error, 2 runtime failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .config import (
    build_experiment_config,
    build_jitter_policy,
    build_optimizer_config,
    env_log_level,
    env_threads,
    load_config,
    load_environment,
    merged,
    true_params_from,
)
from .errors import ConfigurationError, SeriesParseError, VasicekGPRError
from .harness import predict_band, run_experiment, run_learning_rate_sweep
from .metrics import evaluate
from .models import (
    CurveId,
    ModelKind,
    ObservationSet,
    RunRecord,
    SplitSpec,
    SplitStrategy,
    TimeGrid,
    model_kind_of,
)
from .optimize import calibrate
from .series_io import (
    load_params,
    read_series,
    write_band_csv,
    write_params_csv,
    write_series_csv,
    write_series_json,
    write_trace_csv,
)
from .simulator import make_rng, simulate_log_bonds
from .transport import add_transport_arguments, run_server

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model_kind(raw: Any) -> ModelKind:
    try:
        return ModelKind(raw)
    except ValueError:
        raise ConfigurationError(f"model_kind must be 'single' or 'multi', got {raw!r}") from None


def _float_list(raw: str) -> List[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from None


def _curve_list(raw: str) -> List[CurveId]:
    try:
        return [CurveId(part.strip()) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"curves must be 'zero' and/or 'delta', got {raw!r}") from None


def create_parser() -> CliArgumentParser:
    parser = CliArgumentParser(
        prog="vasicek-gpr",
        description="Calibrate single- and multi-curve Vasicek models with Gaussian process regression",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="Seed (master seed for experiments)")
    parser.add_argument("--config", type=Path, default=None, help="INI config file")
    parser.add_argument("--out", type=Path, default=None, help="Output file (directory for experiment)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format (default: csv)")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes for batch runs")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")

    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    simulate = commands.add_parser("simulate", help="Simulate a log-bond price series")
    simulate.add_argument("--model", choices=[k.value for k in ModelKind], default=None)
    simulate.add_argument("--params", type=Path, default=None, help="JSON parameter file (default: published truth)")
    simulate.add_argument("--n-points", type=int, default=None)
    simulate.add_argument("--maturity", type=float, default=None)
    simulate.add_argument("--noise-var", type=float, default=None)
    simulate.add_argument("--curves", type=_curve_list, default=None, help="e.g. zero,delta")

    calibrate_cmd = commands.add_parser("calibrate", help="Calibrate model parameters to a series")
    calibrate_cmd.add_argument("series", type=Path)
    calibrate_cmd.add_argument("--model", choices=[k.value for k in ModelKind], default=None)
    calibrate_cmd.add_argument("--method", choices=["cg", "adam"], default=None)
    calibrate_cmd.add_argument("--learning-rate", type=float, default=None)
    calibrate_cmd.add_argument("--epochs", type=int, default=None)
    calibrate_cmd.add_argument("--max-iters", type=int, default=None)
    calibrate_cmd.add_argument("--init", type=Path, default=None, help="JSON parameter file for the start point")
    calibrate_cmd.add_argument("--rho", type=float, default=None, help="Fixed Brownian correlation (multi)")
    calibrate_cmd.add_argument("--maturity", type=float, default=None)
    calibrate_cmd.add_argument("--noise-var", type=float, default=0.0)
    calibrate_cmd.add_argument("--trace", type=Path, default=None, help="Write the optimizer trace CSV here")

    predict = commands.add_parser("predict", help="Posterior prediction band from part of a series")
    predict.add_argument("series", type=Path)
    predict.add_argument("--params", type=Path, required=True)
    predict.add_argument("--prefix", type=int, default=None, help="Number of leading points observed")
    predict.add_argument("--extra-index", type=int, action="append", default=None, help="Further observed index")
    predict.add_argument("--targets", type=_float_list, default=None, help="Target times (default: the grid)")
    predict.add_argument("--curves", type=_curve_list, default=None)
    predict.add_argument("--level", type=float, default=None)
    predict.add_argument("--maturity", type=float, default=None)
    predict.add_argument("--noise-var", type=float, default=0.0)

    experiment = commands.add_parser("experiment", help="Batch of simulate -> calibrate runs")
    experiment.add_argument("--model", choices=[k.value for k in ModelKind], default=None)
    experiment.add_argument("--method", choices=["cg", "adam"], default=None)
    experiment.add_argument("--runs", type=int, default=None)
    experiment.add_argument("--n-points", type=int, default=None)
    experiment.add_argument("--learning-rate", type=float, default=None)
    experiment.add_argument("--epochs", type=int, default=None)
    experiment.add_argument("--bins", type=int, default=None)
    experiment.add_argument("--sweep-learning-rates", type=_float_list, default=None, help="Adam sweep, e.g. 0.01,0.05")

    metrics_cmd = commands.add_parser("metrics", help="SMSE and MSLL on a train/validation split")
    metrics_cmd.add_argument("series", type=Path)
    metrics_cmd.add_argument("--params", type=Path, required=True)
    metrics_cmd.add_argument("--train-fraction", type=float, default=0.7)
    metrics_cmd.add_argument("--split", choices=[s.value for s in SplitStrategy], default="prefix")
    metrics_cmd.add_argument("--maturity", type=float, default=None)
    metrics_cmd.add_argument("--noise-var", type=float, default=0.0)

    serve = commands.add_parser("serve", help="Run the MCP server")
    add_transport_arguments(serve, include_debug=False)
    return parser


# =============================================================================
# OUTPUT
# =============================================================================


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info(f"Wrote {out}")


def _require_out(args: argparse.Namespace, default: str) -> Path:
    out = args.out if args.out is not None else Path(default)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_simulate(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    simulation = merged(
        sections.get("simulation", {}),
        {"model_kind": args.model, "n_points": args.n_points, "maturity": args.maturity, "noise_var": args.noise_var},
    )
    params = load_params(args.params) if args.params else None
    kind = model_kind_of(params) if params else _model_kind(simulation.get("model_kind", ModelKind.SINGLE))
    if params is None:
        params = true_params_from(simulation, kind)
    overrides: Dict[str, Any] = {
        key: simulation[key] for key in ("n_points", "maturity", "noise_var") if key in simulation
    }
    if args.curves:
        overrides["curves"] = tuple(args.curves)
    elif "curves" in simulation:
        overrides["curves"] = tuple(part.strip() for part in simulation["curves"].split(",") if part.strip())
    config = build_experiment_config(
        {}, simulation_overrides={"model_kind": kind}, experiment_overrides=overrides, true_params=params
    )

    seed = args.seed if args.seed is not None else 0
    grid = TimeGrid.uniform(config.n_points, config.maturity)
    series = simulate_log_bonds(params, config.curves, grid, make_rng(seed), seed=seed, noise_var=config.noise_var)
    if args.format == "json":
        write_series_json(series, _require_out(args, "series.json"), params)
    else:
        write_series_csv(series, _require_out(args, "series.csv"), params, seed)
    logger.info(f"Simulated {grid.size} points on {[c.value for c in config.curves]} with seed {seed}")
    return EXIT_OK


def _read_obs(args: argparse.Namespace) -> ObservationSet:
    return read_series(args.series, maturity=args.maturity, noise_var=args.noise_var)


def cmd_calibrate(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    obs = _read_obs(args)
    start = load_params(args.init) if args.init else None
    kind_raw = args.model or sections.get("simulation", {}).get("model_kind")
    if kind_raw is None:
        kind = model_kind_of(start) if start else (ModelKind.MULTI if CurveId.DELTA in obs.values else ModelKind.SINGLE)
    else:
        kind = _model_kind(kind_raw)
    config = build_optimizer_config(
        sections,
        {
            "method": args.method,
            "learning_rate": args.learning_rate,
            "epochs": args.epochs,
            "max_iters": args.max_iters,
            "seed": args.seed,
        },
    )
    rho = args.rho if args.rho is not None else getattr(start, "rho", 0.0)
    result = calibrate(obs, kind, config, x0=start, rho=rho, policy=build_jitter_policy(sections))
    logger.info(f"Calibrated: nll={result.final_nll:.6f} converged={result.converged} ({result.message})")
    if args.trace and result.trace:
        write_trace_csv(result.trace, args.trace)
    if args.format == "json":
        _emit(result.model_dump_json(indent=2, exclude={"trace"}), args.out)
    else:
        record = RunRecord(run_id=0, seed=config.seed, result=result)
        write_params_csv([record], list(result.params.names), _require_out(args, "params.csv"))
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    obs = _read_obs(args)
    params = load_params(args.params)
    predict = sections.get("predict", {})
    try:
        prefix = args.prefix if args.prefix is not None else int(predict.get("prefix", obs.grid.size))
        extra = args.extra_index
        if extra is None and predict.get("extra_indices"):
            extra = [int(part) for part in predict["extra_indices"].split(",") if part.strip()]
        level = args.level if args.level is not None else float(predict.get("level", 0.95))
    except ValueError as e:
        raise ConfigurationError(f"invalid [predict] value: {e}") from None
    n = obs.grid.size
    if not 0 <= prefix <= n:
        raise ConfigurationError(f"--prefix must lie in [0, {n}], got {prefix}")
    if any(not 0 <= index < n for index in extra or ()):
        raise ConfigurationError(f"--extra-index values must lie in [0, {n - 1}], got {extra}")
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"--level must lie in (0, 1), got {level}")
    rows = predict_band(
        params,
        obs,
        prefix,
        target_times=args.targets,
        extra_indices=extra or (),
        level=level,
        curves=args.curves,
        policy=build_jitter_policy(sections),
    )
    if args.format == "json":
        _emit("[\n" + ",\n".join(row.model_dump_json() for row in rows) + "\n]", args.out)
    else:
        write_band_csv(rows, _require_out(args, "band.csv"))
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    experiment = sections.get("experiment", {})
    threads = args.threads or (int(experiment["threads"]) if "threads" in experiment else None) or env_threads()
    output_dir = args.out or Path(experiment.get("output_dir", "experiment_out"))
    config = build_experiment_config(
        sections,
        simulation_overrides={"model_kind": args.model, "n_points": args.n_points},
        experiment_overrides={
            "n_runs": args.runs,
            "master_seed": args.seed,
            "bins": args.bins,
            "output_dir": output_dir,
            "threads": threads,
        },
        optimizer_overrides={
            "method": args.method,
            "learning_rate": args.learning_rate,
            "epochs": args.epochs,
            "record_trace": False,
        },
    )
    if args.sweep_learning_rates:
        summaries = run_learning_rate_sweep(config, args.sweep_learning_rates, threads)
        payload = {f"{rate:g}": summary.model_dump(mode="json") for rate, summary in summaries.items()}
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK
    summary = run_experiment(config, threads)
    sys.stdout.write(summary.model_dump_json(indent=2) + "\n")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    obs = _read_obs(args)
    params = load_params(args.params)
    spec = SplitSpec(train_fraction=args.train_fraction, strategy=args.split, seed=args.seed or 0)
    report = evaluate(params, obs, spec, build_jitter_policy(sections))
    if args.format == "json":
        _emit(report.model_dump_json(indent=2), args.out)
    else:
        lines = ["metric,value", f"smse,{report.smse:.17g}", f"msll,{report.msll:.17g}"]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, sections: Dict[str, Dict[str, str]]) -> int:
    from .server import app

    run_server(app, args, server_name="vasicek-gpr-mcp")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "metrics": cmd_metrics,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    load_environment()
    parser = create_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.debug else env_log_level(), format=LOG_FORMAT)
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        sections = load_config(args.config)
        return COMMANDS[args.command](args, sections)
    except (ConfigurationError, SeriesParseError, ValidationError) as e:
        logger.error(f"{args.command}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (VasicekGPRError, ValueError, OSError, ArithmeticError) as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
