"""
File formats of the toolkit

Series CSV (t, logP_zero[, logP_delta]) with a JSON sidecar carrying the
parameters and seed, series JSON, prediction bands, per-run parameter tables,
histogram bins and optimizer traces.  Floats are written with 17 significant
digits so every file parses back to the exact values.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from .errors import SeriesParseError
from .models import (
    CURVE_ORDER,
    BandRow,
    BatchSummary,
    CurveId,
    CurveParams,
    MultiCurveParams,
    ObservationSet,
    RunRecord,
    SimulatedSeries,
    SingleCurveParams,
    TimeGrid,
    model_kind_of,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SERIES_COLUMNS: Dict[CurveId, str] = {CurveId.ZERO: "logP_zero", CurveId.DELTA: "logP_delta"}
BAND_COLUMNS = ("t", "curve", "mean", "lower", "upper")
HIST_COLUMNS = ("bin_left", "bin_right", "count")
TRACE_COLUMNS = ("iter", "nll", "grad_norm")


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def _parse_float(text: str, path: Path, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SeriesParseError(f"column {column}: not a number: {text!r}", path, line) from None
    if not np.isfinite(value):
        raise SeriesParseError(f"column {column}: non-finite value {text!r}", path, line)
    return value


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


# =============================================================================
# PARAMETERS
# =============================================================================


def params_to_dict(params: CurveParams) -> Dict[str, Any]:
    data: Dict[str, Any] = {"model_kind": model_kind_of(params).value}
    data.update(params.as_dict())
    if isinstance(params, MultiCurveParams):
        data["rho"] = params.rho
    return data


def params_from_dict(data: Dict[str, Any]) -> CurveParams:
    """Parameters from a flat name -> value mapping or a nested factor1/factor2 document."""
    if "params" in data and isinstance(data["params"], dict):
        data = data["params"]
    if "factor1" in data:
        return MultiCurveParams.model_validate(data)
    if "r0_1" in data:
        values = [data[name] for name in MultiCurveParams.names]
        return MultiCurveParams.from_vector(values, rho=float(data.get("rho", 0.0)))
    return SingleCurveParams(**{name: data[name] for name in SingleCurveParams.names})


def load_params(path: PathLike) -> CurveParams:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SeriesParseError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    if not isinstance(data, dict):
        raise SeriesParseError("parameter file must hold a JSON object", path)
    try:
        return params_from_dict(data)
    except KeyError as e:
        raise SeriesParseError(f"missing parameter {e.args[0]}", path) from None


# =============================================================================
# SERIES
# =============================================================================


def write_series_csv(
    series: Union[SimulatedSeries, ObservationSet],
    path: PathLike,
    params: Optional[CurveParams] = None,
    seed: Optional[int] = None,
) -> Path:
    """Write the series CSV and its ``<stem>.meta.json`` sidecar."""
    path = Path(path)
    values = series.curves if isinstance(series, SimulatedSeries) else series.values
    curves = [curve for curve in CURVE_ORDER if curve in values]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t"] + [SERIES_COLUMNS[curve] for curve in curves])
        for i, t in enumerate(series.grid.points):
            writer.writerow([format_float(t)] + [format_float(values[curve][i]) for curve in curves])

    if seed is None and isinstance(series, SimulatedSeries):
        seed = series.seed
    meta: Dict[str, Any] = {"maturity": series.grid.maturity, "seed": seed}
    if isinstance(series, ObservationSet):
        meta["noise_var"] = series.noise_var
    if params is not None:
        meta["params"] = params_to_dict(params)
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


def series_to_dict(
    series: Union[SimulatedSeries, ObservationSet], params: Optional[CurveParams] = None
) -> Dict[str, Any]:
    values = series.curves if isinstance(series, SimulatedSeries) else series.values
    data: Dict[str, Any] = {
        "maturity": series.grid.maturity,
        "t": series.grid.points.tolist(),
        "curves": {curve.value: values[curve].tolist() for curve in CURVE_ORDER if curve in values},
    }
    if isinstance(series, SimulatedSeries):
        data["seed"] = series.seed
    if params is not None:
        data["params"] = params_to_dict(params)
    return data


def write_series_json(
    series: Union[SimulatedSeries, ObservationSet], path: PathLike, params: Optional[CurveParams] = None
) -> Path:
    path = Path(path)
    path.write_text(json.dumps(series_to_dict(series, params), indent=2) + "\n", encoding="utf-8")
    return path


def read_sidecar(path: PathLike) -> Optional[Dict[str, Any]]:
    meta = sidecar_path(path)
    if not meta.exists():
        return None
    try:
        return json.loads(meta.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SeriesParseError(f"invalid JSON: {e.msg}", meta, e.lineno) from None


def _header_curves(header: Sequence[str], path: Path) -> List[CurveId]:
    if not header or header[0].strip() != "t":
        raise SeriesParseError("first column must be 't'", path, 1)
    by_column = {column: curve for curve, column in SERIES_COLUMNS.items()}
    curves = []
    for column in header[1:]:
        column = column.strip()
        if column not in by_column:
            raise SeriesParseError(f"unknown column {column!r}", path, 1)
        curves.append(by_column[column])
    if not curves or len(set(curves)) != len(curves):
        raise SeriesParseError("need one column per curve, each at most once", path, 1)
    return curves


def read_series_csv(path: PathLike, maturity: Optional[float] = None, noise_var: float = 0.0) -> ObservationSet:
    """Parse a series CSV into an observation set.

    Maturity comes from the argument, else from the sidecar, else the last
    observation time.
    """
    path = Path(path)
    times: List[float] = []
    columns: List[List[float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise SeriesParseError("empty file", path, 1)
        curves = _header_curves(header, path)
        columns = [[] for _ in curves]
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(curves) + 1:
                raise SeriesParseError(f"expected {len(curves) + 1} fields, got {len(row)}", path, line)
            t = _parse_float(row[0], path, line, "t")
            if times and t <= times[-1]:
                raise SeriesParseError(f"times must be strictly increasing ({t} after {times[-1]})", path, line)
            if t < 0.0:
                raise SeriesParseError(f"negative time {t}", path, line)
            times.append(t)
            for k, curve in enumerate(curves):
                columns[k].append(_parse_float(row[k + 1], path, line, SERIES_COLUMNS[curve]))
    if not times:
        raise SeriesParseError("no data rows", path, 2)

    if maturity is None:
        meta = read_sidecar(path)
        maturity = float(meta["maturity"]) if meta and meta.get("maturity") is not None else times[-1]
    try:
        grid = TimeGrid(points=times, maturity=maturity)
        return ObservationSet(grid=grid, values=dict(zip(curves, columns)), noise_var=noise_var)
    except ValidationError as e:
        raise SeriesParseError(f"invalid series: {e.errors()[0]['msg']}", path) from None


def read_series_json(path: PathLike, maturity: Optional[float] = None, noise_var: float = 0.0) -> ObservationSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SeriesParseError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    try:
        grid = TimeGrid(points=data["t"], maturity=maturity if maturity is not None else data["maturity"])
        return ObservationSet(grid=grid, values=data["curves"], noise_var=noise_var)
    except KeyError as e:
        raise SeriesParseError(f"missing key {e.args[0]!r}", path) from None
    except (ValidationError, ValueError) as e:
        raise SeriesParseError(f"invalid series: {e}", path) from None


def read_series(path: PathLike, maturity: Optional[float] = None, noise_var: float = 0.0) -> ObservationSet:
    if Path(path).suffix.lower() == ".json":
        return read_series_json(path, maturity, noise_var)
    return read_series_csv(path, maturity, noise_var)


# =============================================================================
# BANDS, RUN TABLES, HISTOGRAMS, TRACES
# =============================================================================


def write_band_csv(rows: Iterable[BandRow], path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(BAND_COLUMNS)
        for row in rows:
            writer.writerow(
                [format_float(row.t), row.curve.value]
                + [format_float(value) for value in (row.mean, row.lower, row.upper)]
            )
    return path


def read_band_csv(path: PathLike) -> List[BandRow]:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for record in reader:
            line = reader.line_num
            try:
                curve = CurveId(record["curve"])
            except ValueError:
                raise SeriesParseError(f"unknown curve {record['curve']!r}", path, line) from None
            values = {name: _parse_float(record[name], path, line, name) for name in ("t", "mean", "lower", "upper")}
            rows.append(BandRow(curve=curve, **values))
    return rows


def write_params_csv(records: Iterable[RunRecord], names: Sequence[str], path: PathLike) -> Path:
    """One row per run: run_id, converged, nll, the learned parameters and the error message.

    Failed runs keep their row with converged=false, empty nll and parameter
    fields, and the error text in the last column.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["run_id", "converged", "nll", *names, "error"])
        for record in records:
            result = record.result
            if result is None:
                writer.writerow([record.run_id, "false", ""] + [""] * len(names) + [record.error or ""])
                continue
            writer.writerow(
                [record.run_id, str(result.converged).lower(), format_float(result.final_nll)]
                + [format_float(v) for v in result.params.to_vector()]
                + [""]
            )
    return path


def read_params_csv(path: PathLike) -> List[Dict[str, Any]]:
    """Rows of a params file; empty numeric fields and an empty error read as None."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for record in reader:
            line = reader.line_num
            row: Dict[str, Any] = {
                "run_id": int(record["run_id"]),
                "converged": record["converged"] == "true",
                "error": record.get("error") or None,
            }
            for name, text in record.items():
                if name in ("run_id", "converged", "error"):
                    continue
                row[name] = _parse_float(text, path, line, name) if text else None
            rows.append(row)
    return rows


def write_histograms(summary: BatchSummary, out_dir: PathLike) -> List[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, stats in summary.parameters.items():
        path = out_dir / f"hist_{name}.csv"
        edges = stats.histogram.edges
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(HIST_COLUMNS)
            for left, right, count in zip(edges[:-1], edges[1:], stats.histogram.counts):
                writer.writerow([format_float(left), format_float(right), count])
        written.append(path)
    return written


def read_histogram_csv(path: PathLike) -> Tuple[List[float], List[int]]:
    """(edges, counts) of a histogram file."""
    path = Path(path)
    lefts, rights, counts = [], [], []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for record in reader:
            line = reader.line_num
            lefts.append(_parse_float(record["bin_left"], path, line, "bin_left"))
            rights.append(_parse_float(record["bin_right"], path, line, "bin_right"))
            counts.append(int(record["count"]))
    return (lefts + rights[-1:]), counts


def write_summary_json(summary: BatchSummary, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def write_trace_csv(trace: Sequence[Tuple[float, float]], path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for i, (nll, grad_norm) in enumerate(trace):
            writer.writerow([i, format_float(nll), format_float(grad_norm)])
    return path


__all__ = [
    "format_float",
    "sidecar_path",
    "params_to_dict",
    "params_from_dict",
    "load_params",
    "write_series_csv",
    "write_series_json",
    "series_to_dict",
    "read_sidecar",
    "read_series_csv",
    "read_series_json",
    "read_series",
    "write_band_csv",
    "read_band_csv",
    "write_params_csv",
    "read_params_csv",
    "write_histograms",
    "read_histogram_csv",
    "write_summary_json",
    "write_trace_csv",
]
