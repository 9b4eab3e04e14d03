"""Execute scenarios and sweeps and write ``results.csv`` / ``summary.json``."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConvergenceError, TruncationError
from .config import ScenarioConfig
from .scenarios import RUNNERS, SCHEMAS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_TRUNCATION = 4


@dataclass
class RunOutput:
    rows: list[dict]
    summary: dict
    exit_code: int = EXIT_OK


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _format(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    if isinstance(value, (list, tuple)):
        return ";".join(_format(v) for v in value)
    return str(value)


def to_csv(rows: list[dict]) -> str:
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _with_lab_times(metrics, g_ref_mhz):
    """Add ``T_ns`` when a laboratory coupling scale (``g / 2 pi`` in MHz) is known."""
    if g_ref_mhz and "T" in metrics:
        metrics["T_ns"] = metrics["T"] * 1e3 / (2 * math.pi * g_ref_mhz)
    return metrics


def _point(scenario, params, seed, g_ref_mhz=None):
    """Run one parameter point; returns ``(status, result or message, residual)``."""
    try:
        result = RUNNERS[scenario](params, seed)
        _with_lab_times(result.metrics, g_ref_mhz)
        return "ok", result, None
    except ConvergenceError as exc:
        return "convergence_failure", str(exc), exc.residual
    except TruncationError as exc:
        return "truncation_failure", str(exc), exc.tail
    except ValueError as exc:
        return "invalid_parameters", str(exc), None


def _grid(config: ScenarioConfig):
    keys = list(config.sweeps)
    schema = SCHEMAS[config.scenario]
    for values in itertools.product(*(config.sweeps[k] for k in keys)):
        params = dict(config.parameters)
        for key, value in zip(keys, values):
            convert = schema[key][0]
            params[key] = convert(value)
        yield dict(zip(keys, values)), params


def _sweep_task(args):
    return _point(*args)


def run_config(config: ScenarioConfig) -> RunOutput:
    """Run a scenario (or its sweep) without touching the filesystem."""
    summary = {"scenario": config.scenario, "config": _jsonable(config.to_dict())}
    if not config.sweeps:
        status, result, residual = _point(config.scenario, config.parameters, config.seed, config.units.get("g_ref_mhz"))
        if status != "ok":
            summary.update(status=status, message=result, residual=_jsonable(residual))
            code = {"convergence_failure": EXIT_CONVERGENCE, "truncation_failure": EXIT_TRUNCATION}.get(status, EXIT_CONFIG)
            return RunOutput([], summary, code)
        rows = result.rows or [dict(result.metrics)]
        summary.update(status="ok", metrics=_jsonable(result.metrics), numerics=_jsonable(result.numerics))
        return RunOutput(rows, summary)

    points = list(_grid(config))
    g_ref = config.units.get("g_ref_mhz")
    tasks = [(config.scenario, params, config.seed, g_ref) for _, params in points]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_sweep_task, tasks))
    else:
        outcomes = [_sweep_task(t) for t in tasks]
    rows, per_point = [], []
    for (swept, _), (status, result, residual) in zip(points, outcomes):
        row = dict(swept)
        row["status"] = status
        if status == "ok":
            row.update(result.metrics)
            per_point.append({"point": swept, "numerics": result.numerics})
        else:
            row["message"] = result
            per_point.append({"point": swept, "residual": residual, "message": result})
        rows.append(row)
    failed = sum(r["status"] != "ok" for r in rows)
    summary.update(
        status="ok" if not failed else "partial",
        points=len(rows),
        failed=failed,
        numerics=_jsonable(per_point),
    )
    return RunOutput(rows, summary)


def run_scenario(config: ScenarioConfig, out_dir=None) -> RunOutput:
    """Run and write ``results.csv`` and ``summary.json`` into ``out_dir``."""
    output = run_config(config)
    out = Path(out_dir or config.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(to_csv(output.rows), newline="")
    (out / "summary.json").write_text(json.dumps(_jsonable(output.summary), indent=2, sort_keys=True) + "\n")
    return output
