"""
Writers for the CSV/JSON files produced by the commands and the one-line
summary printed at the end of each run.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from src.core.models import RunReport


def write_csv(file_path: Path, header: Sequence[str], table: np.ndarray, precision: int = 17) -> Path:
    """Numeric table with a comma-separated header; NaN cells are written as 'nan'."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    table = np.atleast_2d(np.asarray(table, dtype=float))
    if table.size == 0:
        table = table.reshape(0, len(header))
    np.savetxt(file_path, table, delimiter=",", header=",".join(header), comments="", fmt=f"%.{precision}g")
    return file_path


def write_rows(file_path: Path, header: Sequence[str], rows: List[Dict[str, Any]]) -> Path:
    """Mixed-type table (benchmark rows)."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(row.get(column)) for column in header))
    file_path.write_text("\n".join(lines) + "\n")
    return file_path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(file_path: Path, data: Any) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, RunReport):
        data = data.model_dump(mode="json")
    with open(file_path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    return file_path


def format_interval(interval: Sequence[float]) -> str:
    lo, hi = interval
    return f"[{lo:.6g}, {hi:.6g}]"


def format_summary(report: RunReport) -> str:
    """Formats the single result line printed for a run."""
    parts = [report.scenario_id, report.command, f"status={report.status}"]
    metrics = report.metrics
    if "duration_s" in metrics and metrics["duration_s"] is not None:
        parts.append(f"duration={metrics['duration_s']:.6g} s")
    if metrics.get("interval") is not None:
        parts.append(f"interval={format_interval(metrics['interval'])}")
    if metrics.get("oracle_interval") is not None:
        parts.append(f"oracle={format_interval(metrics['oracle_interval'])}")
    if "case_tag" in metrics and report.status != "success":
        parts.append(f"case={metrics['case_tag']}")
    for key in ("iterations", "vertices", "rows"):
        if key in metrics:
            parts.append(f"{key}={metrics[key]}")
    if report.reason:
        parts.append(f"reason={report.reason}")
    parts.append(f"{report.wall_time_s:.3f} s")
    return " | ".join(parts)
