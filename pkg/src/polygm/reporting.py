"""Record files and the scaling-law fits computed from them.

Experiment runners write flat records.csv files; every fitted slope or law
in a report is recomputed here from the file contents, so the numbers in
report.json never depend on state held by the run loop.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "LineFit",
    "fit_line",
    "fit_loglog",
    "fit_log_linear",
    "write_records",
    "read_records",
    "write_report",
    "read_report",
    "check",
    "group_stat",
]


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    n_points: int

    def as_dict(self) -> dict:
        return asdict(self)


def fit_line(x, y) -> LineFit:
    """Least-squares line with slope standard error and R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    m = x.size
    if m < 2:
        raise ValueError("need at least two points to fit a line")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("line fit requires finite data")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("x values are all identical")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sse = float((resid**2).sum())
    sst = float(((y - ym) ** 2).sum())
    stderr = math.sqrt(sse / (m - 2) / sxx) if m > 2 else float("nan")
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return LineFit(slope=slope, intercept=float(intercept), stderr=stderr, r2=r2, n_points=m)


def fit_loglog(x, y) -> LineFit:
    """Power-law fit: regress log y on log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("log-log fit requires strictly positive data")
    return fit_line(np.log(x), np.log(y))


def fit_log_linear(x, y) -> LineFit:
    """Logarithmic-law fit: regress y on log x (y = a log x + b)."""
    x = np.asarray(x, dtype=float)
    if (x <= 0).any():
        raise ValueError("log-linear fit requires positive x")
    return fit_line(np.log(x), y)


def write_records(path, rows: list[dict], columns: list[str] | None = None) -> None:
    """Write flat records as CSV with a fixed column order."""
    path = Path(path)
    if not rows:
        raise ValueError("no records to write")
    if columns is None:
        columns = list(rows[0].keys())
    extra = [set(r) - set(columns) for r in rows]
    if any(extra):
        raise ValueError(f"record has fields outside schema: {sorted(set().union(*extra))}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(row.get(k, "")) for k in columns})


def _format_value(v):
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


def _parse_value(text: str):
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: _parse_value(v) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def write_report(path, report: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, LineFit):
        return obj.as_dict()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def check(name: str, passed: bool, observed, expected: str) -> dict:
    """One post-run check entry for a report."""
    return {"name": name, "passed": bool(passed), "observed": observed, "expected": expected}


def group_stat(rows: list[dict], keys: tuple[str, ...], field: str, stat: str = "median") -> dict:
    """Aggregate a numeric field per group of key values.

    Rows whose field is None (recorded failures) are dropped; a group with
    no finite values maps to nan.
    """
    fns = {"median": np.median, "mean": np.mean, "min": np.min, "max": np.max}
    fn = fns[stat]
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = tuple(row[k] for k in keys)
        groups.setdefault(key, [])
        v = row.get(field)
        if v is not None and np.isfinite(v):
            groups[key].append(float(v))
    return {
        key: (float(fn(vals)) if vals else float("nan"))
        for key, vals in sorted(groups.items())
    }
