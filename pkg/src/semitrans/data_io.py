"""Dataset ingestion and report emission (JSON and CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import IoError, MissingColumn, NonNumericCell, ParseError
from .estimators import EstimationResult
from .inference import BootstrapResult
from .simulation import CellStats, McReport

# plain decimal numbers only: no locale separators, no nan/inf, no underscores
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def load_csv(path) -> Dataset:
    """Read a header-first CSV with a ``y`` column; other columns are covariates."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty", row=1) from None
        header = [h.strip() for h in header]
        lower = [h.lower() for h in header]
        if lower.count("y") != 1:
            raise MissingColumn(f"{path}: expected exactly one column named 'y'", row=1)
        iy = lower.index("y")
        xcols = [j for j in range(len(header)) if j != iy]
        if not xcols:
            raise ParseError(f"{path}: no covariate columns", row=1)
        rows = []
        for r, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields, got {len(rec)}", row=r)
            vals = []
            for j, cell in enumerate(rec):
                cell = cell.strip()
                if not _NUMBER.match(cell):
                    raise NonNumericCell(f"{path}: non-numeric cell {cell!r}", row=r, column=header[j])
                vals.append(float(cell))
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows", row=2)
    arr = np.array(rows)
    return Dataset(arr[:, iy], arr[:, xcols], [header[j] for j in xcols])


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def report_dict(result) -> dict:
    if isinstance(result, (EstimationResult, BootstrapResult, McReport)):
        return _clean(result.to_dict())
    if isinstance(result, dict):
        return _clean(result)
    raise TypeError(f"cannot emit {type(result).__name__}")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def mc_table_rows(report: McReport) -> list[list[str]]:
    """Stacked layout: one block per (model, bandwidth, method, n) with
    mean / sd / mse / reps rows and one column per theta_o."""
    thetas = sorted({k[1] for k in report.cells})
    groups = sorted({(k[0], k[2], k[3], k[4]) for k in report.cells})
    rows = [["model", "bandwidth", "method", "n", "stat"] + [f"theta_o={t!r}" for t in thetas]]
    for model, bw, method, n in groups:
        for stat in ("mean", "sd", "mse", "reps"):
            line = [str(model), bw, method, str(n), stat]
            for t in thetas:
                c = report.cells.get((model, t, bw, method, n))
                if c is None:
                    line.append("")
                elif stat == "reps":
                    line.append(str(c.reps))
                else:
                    line.append(_num(getattr(c, stat)))
            rows.append(line)
    return rows


def read_mc_csv(path) -> McReport:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    thetas = [float(h.split("=", 1)[1]) for h in header[5:]]
    acc: dict = {}
    for r in rows[1:]:
        model, bw, method, n, stat = r[:5]
        for t, cell in zip(thetas, r[5:]):
            if cell == "":
                continue
            key = (int(model), t, bw, method, int(n))
            acc.setdefault(key, {})[stat] = cell
    cells = {}
    for key, d in acc.items():
        get = lambda s: float(d[s]) if d.get(s, "") != "" else None
        cells[key] = CellStats(get("mean"), get("sd"), get("mse"), int(d.get("reps", 0)))
    return McReport(cells)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def csv_rows(result) -> list[list[str]]:
    if isinstance(result, EstimationResult):
        return [["theta", "value"]] + [[repr(t), repr(v)] for t, v in result.curve]
    if isinstance(result, BootstrapResult):
        return [["replicate", "theta"]] + [[str(b), repr(float(v))] for b, v in enumerate(result.replicates)]
    if isinstance(result, McReport):
        return mc_table_rows(result)
    raise TypeError(f"no CSV layout for {type(result).__name__}")


def emit_report(result, fmt: str, path) -> None:
    """Write ``result`` as ``json`` or ``csv`` to ``path`` atomically."""
    if fmt == "json":
        text = json.dumps(report_dict(result), indent=2, allow_nan=False) + "\n"
    elif fmt == "csv":
        text = _csv_text(csv_rows(result))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    _atomic_write(path, text)


def load_json(path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)
