"""CSV emission and loading for index reports, Welch tests and runs.

Every writer emits a header row, '.' as decimal separator, floats with 12
significant digits and a deterministic row order (group, replication, time).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CTMCError
from .gsa import IndexEstimate
from .simulate import format_float
from .study import FunctionalIndexReport, WelchResult

SCALAR_HEADER = ("group", "replication", "first_order", "total", "variance", "numerator_total")
DYNAMICAL_HEADER = ("group", "time", "first_order", "total", "variance", "defined")
WELCH_HEADER = ("group", "t", "df", "p", "reject")


class OutputError(CTMCError):
    pass


def _write(path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None
    return path


def _read(path) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from None


def _f(x) -> str:
    return format_float(float(x))


def index_rows(estimates: Sequence[IndexEstimate]):
    for e in estimates:
        yield (e.group, str(e.replication), _f(e.first_order), _f(e.total), _f(e.variance), _f(e.numerator_total))


def write_index_csv(estimates: Sequence[IndexEstimate], path) -> Path:
    """Scalar or aggregated estimates, already in group-then-replication order."""
    return _write(path, SCALAR_HEADER, index_rows(estimates))


def read_index_csv(path) -> list[IndexEstimate]:
    rows = _read(path)
    if rows and tuple(rows[0].keys()) != SCALAR_HEADER:
        raise OutputError(f"{path}: not an index CSV")
    out = []
    for r in rows:
        v = float(r["variance"])
        first = float(r["first_order"])
        out.append(
            IndexEstimate(
                r["group"], first, float(r["total"]), v, first * v, float(r["numerator_total"]), int(r["replication"])
            )
        )
    return out


def samples_by_group(estimates: Sequence[IndexEstimate], attr: str) -> dict[str, np.ndarray]:
    """Replication samples per group, groups in first-seen order."""
    out: dict[str, list[float]] = {}
    for e in estimates:
        out.setdefault(e.group, []).append(getattr(e, attr))
    return {g: np.array(v) for g, v in out.items()}


def dynamical_rows(report: FunctionalIndexReport):
    first = report.mean_curves("first_order")
    total = report.mean_curves("total")
    variance = np.mean([d.variance for d in report.dynamical], axis=0)
    defined = report.defined
    for k, g in enumerate(report.groups):
        for i, t in enumerate(report.grid):
            ok = bool(defined[i])
            yield (
                g,
                _f(t),
                _f(first[k, i]) if ok else "",
                _f(total[k, i]) if ok else "",
                _f(variance[i]),
                "1" if ok else "0",
            )


def write_dynamical_csv(report: FunctionalIndexReport, path) -> Path:
    """Replication-mean dynamical indices; undefined times have empty index cells."""
    return _write(path, DYNAMICAL_HEADER, dynamical_rows(report))


def read_dynamical_csv(path):
    """Returns ``(grid, {group: (first_order, total)}, defined)``; undefined cells are nan."""
    rows = _read(path)
    if rows and tuple(rows[0].keys()) != DYNAMICAL_HEADER:
        raise OutputError(f"{path}: not a dynamical index CSV")
    curves: dict[str, tuple[list[float], list[float]]] = {}
    grid: list[float] = []
    defined: list[bool] = []
    for r in rows:
        first, total = curves.setdefault(r["group"], ([], []))
        first.append(float(r["first_order"]) if r["first_order"] else np.nan)
        total.append(float(r["total"]) if r["total"] else np.nan)
        if len(curves) == 1:
            grid.append(float(r["time"]))
            defined.append(r["defined"] == "1")
    return (
        np.array(grid),
        {g: (np.array(f), np.array(t)) for g, (f, t) in curves.items()},
        np.array(defined, dtype=bool),
    )


def write_welch_csv(results: Sequence[WelchResult], path) -> Path:
    rows = ((w.group, _f(w.t), _f(w.df), _f(w.p), "1" if w.reject else "0") for w in results)
    return _write(path, WELCH_HEADER, rows)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Generic table writer; floats formatted like every other CSV here."""
    return _write(path, header, ([c if isinstance(c, str) else _cell(c) for c in row] for row in rows))


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return _f(x)


def read_table(path) -> tuple[list[str], list[dict[str, str]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            return list(reader.fieldnames or []), rows
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from None
