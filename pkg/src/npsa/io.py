"""CSV formats.

Realizations: ``realization_id,t,value[,score,label]``, one row per event,
``t`` strictly increasing within each ``realization_id``.  The horizon is
not stored and must be supplied by the caller.

Intensity estimates: ``bin_start,bin_end,rate``.  Mean-shortage caches:
``x,phi``.  Curves: ``t,y_1,...,y_n`` (see ``core.GridCurves``).
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict

import numpy as np

from .arrival import PiecewiseConstant, Realization
from .estimators import IntensityEstimate, MeanShortageCache, build_mean_shortage_cache

BASE_COLUMNS = ["realization_id", "t", "value"]
SCORED_COLUMNS = BASE_COLUMNS + ["score", "label"]


class SchemaError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_realizations(path, realizations: list[Realization]) -> None:
    scored = bool(realizations) and all(r.scored for r in realizations)
    cols = SCORED_COLUMNS if scored else BASE_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for rid, r in enumerate(realizations):
            for i in range(len(r)):
                row = [rid, r.t[i], r.x[i]]
                if scored:
                    row += [r.score[i], int(r.label[i])]
                w.writerow([_fmt(v) for v in row])


def read_realizations(path, T: float, require_scores: bool = False) -> list[Realization]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header not in (BASE_COLUMNS, SCORED_COLUMNS):
            raise SchemaError(f"{path}: unexpected header {header}; want {SCORED_COLUMNS}")
        scored = header == SCORED_COLUMNS
        if require_scores and not scored:
            raise SchemaError(f"{path}: score and label columns are required")
        groups: OrderedDict[str, list] = OrderedDict()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rec = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            rows = groups.setdefault(row[0].strip(), [])
            if rows and rec[0] <= rows[-1][0]:
                raise SchemaError(f"{path}:{lineno}: times not strictly increasing in realization {row[0]}")
            if not 0 <= rec[0] <= T:
                raise SchemaError(f"{path}:{lineno}: time {rec[0]} outside [0, {T}]")
            rows.append(rec)
    if not groups:
        raise SchemaError(f"{path}: no events")
    out = []
    for rid, rows in groups.items():
        a = np.array(rows)
        try:
            if scored:
                out.append(Realization(a[:, 0], a[:, 1], T, score=a[:, 2], label=a[:, 3]))
            else:
                out.append(Realization(a[:, 0], a[:, 1], T))
        except ValueError as exc:
            raise SchemaError(f"{path}: realization {rid}: {exc}") from None
    return out


def write_intensity(path, est: IntensityEstimate) -> None:
    edges = est.edges()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_start", "bin_end", "rate"])
        for a, b, r in zip(edges[:-1], edges[1:], est.rates):
            w.writerow([_fmt(a), _fmt(b), _fmt(r)])


def read_intensity(path) -> PiecewiseConstant:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["bin_start", "bin_end", "rate"] or len(rows) < 2:
        raise SchemaError(f"{path}: not an intensity file")
    a = np.array([[float(v) for v in r] for r in rows[1:]])
    width = a[0, 1] - a[0, 0]
    return PiecewiseConstant(width, a[:, 2], a[-1, 1])


def write_cache(path, cache: MeanShortageCache) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "phi"])
        for x, p in zip(cache.xs, cache.phis):
            w.writerow([_fmt(x), _fmt(p)])


def read_cache(path) -> MeanShortageCache:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "phi"] or len(rows) < 2:
        raise SchemaError(f"{path}: not a mean-shortage file")
    xs = np.array([float(r[0]) for r in rows[1:]])
    return build_mean_shortage_cache(xs)


def write_rows(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["nan" if isinstance(row[c], float) and math.isnan(row[c]) else _fmt(row[c])
                        for c in columns])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
