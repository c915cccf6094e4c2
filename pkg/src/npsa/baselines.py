"""Comparison policies for score-annotated transaction streams.

``greedy`` is the only online rule; ``uniform``, ``hindsight`` and
``full_knowledge`` look at the whole stream.  All return a ``ReplayResult``
whose values are the raw event values.
"""
from __future__ import annotations

import numpy as np

from .arrival import Realization
from .core import ReplayResult

POSITIVE_THRESHOLD = 0.5


def _check(stream: Realization, n: int):
    if n < 1:
        raise ValueError("n must be at least 1")
    if not stream.scored:
        raise ValueError("stream needs score and label columns")


def _result(stream: Realization, idx) -> ReplayResult:
    idx = np.sort(np.asarray(idx, dtype=np.int64))
    # worker index counts down, as in threshold replay
    workers = np.arange(idx.size, 0, -1, dtype=np.int64)
    return ReplayResult(idx, workers, stream.t[idx], stream.x[idx])


def _top_by_value(stream: Realization, candidates: np.ndarray, n: int) -> np.ndarray:
    # stable sort on -value: equal values keep time order, so earlier wins
    order = np.argsort(-stream.x[candidates], kind="stable")
    return candidates[order[:n]]


def positives(stream: Realization, positive_threshold: float = POSITIVE_THRESHOLD) -> np.ndarray:
    return np.flatnonzero(stream.score >= positive_threshold)


def greedy(stream: Realization, n: int, positive_threshold: float = POSITIVE_THRESHOLD) -> ReplayResult:
    _check(stream, n)
    return _result(stream, positives(stream, positive_threshold)[:n])


def uniform(stream: Realization, n: int, positive_threshold: float = POSITIVE_THRESHOLD,
            rng: np.random.Generator | None = None) -> ReplayResult:
    _check(stream, n)
    pos = positives(stream, positive_threshold)
    if pos.size <= n:
        return _result(stream, pos)
    rng = rng if rng is not None else np.random.default_rng()
    return _result(stream, rng.choice(pos, size=n, replace=False))


def hindsight(stream: Realization, n: int, positive_threshold: float = POSITIVE_THRESHOLD) -> ReplayResult:
    _check(stream, n)
    return _result(stream, _top_by_value(stream, positives(stream, positive_threshold), n))


def full_knowledge(stream: Realization, n: int) -> ReplayResult:
    _check(stream, n)
    return _result(stream, _top_by_value(stream, np.flatnonzero(stream.label == 1), n))


def realized_value(result: ReplayResult, stream: Realization) -> float:
    """Total raw value of accepted events that are truly positive."""
    i = result.indices
    return float(np.sum(stream.x[i] * stream.label[i]))


def captured(result: ReplayResult, stream: Realization) -> int:
    return int(np.sum(stream.label[result.indices]))


def fractions(result: ReplayResult, stream: Realization) -> tuple[float, float]:
    """(fraction of positive value captured, fraction of positives captured); NaN if none."""
    pos = stream.label == 1
    total_v = float(np.sum(stream.x[pos]))
    total_c = int(pos.sum())
    fv = realized_value(result, stream) / total_v if total_v > 0 else float("nan")
    fc = captured(result, stream) / total_c if total_c > 0 else float("nan")
    return fv, fc
