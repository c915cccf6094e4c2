"""Non-parametric estimates of the arrival rate and the mean shortage function.

The rate is a histogram with bin width ``T * M**(-1/3)`` averaged over the
``M`` realizations.  The mean shortage function is the tail integral of the
empirical survival function, cached at the sorted samples so that each
evaluation is one binary search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .arrival import PiecewiseConstant, Realization, bin_count


@dataclass(frozen=True)
class IntensityEstimate:
    delta: float
    rates: np.ndarray = field(repr=False)
    T: float
    M: int

    def as_intensity(self) -> PiecewiseConstant:
        return PiecewiseConstant(self.delta, self.rates, self.T)

    def __call__(self, t):
        return self.as_intensity().rate(t)

    def edges(self) -> np.ndarray:
        return self.as_intensity().edges()


def estimate_intensity(realizations: list[Realization], T: float) -> IntensityEstimate:
    M = len(realizations)
    if M == 0:
        raise ValueError("need at least one realization")
    if not T > 0:
        raise ValueError("horizon must be positive")
    delta = T * M ** (-1.0 / 3.0)
    nb = bin_count(T, delta)
    counts = np.zeros(nb)
    for r in realizations:
        if r.t.size and (r.t[0] < 0 or r.t[-1] > T):
            raise ValueError(f"event times outside [0, {T}]")
        idx = np.minimum((r.t / delta).astype(np.int64), nb - 1)
        counts += np.bincount(idx, minlength=nb)
    widths = np.full(nb, delta)
    # last bin is truncated at T; normalizing by its true width keeps the
    # integral equal to the mean event count
    widths[-1] = T - (nb - 1) * delta
    rates = counts / (M * widths)
    rates.setflags(write=False)
    return IntensityEstimate(delta, rates, T, M)


@dataclass(frozen=True)
class MeanShortageCache:
    """Sorted samples ``xs`` with suffix integrals ``phis`` (``phis[-1] == 0``)."""

    xs: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)
    sample_mean: float

    @property
    def N(self) -> int:
        return self.xs.size

    def __call__(self, y):
        """phi~(y) = integral over [y, inf) of (1 - F_N)."""
        if np.ndim(y) == 0:
            y = float(y)
            if y < 0:
                raise ValueError("y must be nonnegative")
            return kernels.shortage_eval1(self.xs, self.phis, self.sample_mean, y)
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise ValueError("y must be nonnegative")
        return kernels.shortage_eval(self.xs, self.phis, self.sample_mean, y)

    def ecdf(self, x):
        return np.searchsorted(self.xs, x, side="right") / self.N

    def sf(self, x):
        return 1.0 - self.ecdf(x)

    def tail_mean(self, y):
        """Mean of x_i 1{x_i > y}: phi~(y) + y (1 - F_N(y))."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        finite = np.isfinite(y)
        yf = y[finite]
        out[finite] = self(yf) + yf * self.sf(yf)
        return out

    def mean(self) -> float:
        return self.sample_mean


def build_mean_shortage_cache(samples) -> MeanShortageCache:
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    if xs.size == 0:
        raise ValueError("need at least one sample")
    if xs[0] < 0 or not np.isfinite(xs[-1]):
        raise ValueError("samples must be finite and nonnegative")
    phis = kernels.shortage_table(xs)
    xs.setflags(write=False)
    phis.setflags(write=False)
    return MeanShortageCache(xs, phis, math.fsum(xs) / xs.size)


def pooled_values(realizations: list[Realization], adjusted: bool = False) -> np.ndarray:
    """All event values (or score-adjusted values) across realizations."""
    parts = [r.adjusted_values() if adjusted else r.x for r in realizations]
    return np.concatenate(parts) if parts else np.empty(0)


def eval_mean_shortage(cache: MeanShortageCache, y):
    return cache(y)


def ecdf(cache: MeanShortageCache, x):
    return cache.ecdf(x)
