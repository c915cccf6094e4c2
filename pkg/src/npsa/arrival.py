"""Marked non-homogeneous Poisson job streams.

Intensities are constant, piecewise constant on equal-width bins, or a
positive multiple of another intensity.  ``simulate`` draws one realization
on ``[0, T]`` by thinning a homogeneous envelope at ``max_rate()``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .value_dist import ValueDistribution

# ceil(T / width) is taken with this slack so that T / (T * M**(-1/3)) landing
# a hair above an integer does not create a spurious sliver bin
BIN_EPS = 1e-9


def bin_count(T: float, width: float) -> int:
    return max(1, math.ceil(T / width - BIN_EPS))


def segment_bounds(T, bin_width, nb):
    """Bin edges in reversed time ``s = T - t``, increasing from 0 to T.

    Segment ``j`` carries ``rates[nb - 1 - j]``.
    """
    edges = np.minimum(np.arange(nb + 1) * bin_width, T)
    edges[-1] = T
    return T - edges[::-1]


class IntensityFunction:
    """Arrival rate on ``[0, T]``.  Subclasses expose a piecewise-constant view."""

    T: float

    def rate(self, t):
        width, rates = self.as_bins()
        idx = np.minimum((np.asarray(t, dtype=float) / width).astype(np.int64), rates.size - 1)
        return rates[idx]

    def as_bins(self) -> tuple[float, np.ndarray]:
        """(bin width, per-bin rates); the last bin may be truncated at ``T``."""
        raise NotImplementedError

    def integrate(self, a: float, b: float) -> float:
        """Expected number of arrivals in ``[a, b]``."""
        if b < a:
            raise ValueError(f"reversed interval [{a}, {b}]")
        if a < 0 or b > self.T * (1 + 1e-12):
            raise ValueError(f"interval [{a}, {b}] outside [0, {self.T}]")
        if a == b:
            return 0.0
        width, rates = self.as_bins()
        edges = np.minimum(np.arange(rates.size + 1) * width, self.T)
        edges[-1] = self.T
        lo = np.clip(edges[:-1], a, b)
        hi = np.clip(edges[1:], a, b)
        return float(np.sum(rates * (hi - lo)))

    def max_rate(self) -> float:
        return float(np.max(self.as_bins()[1]))

    def mean_rate(self) -> float:
        return self.integrate(0.0, self.T) / self.T

    def scaled(self, factor: float) -> "Scaled":
        return Scaled(self, factor)


@dataclass(frozen=True)
class Constant(IntensityFunction):
    lam: float
    T: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"rate must be positive, got {self.lam}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")

    def as_bins(self):
        return self.T, np.array([self.lam])

    def max_rate(self):
        return self.lam


@dataclass(frozen=True)
class PiecewiseConstant(IntensityFunction):
    bin_width: float
    rates: np.ndarray = field(repr=False)
    T: float = None

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float).ravel()
        if not self.bin_width > 0:
            raise ValueError("bin width must be positive")
        T = self.T if self.T is not None else self.bin_width * rates.size
        object.__setattr__(self, "T", float(T))
        if rates.size != bin_count(self.T, self.bin_width):
            raise ValueError(
                f"{rates.size} rates do not cover [0, {self.T}] with width {self.bin_width}"
            )
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ValueError("rates must be finite and nonnegative")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    def as_bins(self):
        return self.bin_width, self.rates

    def edges(self) -> np.ndarray:
        e = np.minimum(np.arange(self.rates.size + 1) * self.bin_width, self.T)
        e[-1] = self.T
        return e


@dataclass(frozen=True)
class Scaled(IntensityFunction):
    base: IntensityFunction
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    @property
    def T(self):
        return self.base.T

    def as_bins(self):
        width, rates = self.base.as_bins()
        return width, rates * self.factor


@dataclass(frozen=True)
class Realization:
    """One sample path: event times, values and optional score/label marks."""

    t: np.ndarray
    x: np.ndarray
    T: float
    score: np.ndarray | None = None
    label: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float).ravel()
        if t.shape != x.shape:
            raise ValueError("times and values differ in length")
        if t.size:
            if t[0] < 0 or t[-1] > self.T:
                raise ValueError(f"event times must lie in [0, {self.T}]")
            if np.any(np.diff(t) <= 0):
                raise ValueError("event times must be strictly increasing")
            if np.any(x < 0):
                raise ValueError("event values must be nonnegative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        if self.score is not None:
            s = np.asarray(self.score, dtype=float).ravel()
            if s.shape != t.shape or np.any((s < 0) | (s > 1)):
                raise ValueError("scores must be probabilities, one per event")
            object.__setattr__(self, "score", s)
        if self.label is not None:
            lab = np.asarray(self.label).ravel().astype(np.int8)
            if lab.shape != t.shape or np.any((lab != 0) & (lab != 1)):
                raise ValueError("labels must be 0/1, one per event")
            object.__setattr__(self, "label", lab)

    def __len__(self):
        return self.t.size

    @property
    def scored(self) -> bool:
        return self.score is not None and self.label is not None

    def adjusted_values(self) -> np.ndarray:
        """score * value, the expected utility of inspecting each event."""
        if self.score is None:
            raise ValueError("realization carries no scores")
        return self.score * self.x


def simulate(intensity: IntensityFunction, dist: ValueDistribution, rng: np.random.Generator,
             T: float | None = None) -> Realization:
    """Draw one realization on ``[0, T]`` (``T`` defaults to the intensity horizon)."""
    T = intensity.T if T is None else T
    if not T > 0:
        raise ValueError("horizon must be positive")
    if isinstance(intensity, Constant):
        t = _homogeneous_times(intensity.lam, T, rng)
    else:
        # Lewis-Shedler thinning against the exact envelope
        lam_max = intensity.max_rate()
        if lam_max == 0:
            return Realization(np.empty(0), np.empty(0), T)
        cand = _homogeneous_times(lam_max, T, rng)
        keep = rng.random(cand.size) * lam_max < intensity.rate(cand)
        t = cand[keep]
    x = np.asarray(dist.sample(rng, t.size), dtype=float)
    return Realization(t, x, T)


def _homogeneous_times(lam: float, T: float, rng) -> np.ndarray:
    # exponential gaps, drawn in chunks sized to the expected count
    out = []
    total = 0.0
    chunk = max(16, int(lam * T * 1.2) + 16)
    while True:
        gaps = rng.exponential(1.0 / lam, chunk)
        times = total + np.cumsum(gaps)
        if times[-1] > T:
            out.append(times[times <= T])
            break
        out.append(times)
        total = times[-1]
    t = np.concatenate(out)
    # ties are impossible in exact arithmetic; drop any produced by rounding
    if t.size > 1:
        t = t[np.concatenate(([True], np.diff(t) > 0))]
    return t


def realization_rngs(seed, count: int, *key) -> list[np.random.Generator]:
    """Independent generators, one per realization index, from a master seed."""
    ss = np.random.SeedSequence(seed if not key else [seed, *key])
    return [np.random.default_rng(s) for s in ss.spawn(count)]


def simulate_many(intensity: IntensityFunction, dist: ValueDistribution, count: int, seed,
                  *key) -> list[Realization]:
    return [simulate(intensity, dist, rng) for rng in realization_rngs(seed, count, *key)]


def simulate_scored(intensity: IntensityFunction, dist: ValueDistribution,
                    rng: np.random.Generator, fraud_rate: float = 0.05,
                    score_noise: float = 0.0, fraud_dist: ValueDistribution | None = None,
                    ) -> Realization:
    """Synthetic transaction stream with labels and classifier-like scores.

    Each event is positive with probability ``fraud_rate``.  Positive events
    draw values from ``fraud_dist`` (default ``dist``).  The score is the label
    plus Gaussian noise of scale ``score_noise``, clipped to ``[0, 1]``; with
    zero noise the score equals the label.
    """
    base = simulate(intensity, dist, rng)
    m = len(base)
    label = (rng.random(m) < fraud_rate).astype(np.int8)
    x = base.x.copy()
    if fraud_dist is not None:
        pos = label == 1
        x[pos] = fraud_dist.sample(rng, int(pos.sum()))
    score = np.clip(label + score_noise * rng.standard_normal(m), 0.0, 1.0)
    return Realization(base.t, x, base.T, score=score, label=label)
