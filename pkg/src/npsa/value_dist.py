"""Job-value distributions.

Two analytic families (exponential and Lomax) with closed-form cdf and
mean shortage function, plus an empirical distribution backed by samples.
All objects are immutable; sampling takes an explicit ``numpy`` Generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ValueDistribution:
    """Base class; subclasses implement ``sample``, ``cdf`` and ``sf``."""

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def cdf(self, z):
        z = _check_nonneg(z)
        return 1.0 - self.sf(z)

    def sf(self, z):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def phi_exact(self, y):
        raise TypeError(
            f"{type(self).__name__} has no closed-form mean shortage function; "
            "build an empirical cache instead"
        )

    def tail_mean(self, y):
        """E[X 1{X > y}], i.e. phi(y) + y * (1 - F(y))."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        finite = np.isfinite(y)
        yf = y[finite]
        out[finite] = self.phi_exact(yf) + yf * self.sf(yf)
        return out

    def scaled(self, factor: float) -> "ValueDistribution":
        raise NotImplementedError


def _check_nonneg(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("values must be nonnegative")
    return z


@dataclass(frozen=True)
class Exponential(ValueDistribution):
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"exponential mean must be positive, got {self.mu}")

    def sample(self, rng, size=None):
        # inverse cdf: -mu * log(1 - U)
        return -self.mu * np.log1p(-rng.random(size))

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-z / self.mu)

    def mean(self):
        return self.mu

    def phi_exact(self, y):
        y = _check_nonneg(y)
        return self.mu * np.exp(-y / self.mu)

    def scaled(self, factor):
        return Exponential(self.mu * factor)


@dataclass(frozen=True)
class Lomax(ValueDistribution):
    """Pareto type II with shape ``alpha`` (> 1, finite mean) and scale ``xi``."""

    alpha: float
    xi: float

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError(f"Lomax shape must exceed 1 for a finite mean, got {self.alpha}")
        if not self.xi > 0:
            raise ValueError(f"Lomax scale must be positive, got {self.xi}")

    def sample(self, rng, size=None):
        u = rng.random(size)
        return self.xi * ((1.0 - u) ** (-1.0 / self.alpha) - 1.0)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        return (1.0 + z / self.xi) ** (-self.alpha)

    def mean(self):
        return self.xi / (self.alpha - 1.0)

    def phi_exact(self, y):
        y = _check_nonneg(y)
        a, xi = self.alpha, self.xi
        # (xi^a y + xi^(a+1)) / ((a-1)(xi+y)^a), written to avoid overflow in xi^a
        return xi * (1.0 + y / xi) ** (1.0 - a) / (a - 1.0)

    def scaled(self, factor):
        return Lomax(self.alpha, self.xi * factor)


@dataclass(frozen=True)
class Empirical(ValueDistribution):
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if xs.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        if xs[0] < 0 or not np.all(np.isfinite(xs)):
            raise ValueError("empirical samples must be finite and nonnegative")
        xs.setflags(write=False)
        object.__setattr__(self, "samples", xs)

    def sample(self, rng, size=None):
        return rng.choice(self.samples, size=size)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        n = self.samples.size
        return 1.0 - np.searchsorted(self.samples, z, side="right") / n

    def mean(self):
        return float(np.mean(self.samples))

    def scaled(self, factor):
        return Empirical(self.samples * factor)


def from_spec(kind: str, **params) -> ValueDistribution:
    """Build a distribution from a name and keyword parameters (CLI helper)."""
    kind = kind.lower()
    if kind in ("exp", "exponential"):
        return Exponential(float(params["mu"]))
    if kind == "lomax":
        return Lomax(float(params["alpha"]), float(params["xi"]))
    raise ValueError(f"unknown distribution {kind!r}")
