"""Critical threshold curves, policy replay and expected reward.

With ``k`` workers left the active threshold is ``y_k(t)``; a job is taken
when its value strictly exceeds it.  The curves solve

    dy_k/dt = -lam(t) * (phi(y_k) - phi(y_{k-1})),  y_k(T) = 0,  phi(y_0) = 0,

and are integrated one after another in reversed time ``s = T - t`` so the
solver always runs forward.  Curve ``k`` reads curve ``k - 1`` through its
dense output.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._backend import PHI_EMPIRICAL, PHI_EXPONENTIAL, PHI_LOMAX, kernels
from .arrival import IntensityFunction, Realization, segment_bounds
from .estimators import MeanShortageCache
from .ode import DenseSolution, SolverConfig, SolverError, solve_piecewise
from .value_dist import Exponential, Lomax, ValueDistribution


class ThresholdPolicy:
    """Anything exposing ``n``, ``T`` and ``thresholds(t) -> (len(t), n)``.

    Column ``j`` holds the threshold of worker ``j + 1``.
    """

    n: int
    T: float

    def thresholds(self, t) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantThresholds(ThresholdPolicy):
    """Time-invariant thresholds; ``np.inf`` gives a never-accept policy."""

    values: tuple
    T: float

    @property
    def n(self):
        return len(self.values)

    def thresholds(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.broadcast_to(np.asarray(self.values, dtype=float), (t.size, self.n)).copy()


class CriticalCurveSet(ThresholdPolicy):
    """``n`` curves on ``[0, T]`` backed by reversed-time dense solutions."""

    def __init__(self, solutions: list[DenseSolution], T: float, provenance=None):
        self.solutions = list(solutions)
        self.T = float(T)
        self.provenance = provenance or {}

    @property
    def n(self):
        return len(self.solutions)

    def head(self, n: int) -> "CriticalCurveSet":
        # curve k depends only on curves < k, so fewer workers is a prefix
        if not 1 <= n <= self.n:
            raise ValueError(f"cannot take {n} of {self.n} curves")
        return CriticalCurveSet(self.solutions[:n], self.T, self.provenance)

    def curve(self, k: int, t):
        """y_k(t) for 1 <= k <= n, clamped at zero."""
        if not 1 <= k <= self.n:
            raise IndexError(f"curve index {k} outside 1..{self.n}")
        s = self.T - np.asarray(t, dtype=float)
        s = np.clip(s, 0.0, self.T)
        return np.maximum(self.solutions[k - 1](s)[..., 0], 0.0)

    def thresholds(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.n))
        for j in range(self.n):
            out[:, j] = self.curve(j + 1, t)
        return out

    def scalar_thresholds(self, t: float) -> np.ndarray:
        s = min(max(self.T - t, 0.0), self.T)
        return np.array([max(sol.scalar(s), 0.0) for sol in self.solutions])

    def __call__(self, t):
        return self.thresholds(t)

    def to_grid(self, points: int = 1024) -> "GridCurves":
        grid = np.linspace(0.0, self.T, points)
        return GridCurves(grid, self.thresholds(grid))


class GridCurves(ThresholdPolicy):
    """Curves sampled on a grid; the threshold at ``t`` is the value at the
    last grid point ``<= t`` (a snapped, lossy replayer)."""

    def __init__(self, grid, values):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(self.grid.size, -1)
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 points")
        self.T = float(self.grid[-1])

    @property
    def n(self):
        return self.values.shape[1]

    def thresholds(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 1)
        return self.values[i]

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"y_{k}" for k in range(1, self.n + 1)])
            for t, row in zip(self.grid, self.values):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "GridCurves":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "t" or len(rows) < 3:
            raise ValueError(f"{path}: not a curves file")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, 0], data[:, 1:])


@dataclass(frozen=True)
class ReplayResult:
    indices: np.ndarray
    workers: np.ndarray
    times: np.ndarray
    values: np.ndarray = field(repr=False)

    @property
    def accepted(self) -> list[tuple[int, float, float]]:
        return [(int(k), float(t), float(v)) for k, t, v in zip(self.workers, self.times, self.values)]

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.values))

    @property
    def workers_used(self) -> int:
        return int(self.indices.size)


def _phi_descriptor(phi):
    if isinstance(phi, Exponential):
        return PHI_EXPONENTIAL, phi.mu, 0.0, np.empty(0), np.empty(0), 0.0
    if isinstance(phi, Lomax):
        return PHI_LOMAX, phi.alpha, phi.xi, np.empty(0), np.empty(0), 0.0
    if isinstance(phi, MeanShortageCache):
        return PHI_EMPIRICAL, 0.0, 0.0, phi.xs, phi.phis, phi.sample_mean
    return None


def monotone_dense(ts, ys, qs):
    """Replace any step whose quartic interpolant is not nondecreasing.

    Curves are nondecreasing in reversed time, but where a curve sits below
    the solver's absolute tolerance the quartic can wiggle inside a step.
    Offending steps get a cubic Hermite through the same end values and end
    slopes, limited after Fritsch and Carlson so it is monotone.
    """
    q = np.array(qs, dtype=float).reshape(-1, 4)
    if q.shape[0] == 0:
        return q
    # derivative in x of the step polynomial (up to the factor h): d(x) = sum (i+1) q_i x^i
    d0, d1, d2, d3 = q[:, 0], 2 * q[:, 1], 3 * q[:, 2], 4 * q[:, 3]
    a, b, c = 3 * d3, 2 * d2, d1  # d'(x) = a x^2 + b x + c
    xs = [np.zeros_like(a), np.ones_like(a)]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
        quad = a != 0
        xs.append(np.where(quad, (-b + disc) / (2 * a), np.where(b != 0, -c / b, 0.0)))
        xs.append(np.where(quad, (-b - disc) / (2 * a), 0.0))
    xs = np.clip(np.nan_to_num(np.array(xs)), 0.0, 1.0)
    dmin = np.min(d0 + xs * (d1 + xs * (d2 + xs * d3)), axis=0)
    bad = np.flatnonzero(dmin < 0)
    if bad.size == 0:
        return q
    h = np.diff(np.asarray(ts, dtype=float))[bad]
    y = np.asarray(ys, dtype=float).ravel()
    delta = (y[bad + 1] - y[bad]) / h
    f0 = np.maximum(q[bad, 0], 0.0)
    f1 = np.maximum(q[bad] @ np.array([1.0, 2.0, 3.0, 4.0]), 0.0)
    out = np.zeros((bad.size, 4))
    pos = delta > 0
    al = np.where(pos, f0 / np.where(pos, delta, 1.0), 0.0)
    be = np.where(pos, f1 / np.where(pos, delta, 1.0), 0.0)
    r = np.hypot(al, be)
    tau = np.where(r > 3.0, 3.0 / np.where(r > 0, r, 1.0), 1.0)
    m0, m1 = al * tau * delta, be * tau * delta
    out[:, 0] = np.where(pos, m0, delta)
    out[:, 1] = np.where(pos, 3 * delta - 2 * m0 - m1, 0.0)
    out[:, 2] = np.where(pos, m0 + m1 - 2 * delta, 0.0)
    q[bad] = out
    return q


def _describe(obj):
    if isinstance(obj, MeanShortageCache):
        return f"empirical(N={obj.N})"
    return repr(obj)


def derive_critical_curves(intensity: IntensityFunction, phi, n: int, T: float | None = None,
                           config: SolverConfig | None = None) -> CriticalCurveSet:
    """Solve for ``n`` optimal critical curves.

    ``phi`` is an exponential or Lomax distribution (closed-form mean
    shortage), a ``MeanShortageCache``, or any nonincreasing convex callable.
    The first two kinds run in the compiled kernel when it is available.
    """
    if n < 1:
        raise ValueError("need at least one worker")
    cfg = config or SolverConfig()
    T = float(intensity.T if T is None else T)
    if abs(T - intensity.T) > 1e-12 * max(1.0, T):
        raise ValueError(f"horizon {T} does not match intensity horizon {intensity.T}")
    width, rates = intensity.as_bins()
    rates = np.ascontiguousarray(rates, dtype=float)
    desc = _phi_descriptor(phi)
    sols = []
    prev = (np.empty(0), np.empty(0), np.empty((0, 4)))
    for k in range(1, n + 1):
        try:
            if desc is not None:
                kind, a, b, xs, phis, mean = desc
                ts, ys, qs = kernels.integrate_curve(
                    T, float(width), rates, kind, float(a), float(b), xs, phis, float(mean),
                    *prev, cfg.rtol, cfg.atol, cfg.min_step, cfg.max_steps)
            else:
                ts, ys, qs = _integrate_curve_callable(intensity, phi, T, prev, cfg)
        except SolverError as exc:
            raise SolverError(f"curve {k}: {exc}", exc.t) from exc
        qs = monotone_dense(ts, ys, qs)
        sols.append(DenseSolution(ts, ys, qs))
        prev = (ts, ys, qs)
    return CriticalCurveSet(sols, T, {"intensity": repr(intensity), "phi": _describe(phi)})


def _extended(phi):
    # E[(X - y)^+] = mean - y below zero
    phi0 = float(phi(0.0))
    return lambda y: float(phi(y)) if y >= 0 else phi0 - y


def _integrate_curve_callable(intensity, phi, T, prev, cfg):
    prev_sol = DenseSolution(*prev) if prev[0].size else None
    width, rates = intensity.as_bins()
    nb = rates.size
    phi = _extended(phi)

    def rhs_for(j):
        lam = float(rates[nb - 1 - j])
        if prev_sol is None:
            return lambda s, y: lam * phi(y[0])
        return lambda s, y: lam * max(phi(y[0]) - phi(prev_sol.scalar(s)), 0.0)

    sol = solve_piecewise(rhs_for, segment_bounds(T, width, nb), [0.0], cfg)
    return sol.ts, sol.ys[:, 0].copy(), sol.qs[:, 0, :].copy()


def replay_policy(policy: ThresholdPolicy, realization: Realization, value_of=None) -> ReplayResult:
    """Run the threshold policy over the stream in time order.

    ``value_of`` maps the realization to per-event values used for both the
    accept test and the reward; defaults to the raw values.
    """
    if abs(realization.T - policy.T) > 1e-9 * max(1.0, policy.T):
        raise ValueError(f"realization horizon {realization.T} != policy horizon {policy.T}")
    values = realization.x if value_of is None else np.asarray(value_of(realization), dtype=float)
    if values.size == 0:
        empty = np.empty(0)
        return ReplayResult(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), empty, empty)
    thr = policy.thresholds(realization.t)
    idx, workers = kernels.replay(values, thr)
    return ReplayResult(idx, workers, realization.t[idx], values[idx])


def expected_reward(policy: ThresholdPolicy, true_intensity: IntensityFunction, true_dist,
                    config: SolverConfig | None = None, return_all: bool = False):
    """Expected reward of replaying ``policy`` from t = 0 under the true process.

    Integrates, in reversed time, the terminal-value system obtained by
    differentiating the nested-integral form of the reward:

        dE_k/dt = -lam(t) [H(y_k) - Fbar(y_k) (E_k - E_{k-1})],  E_k(T) = 0,

    with ``H(y) = E[X 1{X > y}]`` and ``Fbar = 1 - F``.  ``true_dist`` needs
    ``tail_mean`` and ``sf`` (analytic distributions and empirical caches
    both qualify).
    """
    cfg = config or SolverConfig()
    T = policy.T
    n = policy.n
    scalar_thr = getattr(policy, "scalar_thresholds", None)

    width, rates = true_intensity.as_bins()
    nb = rates.size

    def rhs_for(j):
        lam = float(rates[nb - 1 - j])

        def rhs(s, E):
            t = T - s
            y = scalar_thr(t) if scalar_thr is not None else policy.thresholds(t)[0]
            H = np.asarray(true_dist.tail_mean(y), dtype=float)
            Fb = np.where(np.isfinite(y), true_dist.sf(np.where(np.isfinite(y), y, 0.0)), 0.0)
            lower = np.concatenate(([0.0], E[:-1]))
            return lam * (H - Fb * (E - lower))
        return rhs

    if abs(true_intensity.T - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"policy horizon {T} != intensity horizon {true_intensity.T}")
    sol = solve_piecewise(rhs_for, segment_bounds(T, width, nb), np.zeros(n), cfg)
    E = sol.ys[-1]
    return E.copy() if return_all else float(E[-1])


def optimal_reward(curves: CriticalCurveSet, t: float = 0.0) -> float:
    """Sum of the curves at ``t``; equals the expected reward for optimal curves."""
    return float(np.sum(curves.thresholds(t)))


def exact_curves(intensity: IntensityFunction, dist: ValueDistribution, n: int,
                 config: SolverConfig | None = None) -> CriticalCurveSet:
    """Optimal curves for a known intensity and closed-form distribution."""
    return derive_critical_curves(intensity, dist, n, config=config)
