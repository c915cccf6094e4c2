"""Pure numpy implementations of the hot kernels.

Same signatures as the compiled ``_kernels`` module; used when the
extension is not built or ``NPSA_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

from .arrival import segment_bounds
from .ode import DenseSolution, SolverConfig, solve_piecewise

PHI_EMPIRICAL = 0
PHI_EXPONENTIAL = 1
PHI_LOMAX = 2


def shortage_table(xs):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    n = xs.size
    phis = np.zeros(n)
    if n > 1:
        # phi_i = phi_{i+1} + (x_{i+1} - x_i) (N - i) / N, 1-based i; accumulated
        # right to left so the rounding matches a sequential loop
        w = (n - np.arange(1, n)) / n
        gaps = np.diff(xs) * w
        phis[:-1] = np.cumsum(gaps[::-1])[::-1]
    return phis


def shortage_eval(xs, phis, mean, ys):
    ys = np.asarray(ys, dtype=np.float64)
    n = xs.size
    j = np.searchsorted(xs, ys, side="right")
    jc = np.minimum(j, n - 1)
    out = phis[jc] + (xs[jc] - ys) * ((n - j) / n)
    out = np.where(j >= n, 0.0, out)
    # at or below the smallest sample the survival is 1: phi = mean - y, so
    # phi(0) is the sample mean exactly even with zero-valued samples
    return np.where(ys <= xs[0], mean - ys, out)


def shortage_eval1(xs, phis, mean, y):
    n = xs.size
    if y <= xs[0]:
        return mean - y
    j = int(np.searchsorted(xs, y, side="right"))
    if j >= n:
        return 0.0
    return float(phis[j] + (xs[j] - y) * ((n - j) / n))


def replay(values, thresholds):
    """Sequential acceptance: worker k (from n down) takes value > thresholds[i, k-1]."""
    values = np.asarray(values, dtype=np.float64)
    thr = np.asarray(thresholds, dtype=np.float64)
    k = thr.shape[1] if thr.ndim == 2 else 0
    idx, workers = [], []
    for i in range(values.size):
        if k == 0:
            break
        if values[i] > thr[i, k - 1]:
            idx.append(i)
            workers.append(k)
            k -= 1
    return np.array(idx, dtype=np.int64), np.array(workers, dtype=np.int64)


def _phi_scalar(kind, a, b, xs, phis, mean):
    # below zero every kind continues as E[(X - y)^+] = mean - y
    if kind == PHI_EXPONENTIAL:
        return lambda y: a * math.exp(-y / a) if y >= 0 else a - y
    if kind == PHI_LOMAX:
        return lambda y: b * (1.0 + y / b) ** (1.0 - a) / (a - 1.0) if y >= 0 else b / (a - 1.0) - y
    return lambda y: shortage_eval1(xs, phis, mean, y)


def integrate_curve(T, bin_width, rates, kind, a, b, xs, phis, mean,
                    prev_t, prev_y, prev_q, rtol, atol, min_step, max_steps):
    """One critical curve in reversed time ``s = T - t``.

    dy/ds = lam(T - s) * (phi(y) - phi(prev(s))), y(0) = 0; ``prev`` is the
    previous curve's dense output (empty for the first curve).  The solver
    restarts at every bin edge so rate jumps never fall inside a step.
    """
    phi = _phi_scalar(kind, a, b, xs, phis, mean)
    nb = rates.size
    prev = DenseSolution(prev_t, prev_y, prev_q) if prev_t.size > 0 else None

    def rhs_for(j):
        lam = float(rates[nb - 1 - j])
        if prev is None:
            return lambda s, y: lam * phi(y[0])
        # the exact difference is >= 0 since y_k <= y_(k-1); clamping keeps
        # curves below the atol floor from running backwards
        return lambda s, y: lam * max(phi(y[0]) - phi(prev.scalar(s)), 0.0)

    sol = solve_piecewise(rhs_for, segment_bounds(T, bin_width, nb), [0.0],
                          SolverConfig(rtol=rtol, atol=atol, min_step=min_step, max_steps=max_steps))
    return sol.ts, sol.ys[:, 0].copy(), sol.qs[:, 0, :].copy()
