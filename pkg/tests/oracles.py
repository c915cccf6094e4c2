"""Independent reference implementations used only by the tests."""
import math

import numpy as np


def brute_mean_shortage(samples, y):
    """Sum of rectangles of (1 - F_N) over [y, max sample], F_N by direct counting."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    pts = np.concatenate(([y], xs[xs > y]))
    if pts.size < 2:
        return 0.0
    # F_N is constant on [pts[i], pts[i+1]) and equals #(x <= pts[i]) / n
    below = np.array([np.count_nonzero(xs <= p) for p in pts[:-1]])
    return math.fsum(np.diff(pts) * (n - below) / n)


def exp_single_curve(mu, lam, T, t):
    """Closed form of the single-worker curve for Exp(mu) values at constant rate."""
    t = np.asarray(t, dtype=float)
    return mu * np.log1p(lam * (T - t))


def lomax_single_curve(alpha, xi, lam, T, t):
    """Closed form of the single-worker curve for Lomax(alpha, xi) at constant rate."""
    t = np.asarray(t, dtype=float)
    return xi * ((1 + alpha * lam * (T - t) / (alpha - 1)) ** (1 / alpha) - 1)
