"""Adaptive Dormand-Prince 5(4) integrator with quartic dense output.

Only forward integration is supported; callers that need a terminal-value
problem substitute ``s = T - t`` themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Dormand-Prince tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output: y(t + x h) = y + h * K^T P [x, x^2, x^3, x^4]
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# step-size controller (Hairer's DOPRI5 defaults)
SAFETY = 0.9
FAC_MIN = 0.2     # smallest shrink factor
FAC_MAX = 10.0    # largest growth factor
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75


class SolverError(RuntimeError):
    """Integration failed; ``t`` is where it stopped."""

    def __init__(self, msg, t=None):
        super().__init__(msg if t is None else f"{msg} at t={t!r}")
        self.t = t


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-6
    atol: float = 1e-8
    max_steps: int = 1_000_000
    min_step: float = 1e-14
    first_step: float | None = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


class DenseSolution:
    """Piecewise-quartic interpolant over the accepted step mesh.

    ``ts`` has shape (m+1,), ``ys`` (m+1, d) and ``qs`` (m, d, 4).
    """

    def __init__(self, ts, ys, qs, h_next=None, attempts=0):
        self.h_next = h_next      # step size the controller would try next
        self.attempts = attempts  # accepted plus rejected steps
        self.ts = np.ascontiguousarray(ts, dtype=float)
        self.ys = np.ascontiguousarray(ys, dtype=float).reshape(self.ts.size, -1)
        self.qs = np.ascontiguousarray(qs, dtype=float).reshape(max(self.ts.size - 1, 0), self.ys.shape[1], 4)
        self.hs = np.diff(self.ts)

    @property
    def t_span(self):
        return float(self.ts[0]), float(self.ts[-1])

    @property
    def dim(self):
        return self.ys.shape[1]

    @property
    def n_steps(self):
        return self.hs.size

    def __call__(self, t):
        """Evaluate at scalar or array ``t``; returns shape (..., d)."""
        t = np.asarray(t, dtype=float)
        t0, t1 = self.t_span
        if np.any((t < t0) | (t > t1)):
            raise ValueError(f"t outside solution span [{t0}, {t1}]")
        flat = t.ravel()
        if self.hs.size == 0:
            return np.broadcast_to(self.ys[0], t.shape + (self.dim,)).copy()
        i = np.clip(np.searchsorted(self.ts, flat, side="right") - 1, 0, self.hs.size - 1)
        h = self.hs[i]
        x = (flat - self.ts[i]) / h
        powers = np.stack([x, x * x, x ** 3, x ** 4], axis=-1)
        out = self.ys[i] + h[:, None] * np.einsum("ndk,nk->nd", self.qs[i], powers)
        # mesh points return stored states exactly
        at_end = flat == t1
        out[at_end] = self.ys[-1]
        return out.reshape(t.shape + (self.dim,))

    def scalar(self, t: float) -> float:
        """Fast path for 1-d solutions at a single time."""
        ts = self.ts
        if t >= ts[-1]:
            return float(self.ys[-1, 0])
        i = int(np.searchsorted(ts, t, side="right")) - 1
        if i < 0:
            i = 0
        h = self.hs[i]
        x = (t - ts[i]) / h
        q = self.qs[i, 0]
        return float(self.ys[i, 0] + h * x * (q[0] + x * (q[1] + x * (q[2] + x * q[3]))))


def _norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _initial_step(fun, t0, y0, f0, span, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = _norm(y0 / scale)
    d1 = _norm(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _norm((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def solve_ivp(rhs, t_span, y0, config: SolverConfig | None = None) -> DenseSolution:
    """Integrate ``dy/dt = rhs(t, y)`` forward over ``t_span`` from ``y0``.

    Per-step error control keeps ``|err_i| <= atol + rtol * max(|y_i|, |y_new_i|)``
    for every component.  Raises ``SolverError`` on step underflow, on
    exceeding ``max_steps`` or if ``rhs`` returns a non-finite value.
    """
    cfg = config or SolverConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing and nondegenerate")
    y = np.array(y0, dtype=float).ravel()

    def fun(t, yy):
        # trial stages never leave the span
        t = t0 if t < t0 else (t1 if t > t1 else t)
        out = np.asarray(rhs(t, yy), dtype=float).ravel()
        if not np.all(np.isfinite(out)):
            raise SolverError("non-finite right-hand side", t)
        return out

    rtol, atol = cfg.rtol, cfg.atol
    t = t0
    f = fun(t, y)
    h = cfg.first_step or _initial_step(fun, t, y, f, t1 - t0, rtol, atol)
    h_ctrl, clipped = h, False
    ts, ys, qs = [t], [y.copy()], []
    K = np.empty((7, y.size))
    facold = 1e-4
    rejected = False
    steps = 0
    while t < t1:
        if steps >= cfg.max_steps:
            raise SolverError("maximum number of steps exceeded", t)
        if h < cfg.min_step:
            raise SolverError("step size underflow", t)
        h_ctrl = h
        clipped = t + 1.01 * h >= t1
        if clipped:
            h = t1 - t
        K[0] = f
        for s in range(1, 7):
            dy = np.dot(A[s], K[:s]) * h
            K[s] = fun(t + C[s] * h, y + dy)
        # stage 7 is evaluated at the 5th-order solution (FSAL)
        y_new = y + h * np.dot(A[6], K[:6])
        err = h * np.dot(E, K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _norm(err / scale)
        steps += 1
        fac11 = err_norm ** EXPO1
        if err_norm <= 1.0:
            fac = fac11 / facold ** BETA
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
            h_new = h / fac
            if rejected:
                h_new = min(h_new, h)
            facold = max(err_norm, 1e-4)
            qs.append(K.T @ P)
            t_new = t1 if h == t1 - t else t + h
            t, y, f = t_new, y_new, K[6].copy()
            ts.append(t)
            ys.append(y.copy())
            rejected = False
            h = h_new
        else:
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
            rejected = True
    # a final step shortened to land on t1 understates the usable step size
    h_next = max(h, h_ctrl) if clipped else h
    return DenseSolution(np.array(ts), np.array(ys), np.array(qs).reshape(len(qs), y.size, 4),
                         h_next, steps)


def solve_piecewise(rhs_for, bounds, y0, config: SolverConfig | None = None) -> DenseSolution:
    """Integrate across ``bounds[0] < bounds[1] < ...`` restarting at each bound.

    ``rhs_for(j)`` gives the right-hand side on ``[bounds[j], bounds[j+1]]``,
    so jumps in the model at the bounds never fall inside a step.  The step
    size carries over between segments; the step budget is shared.
    """
    cfg = config or SolverConfig()
    bounds = np.asarray(bounds, dtype=float)
    y = np.array(y0, dtype=float).ravel()
    ts, ys, qs = [bounds[:1]], [y[None, :]], []
    h, used = cfg.first_step, 0
    for j in range(bounds.size - 1):
        a, b = bounds[j], bounds[j + 1]
        if not b > a:
            continue
        seg_cfg = replace(cfg, first_step=h, max_steps=cfg.max_steps - used)
        if seg_cfg.max_steps < 1:
            raise SolverError("maximum number of steps exceeded", a)
        sol = solve_ivp(rhs_for(j), (a, b), y, seg_cfg)
        ts.append(sol.ts[1:])
        ys.append(sol.ys[1:])
        qs.append(sol.qs)
        used += sol.attempts
        h = sol.h_next
        y = sol.ys[-1]
    return DenseSolution(np.concatenate(ts), np.concatenate(ys), np.concatenate(qs), h, used)


def fixed_step(rhs, t_span, y0, n_steps: int) -> np.ndarray:
    """Same tableau with ``n_steps`` equal steps; returns the final state."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    h = (t1 - t0) / n_steps
    y = np.array(y0, dtype=float).ravel()
    K = np.empty((7, y.size))
    for j in range(n_steps):
        t = t0 + j * h
        K[0] = rhs(t, y)
        for s in range(1, 7):
            K[s] = rhs(t + C[s] * h, y + h * np.dot(A[s], K[:s]))
        y = y + h * np.dot(B, K)
    return y
