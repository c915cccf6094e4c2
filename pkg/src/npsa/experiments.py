"""Desk-scale experiment drivers: convergence in M, train/test shift, and
score-annotated stream replay against baselines.

Each driver returns a list of row dicts; ``*_COLUMNS`` give the CSV column
order.  Everything is seeded from ``config.seed`` through
``numpy.random.SeedSequence`` so reruns are byte-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import baselines
from .arrival import Constant, IntensityFunction, Realization, realization_rngs, simulate
from .core import (ConstantThresholds, derive_critical_curves, exact_curves, expected_reward,
                   optimal_reward, replay_policy)
from .estimators import build_mean_shortage_cache, estimate_intensity, pooled_values
from .ode import SolverConfig
from .value_dist import ValueDistribution, from_spec

CONVERGENCE_COLUMNS = ["M", "n", "mean_normalized", "stderr", "cesaro", "expected_normalized"]
ROBUSTNESS_COLUMNS = ["sweep", "delta", "n", "mean_normalized", "stderr", "expected_normalized"]
FRAUD_COLUMNS = ["n", "policy", "value_fraction", "value_fraction_se",
                 "count_fraction", "count_fraction_se", "realized_value"]


@dataclass
class ExperimentConfig:
    dist: str = "exponential"
    mu: float = 5.0
    alpha: float = 3.5
    xi: float = 5.0
    lam: float = 1.0
    T: float = 2 * math.pi
    n_list: tuple = (1, 5)
    M_list: tuple = tuple(range(1, 101))
    M: int = 30
    M_prime: int = 50
    seed: int = 0
    rtol: float = 1e-6
    atol: float = 1e-8
    n_deltas: int = 20
    delta_min: float = 1e-2
    delta_max: float = 1e2
    # evaluated in addition to the log grid, which never hits 1 or 10 exactly
    extra_deltas: tuple = (0.1, 1.0, 10.0)
    positive_threshold: float = 0.5
    grid_points: int = 1024

    def __post_init__(self):
        self.n_list = tuple(int(v) for v in self.n_list)
        self.extra_deltas = tuple(float(v) for v in self.extra_deltas)
        self.M_list = tuple(int(v) for v in self.M_list)
        if not self.n_list or min(self.n_list) < 1:
            raise ValueError("n values must be at least 1")
        if not self.M_list or min(self.M_list) < 1 or self.M < 1 or self.M_prime < 1:
            raise ValueError("M, M_list and M_prime must be at least 1")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.n_deltas < 1 or not 0 < self.delta_min <= self.delta_max:
            raise ValueError("bad delta sweep")

    def distribution(self) -> ValueDistribution:
        return from_spec(self.dist, mu=self.mu, alpha=self.alpha, xi=self.xi)

    def intensity(self) -> Constant:
        return Constant(self.lam, self.T)

    def solver(self) -> SolverConfig:
        return SolverConfig(rtol=self.rtol, atol=self.atol)

    def deltas(self) -> np.ndarray:
        grid = np.logspace(math.log10(self.delta_min), math.log10(self.delta_max), self.n_deltas)
        return np.unique(np.concatenate([grid, self.extra_deltas]))


def convergence_defaults(**kw) -> ExperimentConfig:
    return ExperimentConfig(**kw)


def robustness_defaults(**kw) -> ExperimentConfig:
    base = dict(lam=500.0, mu=200.0, M=30, M_prime=20)
    base.update(kw)
    return ExperimentConfig(**base)


def _parse_value(current, text: str):
    if isinstance(current, tuple):
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        if any(isinstance(v, float) for v in current):
            return tuple(float(p) for p in parts)
        out = []
        for p in parts:
            if ":" in p:  # a:b inclusive range
                lo, hi = (int(v) for v in p.split(":"))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(p))
        return tuple(out)
    if isinstance(current, bool):
        return text.strip().lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    return text.strip()


def apply_overrides(cfg: ExperimentConfig, pairs: dict) -> ExperimentConfig:
    known = {f.name for f in fields(cfg)}
    updates = {}
    for key, text in pairs.items():
        if key not in known:
            raise KeyError(f"unknown config key {key!r}")
        updates[key] = _parse_value(getattr(cfg, key), str(text))
    return replace(cfg, **updates)


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            pairs[k.strip()] = v.strip()
    return pairs


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
    return mean, se


def fit_policy(training: list[Realization], T: float, n: int, config: SolverConfig | None = None,
               adjusted: bool = False):
    """NPSA fit: estimate rate and mean shortage from ``training``, derive ``n`` curves.

    If the training data hold no events (or only zero values) every
    threshold is zero, i.e. accept the first ``n`` jobs.
    """
    values = pooled_values(training, adjusted=adjusted)
    if values.size == 0 or not np.any(values > 0):
        return ConstantThresholds((0.0,) * n, T)
    est = estimate_intensity(training, T)
    cache = build_mean_shortage_cache(values)
    return derive_critical_curves(est.as_intensity(), cache, n, T, config)


def _head(policy, n):
    if isinstance(policy, ConstantThresholds):
        return ConstantThresholds(policy.values[:n], policy.T)
    return policy.head(n)


def run_convergence(cfg: ExperimentConfig) -> list[dict]:
    """Normalized replay reward of NPSA fitted on M realizations, for each M."""
    dist, lam, solver = cfg.distribution(), cfg.intensity(), cfg.solver()
    n_max = max(cfg.n_list)
    optimal = exact_curves(lam, dist, n_max, solver)
    r_star = {n: optimal_reward(optimal.head(n)) for n in cfg.n_list}
    rows = []
    for M in cfg.M_list:
        training = [simulate(lam, dist, g) for g in realization_rngs(cfg.seed, M, 1, M)]
        test = [simulate(lam, dist, g) for g in realization_rngs(cfg.seed, cfg.M_prime, 2, M)]
        fitted = fit_policy(training, cfg.T, n_max, solver)
        for n in cfg.n_list:
            policy = _head(fitted, n)
            rewards = [replay_policy(policy, r).total_reward / r_star[n] for r in test]
            mean, se = _mean_se(rewards)
            exp_r = expected_reward(policy, lam, dist, solver) / r_star[n]
            rows.append({"M": M, "n": n, "mean_normalized": mean, "stderr": se,
                         "expected_normalized": exp_r})
    rows.sort(key=lambda r: (r["n"], r["M"]))
    for n in cfg.n_list:
        sub = [r for r in rows if r["n"] == n]
        running = np.cumsum([r["mean_normalized"] for r in sub]) / np.arange(1, len(sub) + 1)
        for r, c in zip(sub, running):
            r["cesaro"] = float(c)
    return rows


def run_robustness(cfg: ExperimentConfig) -> list[dict]:
    """Train once at (lam, mean); replay on streams with the rate or the mean
    scaled by each delta, normalizing by the optimal reward of the test process."""
    dist, lam, solver = cfg.distribution(), cfg.intensity(), cfg.solver()
    n_max = max(cfg.n_list)
    training = [simulate(lam, dist, g) for g in realization_rngs(cfg.seed, cfg.M, 1)]
    fitted = fit_policy(training, cfg.T, n_max, solver)
    rows = []
    for sweep_id, sweep in enumerate(("lambda", "mu")):
        for j, delta in enumerate(cfg.deltas()):
            t_lam: IntensityFunction = Constant(cfg.lam * delta, cfg.T) if sweep == "lambda" else lam
            t_dist = dist.scaled(delta) if sweep == "mu" else dist
            optimal = exact_curves(t_lam, t_dist, n_max, solver)
            test = [simulate(t_lam, t_dist, g)
                    for g in realization_rngs(cfg.seed, cfg.M_prime, 3, sweep_id, j)]
            for n in cfg.n_list:
                policy = _head(fitted, n)
                r_star = optimal_reward(optimal.head(n))
                rewards = [replay_policy(policy, r).total_reward / r_star for r in test]
                mean, se = _mean_se(rewards)
                exp_r = expected_reward(policy, t_lam, t_dist, solver) / r_star
                rows.append({"sweep": sweep, "delta": float(delta), "n": n,
                             "mean_normalized": mean, "stderr": se, "expected_normalized": exp_r})
    rows.sort(key=lambda r: (r["sweep"], r["n"], r["delta"]))
    return rows


FRAUD_POLICIES = ("npsa", "greedy", "uniform", "hindsight", "full_knowledge")


def fraud_results(train: list[Realization], test: list[Realization], n: int, T: float,
                  positive_threshold: float = 0.5, seed: int = 0,
                  solver: SolverConfig | None = None, policy=None) -> dict[str, list]:
    """Per-test-realization (value fraction, count fraction, realized value) for each policy."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if policy is None:
        policy = fit_policy(train, T, n, solver, adjusted=True)
    out = {name: [] for name in FRAUD_POLICIES}
    rngs = realization_rngs(seed, len(test), 4, n)
    for stream, rng in zip(test, rngs):
        results = {
            "npsa": replay_policy(policy, stream, value_of=Realization.adjusted_values),
            "greedy": baselines.greedy(stream, n, positive_threshold),
            "uniform": baselines.uniform(stream, n, positive_threshold, rng),
            "hindsight": baselines.hindsight(stream, n, positive_threshold),
            "full_knowledge": baselines.full_knowledge(stream, n),
        }
        for name, res in results.items():
            fv, fc = baselines.fractions(res, stream)
            out[name].append((fv, fc, baselines.realized_value(res, stream)))
    return out


def run_fraud_replay(train: list[Realization], test: list[Realization], n_list, T: float,
                     positive_threshold: float = 0.5, seed: int = 0,
                     solver: SolverConfig | None = None) -> list[dict]:
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise ValueError("n values must be at least 1")
    for r in train + test:
        if not r.scored:
            raise ValueError("fraud replay needs score and label columns")
    fitted = fit_policy(train, T, max(n_list), solver, adjusted=True)
    rows = []
    for n in sorted(set(n_list)):
        per = fraud_results(train, test, n, T, positive_threshold, seed, solver, _head(fitted, n))
        for name in FRAUD_POLICIES:
            a = np.array(per[name], dtype=float).reshape(-1, 3)
            fv, fv_se = _mean_se(a[:, 0])
            fc, fc_se = _mean_se(a[:, 1])
            rows.append({"n": n, "policy": name, "value_fraction": fv, "value_fraction_se": fv_se,
                         "count_fraction": fc, "count_fraction_se": fc_se,
                         "realized_value": float(np.mean(a[:, 2])) if a.size else float("nan")})
    return rows
