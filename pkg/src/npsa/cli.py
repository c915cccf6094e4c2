"""Command-line entry point: ``npsa <command> ...``.

Commands
--------
simulate          write simulated realizations (optionally scored) to CSV
fit               fit rate / mean shortage on a training CSV and export curves
curves            derive curves from exported fits or an analytic scenario
replay            replay a curves CSV over a realizations CSV
expt-convergence  normalized reward as the number of training realizations grows
expt-robustness   reward when the test rate or mean is scaled by delta
expt-fraud        NPSA against the four baselines on scored streams
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import io
from ._backend import BACKEND
from .arrival import Constant, Realization, realization_rngs, simulate, simulate_scored
from .core import GridCurves, derive_critical_curves, replay_policy
from .estimators import build_mean_shortage_cache, estimate_intensity, pooled_values
from .experiments import (CONVERGENCE_COLUMNS, FRAUD_COLUMNS, ROBUSTNESS_COLUMNS, apply_overrides,
                          convergence_defaults, read_config_file, robustness_defaults,
                          run_convergence, run_fraud_replay, run_robustness)
from .ode import SolverConfig
from .value_dist import Lomax, from_spec

log = logging.getLogger("npsa")

TWO_PI = 2 * math.pi


def _add_scenario(p):
    p.add_argument("--dist", default="exponential", choices=["exponential", "lomax"])
    p.add_argument("--mu", type=float, default=5.0, help="exponential mean")
    p.add_argument("--alpha", type=float, default=3.5, help="Lomax shape (> 1)")
    p.add_argument("--xi", type=float, default=5.0, help="Lomax scale")
    p.add_argument("--lam", type=float, default=1.0, help="constant arrival rate")


def _add_solver(p):
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-8)


def _solver(args):
    return SolverConfig(rtol=args.rtol, atol=args.atol)


def fit_and_export(train_csv, T: float, n: int, out_prefix: str, adjusted: bool = False,
                   grid_points: int = 1024, solver: SolverConfig | None = None) -> dict:
    """Fit on ``train_csv`` and write ``<prefix>_intensity.csv``,
    ``<prefix>_phi.csv`` and ``<prefix>_curves.csv``."""
    train = io.read_realizations(train_csv, T, require_scores=adjusted)
    values = pooled_values(train, adjusted=adjusted)
    if values.size == 0:
        raise io.SchemaError(f"{train_csv}: no values to fit")
    est = estimate_intensity(train, T)
    cache = build_mean_shortage_cache(values)
    curves = derive_critical_curves(est.as_intensity(), cache, n, T, solver)
    paths = {k: f"{out_prefix}_{k}.csv" for k in ("intensity", "phi", "curves")}
    io.write_intensity(paths["intensity"], est)
    io.write_cache(paths["phi"], cache)
    curves.to_grid(grid_points).write_csv(paths["curves"])
    return paths


def cmd_simulate(args):
    dist = from_spec(args.dist, mu=args.mu, alpha=args.alpha, xi=args.xi)
    lam = Constant(args.lam, args.horizon)
    rngs = realization_rngs(args.seed, args.count)
    if args.fraud_rate is not None:
        fraud = Lomax(args.fraud_alpha, args.fraud_xi) if args.fraud_alpha else None
        reals = [simulate_scored(lam, dist, g, args.fraud_rate, args.score_noise, fraud) for g in rngs]
    else:
        reals = [simulate(lam, dist, g) for g in rngs]
    io.write_realizations(args.out, reals)
    log.info("wrote %d realizations (%d events) to %s", len(reals), sum(map(len, reals)), args.out)


def cmd_fit(args):
    paths = fit_and_export(args.train, args.horizon, args.n, args.out_prefix, args.adjusted,
                           args.grid, _solver(args))
    for p in paths.values():
        print(p)


def cmd_curves(args):
    if args.from_prefix:
        intensity = io.read_intensity(f"{args.from_prefix}_intensity.csv")
        phi = io.read_cache(f"{args.from_prefix}_phi.csv")
    else:
        intensity = Constant(args.lam, args.horizon)
        phi = from_spec(args.dist, mu=args.mu, alpha=args.alpha, xi=args.xi)
    curves = derive_critical_curves(intensity, phi, args.n, intensity.T, _solver(args))
    curves.to_grid(args.grid).write_csv(args.out)
    print(f"y_k(0): {' '.join(f'{v:.6g}' for v in curves.thresholds(0.0)[0])}")


def cmd_replay(args):
    curves = GridCurves.read_csv(args.curves)
    reals = io.read_realizations(args.data, curves.T, require_scores=args.adjusted)
    value_of = Realization.adjusted_values if args.adjusted else None
    rows = []
    for rid, r in enumerate(reals):
        res = replay_policy(curves, r, value_of)
        row = {"realization_id": rid, "accepted": res.workers_used, "total_reward": res.total_reward}
        if r.scored:
            lab = r.label[res.indices]
            row["realized_value"] = float(np.sum(r.x[res.indices] * lab))
            row["captured"] = int(lab.sum())
        rows.append(row)
    cols = ["realization_id", "accepted", "total_reward"]
    if reals and reals[0].scored:
        cols += ["realized_value", "captured"]
    io.write_rows(args.out, rows, cols)
    print(f"mean reward {np.mean([r['total_reward'] for r in rows]):.6g} over {len(rows)} realizations")


def _experiment_config(args, defaults):
    pairs = read_config_file(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v.strip()
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    return apply_overrides(defaults(), pairs)


def cmd_convergence(args):
    cfg = _experiment_config(args, convergence_defaults)
    rows = run_convergence(cfg)
    io.write_rows(args.out, rows, CONVERGENCE_COLUMNS)
    for n in cfg.n_list:
        last = [r for r in rows if r["n"] == n][-1]
        print(f"n={n} M={last['M']}: mean normalized {last['mean_normalized']:.4f}"
              f" +- {last['stderr']:.4f}, cesaro {last['cesaro']:.4f}")


def cmd_robustness(args):
    cfg = _experiment_config(args, robustness_defaults)
    rows = run_robustness(cfg)
    io.write_rows(args.out, rows, ROBUSTNESS_COLUMNS)
    print(f"wrote {len(rows)} rows to {args.out}")


def cmd_fraud(args):
    train = io.read_realizations(args.train, args.horizon, require_scores=True)
    test = io.read_realizations(args.test, args.horizon, require_scores=True)
    n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    rows = run_fraud_replay(train, test, n_list, args.horizon, args.positive_threshold, args.seed,
                            _solver(args))
    io.write_rows(args.out, rows, FRAUD_COLUMNS)
    print(f"wrote {len(rows)} rows to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npsa", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate realizations to CSV")
    _add_scenario(p)
    p.add_argument("--horizon", type=float, default=TWO_PI)
    p.add_argument("--count", type=int, default=10, help="number of realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraud-rate", type=float, default=None,
                   help="emit score,label columns with this positive rate")
    p.add_argument("--score-noise", type=float, default=0.0)
    p.add_argument("--fraud-alpha", type=float, default=None, help="Lomax shape for positive values")
    p.add_argument("--fraud-xi", type=float, default=50.0, help="Lomax scale for positive values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit estimators and export intensity, phi and curves CSVs")
    p.add_argument("train")
    p.add_argument("--horizon", type=float, default=TWO_PI)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--adjusted", action="store_true", help="fit on score * value")
    p.add_argument("--grid", type=int, default=1024)
    _add_solver(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("curves", help="derive curves; columns t,y_1..y_n")
    p.add_argument("--from-prefix", help="use <prefix>_intensity.csv and <prefix>_phi.csv")
    _add_scenario(p)
    p.add_argument("--horizon", type=float, default=TWO_PI)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", required=True)
    _add_solver(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("replay", help="replay curves; columns realization_id,accepted,total_reward"
                                      "[,realized_value,captured]")
    p.add_argument("curves")
    p.add_argument("data")
    p.add_argument("--adjusted", action="store_true", help="threshold score * value")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    for name, func, cols in (("expt-convergence", cmd_convergence, CONVERGENCE_COLUMNS),
                             ("expt-robustness", cmd_robustness, ROBUSTNESS_COLUMNS)):
        p = sub.add_parser(name, help=f"columns {','.join(cols)}")
        p.add_argument("--config", help="key = value file (ExperimentConfig fields)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("expt-fraud", help=f"columns {','.join(FRAUD_COLUMNS)}")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--horizon", type=float, default=TWO_PI)
    p.add_argument("--n-list", default="1,5,10,25")
    p.add_argument("--positive-threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_solver(p)
    p.set_defaults(func=cmd_fraud)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.info("kernel backend: %s", BACKEND)
    try:
        args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"npsa: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
