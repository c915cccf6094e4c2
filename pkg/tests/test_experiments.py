import math

import numpy as np
import pytest

from npsa.arrival import Constant, Realization, simulate_scored
from npsa.core import ConstantThresholds, CriticalCurveSet
from npsa.experiments import (ExperimentConfig, _mean_se, apply_overrides, convergence_defaults,
                              fit_policy, fraud_results, read_config_file, robustness_defaults,
                              run_convergence, run_robustness)
from npsa.value_dist import Exponential, Lomax


def test_defaults():
    c = convergence_defaults()
    assert (c.lam, c.mu, c.T, c.n_list) == (1.0, 5.0, 2 * math.pi, (1, 5))
    assert c.M_list == tuple(range(1, 101))
    r = robustness_defaults()
    assert (r.lam, r.mu, r.M) == (500.0, 200.0, 30)


def test_deltas_cover_log_grid_and_checkpoints():
    d = ExperimentConfig().deltas()
    assert d[0] == pytest.approx(1e-2) and d[-1] == pytest.approx(1e2)
    for v in (0.1, 1.0, 10.0):
        assert v in d
    assert np.all(np.diff(d) > 0)


def test_overrides_parse_types():
    c = apply_overrides(ExperimentConfig(), {"M_list": "1:3,7", "lam": "2.5", "n_list": "2",
                                             "extra_deltas": "0.5, 4", "dist": "lomax", "seed": "9"})
    assert c.M_list == (1, 2, 3, 7) and c.lam == 2.5 and c.n_list == (2,)
    assert c.extra_deltas == (0.5, 4.0) and c.dist == "lomax" and c.seed == 9
    with pytest.raises(KeyError):
        apply_overrides(ExperimentConfig(), {"nope": "1"})
    with pytest.raises(ValueError):
        apply_overrides(ExperimentConfig(), {"n_list": "0"})


def test_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("lam = 3  # rate\n\nmu=2\n")
    assert read_config_file(p) == {"lam": "3", "mu": "2"}
    p.write_text("lam 3\n")
    with pytest.raises(ValueError):
        read_config_file(p)


def test_mean_se():
    m, se = _mean_se([1.0, 2.0, 3.0, float("nan")])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))
    assert math.isnan(_mean_se([1.0])[1])
    assert all(math.isnan(v) for v in _mean_se([]))


def test_fit_policy_without_values_accepts_everything():
    pol = fit_policy([Realization([], [], 1.0)], 1.0, 2)
    assert isinstance(pol, ConstantThresholds) and pol.values == (0.0, 0.0)
    pol = fit_policy([Realization([0.2, 0.5], [1.0, 2.0], 1.0)], 1.0, 2)
    assert isinstance(pol, CriticalCurveSet) and pol.n == 2


def test_convergence_rows_and_cesaro():
    cfg = ExperimentConfig(M_list=(1, 2, 4), M_prime=10, n_list=(1, 2))
    rows = run_convergence(cfg)
    assert [(r["n"], r["M"]) for r in rows] == [(1, 1), (1, 2), (1, 4), (2, 1), (2, 2), (2, 4)]
    for n in (1, 2):
        sub = [r for r in rows if r["n"] == n]
        vals = [r["mean_normalized"] for r in sub]
        np.testing.assert_allclose([r["cesaro"] for r in sub], np.cumsum(vals) / [1, 2, 3])
    assert all(0 < r["expected_normalized"] <= 1 + 1e-6 for r in rows)
    assert rows == run_convergence(cfg)


def test_robustness_rows():
    cfg = robustness_defaults(lam=5.0, mu=2.0, M=3, M_prime=4, n_deltas=3, n_list=(1,))
    rows = run_robustness(cfg)
    assert len(rows) == 2 * len(cfg.deltas())
    one = [r for r in rows if r["delta"] == 1.0]
    assert len(one) == 2
    # at delta = 1 both sweeps replay the training process
    assert one[0]["expected_normalized"] == pytest.approx(one[1]["expected_normalized"])


def test_fraud_results_deterministic():
    g = np.random.default_rng(0)
    lam = Constant(20.0, 1.0)
    train = [simulate_scored(lam, Exponential(1.0), g, 0.2, 0.2, Lomax(2.0, 5.0)) for _ in range(5)]
    test = [simulate_scored(lam, Exponential(1.0), g, 0.2, 0.2, Lomax(2.0, 5.0)) for _ in range(3)]
    a = fraud_results(train, test, 2, 1.0)
    b = fraud_results(train, test, 2, 1.0)
    assert a.keys() == b.keys()
    for k in a:
        np.testing.assert_array_equal(np.array(a[k], float), np.array(b[k], float))
    with pytest.raises(ValueError):
        fraud_results(train, test, 0, 1.0)


def test_single_test_realization_gives_nan_stderr():
    rows = run_convergence(ExperimentConfig(M_list=(3,), M_prime=1, n_list=(1,)))
    assert math.isnan(rows[0]["stderr"])
