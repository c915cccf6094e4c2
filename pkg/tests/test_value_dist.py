import math

import numpy as np
import pytest
from scipy import integrate

from npsa.value_dist import Empirical, Exponential, Lomax, from_spec

EXP = Exponential(5.0)
LOMAX = Lomax(3.5, 5.0)


def test_exponential_cdf_values():
    assert EXP.cdf(0.0) == 0.0
    assert EXP.cdf(5.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert float(EXP.cdf(5.0)) == pytest.approx(0.63212, abs=1e-5)


def test_lomax_cdf_value():
    assert LOMAX.cdf(5.0) == pytest.approx(1 - 2 ** -3.5, abs=1e-12)
    assert float(LOMAX.cdf(5.0)) == pytest.approx(0.91161, abs=1e-5)


def test_phi_exact_values():
    assert EXP.phi_exact(0.0) == pytest.approx(5.0)
    assert EXP.phi_exact(5.0) == pytest.approx(5 * math.exp(-1), abs=1e-12)
    assert LOMAX.phi_exact(0.0) == pytest.approx(2.0, abs=1e-12)


def test_lomax_phi_matches_published_form():
    a, xi = 3.5, 5.0
    z = np.linspace(0, 50, 101)
    published = (xi ** a * z + xi ** (a + 1)) / ((a - 1) * (xi + z) ** a)
    np.testing.assert_allclose(LOMAX.phi_exact(z), published, rtol=1e-12)


@pytest.mark.parametrize("dist", [EXP, LOMAX, Exponential(0.3), Lomax(1.5, 50.0)])
@pytest.mark.parametrize("y", [0.0, 0.5, 2.0, 10.0])
def test_phi_is_tail_integral_of_survival(dist, y):
    # on a finite window: int_y^U (1 - F) = phi(y) - phi(U)
    for U in (y + 1.0, y + 20.0, y + 400.0):
        val, _ = integrate.quad(lambda x: float(dist.sf(x)), y, U, limit=200,
                                epsabs=1e-13, epsrel=1e-13)
        assert abs(float(dist.phi_exact(y) - dist.phi_exact(U)) - val) < 1e-8


def test_phi_tail_truncation():
    # exponential tail below 1e-12 past mu * ln(1e12)
    U = 5.0 * math.log(1e12)
    val, _ = integrate.quad(lambda x: float(EXP.sf(x)), 0.0, U, limit=200, epsabs=1e-13)
    assert abs(EXP.phi_exact(0.0) - val) < 1e-8


@pytest.mark.parametrize("dist", [EXP, LOMAX])
def test_phi_nonincreasing_convex(dist):
    y = np.linspace(0, 60, 2001)
    p = dist.phi_exact(y)
    assert np.all(np.diff(p) <= 0)
    assert np.all(np.diff(p, 2) >= -1e-10)


@pytest.mark.parametrize("dist", [EXP, LOMAX, Empirical([1.0, 2.0, 2.0, 7.0])])
def test_cdf_monotone_bounded(dist):
    z = np.linspace(0, 100, 1001)
    c = dist.cdf(z)
    assert np.all(np.diff(c) >= 0)
    assert np.all((c >= 0) & (c <= 1))
    assert dist.cdf(1e9) == pytest.approx(1.0)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        EXP.cdf(-1.0)
    with pytest.raises(ValueError):
        LOMAX.phi_exact(-0.1)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        Exponential(0.0)
    with pytest.raises(ValueError):
        Lomax(1.0, 5.0)
    with pytest.raises(ValueError):
        Lomax(3.5, -1.0)
    with pytest.raises(ValueError):
        Empirical([-1.0, 2.0])
    with pytest.raises(ValueError):
        Empirical([])


def test_empirical_has_no_closed_form_phi():
    with pytest.raises(TypeError):
        Empirical([1.0, 2.0]).phi_exact(0.0)


def test_empirical_sorted_and_single_atom():
    d = Empirical([3.0, 1.0, 2.0])
    assert list(d.samples) == [1.0, 2.0, 3.0]
    rng = np.random.default_rng(0)
    assert np.all(Empirical([7.0]).sample(rng, 100) == 7.0)


def test_exponential_sample_mean():
    n = 200_000
    x = EXP.sample(np.random.default_rng(1), n)
    assert np.all(x >= 0)
    assert abs(x.mean() - 5.0) < 3 * 5.0 / math.sqrt(n)


def test_lomax_sample_mean():
    # mean xi/(alpha-1) = 2, checked against quadrature of the survival function
    quad_mean, _ = integrate.quad(lambda x: float(LOMAX.sf(x)), 0, np.inf)
    assert quad_mean == pytest.approx(2.0, rel=1e-8)
    x = LOMAX.sample(np.random.default_rng(2), 400_000)
    # Lomax(3.5) has finite variance xi^2 a / ((a-1)^2 (a-2)) = 25*3.5/(6.25*1.5)
    sd = math.sqrt(25 * 3.5 / (6.25 * 1.5))
    assert abs(x.mean() - 2.0) < 4 * sd / math.sqrt(x.size)


@pytest.mark.parametrize("dist", [EXP, LOMAX])
def test_ks_against_analytic_cdf(dist):
    n = 100_000
    x = np.sort(dist.sample(np.random.default_rng(3), n))
    F = dist.cdf(x)
    i = np.arange(1, n + 1)
    D = max(np.max(i / n - F), np.max(F - (i - 1) / n))
    assert D < 1.628 / math.sqrt(n)  # 1% critical value


def test_sampling_deterministic():
    a = LOMAX.sample(np.random.default_rng(9), 10)
    b = LOMAX.sample(np.random.default_rng(9), 10)
    assert np.array_equal(a, b)


def test_tail_mean_decomposition():
    y = np.array([0.0, 1.0, 5.0, np.inf])
    H = EXP.tail_mean(y)
    np.testing.assert_allclose(H[:3], (y[:3] + 5.0) * np.exp(-y[:3] / 5.0), rtol=1e-12)
    assert H[3] == 0.0


def test_from_spec():
    assert from_spec("exponential", mu=2) == Exponential(2.0)
    assert from_spec("lomax", alpha=2, xi=3) == Lomax(2.0, 3.0)
    with pytest.raises(ValueError):
        from_spec("gamma")
