import math

import numpy as np
import pytest
from scipy import stats

from robustmmv.loss import (HuberLoss, LeastSquaresLoss, chi2_2_cdf, chi2_4_cdf, consistency_factor,
                            csign, threshold_from_quantile)

C = 1.269


@pytest.fixture
def huber():
    return HuberLoss(C)


def cn(rng, size, scale=1.0):
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def test_rho_examples(huber):
    c = huber.c
    assert huber.rho(0) == 0
    assert huber.rho(2 * c * np.exp(0.3j)) == pytest.approx(3 * c * c)
    assert huber.rho(c) == pytest.approx(c * c)
    assert huber.rho(c * (1 + 1e-12)) == pytest.approx(c * c)
    assert LeastSquaresLoss().rho(3 + 4j) == 25


def test_psi_examples(huber):
    c = huber.c
    assert huber.psi(0) == 0
    z = (c / 2) * np.exp(1j * np.pi / 3)
    assert huber.psi(z) == pytest.approx(z)
    assert huber.psi(5j * c) == pytest.approx(1j * c)
    assert csign(0) == 0


def test_chi_and_weight_examples(huber):
    c = huber.c
    assert huber.chi(0) == 0
    assert huber.chi(3 * c) == pytest.approx(c * c)
    assert LeastSquaresLoss().chi(1 + 2j) == pytest.approx(5)
    assert huber.weight(0.5 * c) == 1
    assert huber.weight(2 * c * 1j) == pytest.approx(0.5)
    assert huber.weight(0) == 1


def test_huber_rejects_bad_threshold():
    for c in (0, -1, math.inf, math.nan):
        with pytest.raises(ValueError):
            HuberLoss(c)


def test_threshold_from_quantile():
    assert threshold_from_quantile(0.8) == pytest.approx(1.269, abs=1e-3)
    assert threshold_from_quantile(1 - math.exp(-1)) == pytest.approx(1.0, abs=1e-15)
    assert threshold_from_quantile(1 - 1e-12) > 5
    # 2c^2 is the q-quantile of chi2 with 2 dof
    for q in (0.1, 0.5, 0.8, 0.95):
        c = threshold_from_quantile(q)
        assert 2 * c * c == pytest.approx(stats.chi2.ppf(q, 2))
    for q in (0, 1, -0.1, 1.5):
        with pytest.raises(ValueError):
            threshold_from_quantile(q)


def test_closed_form_cdfs_match_scipy():
    x = np.linspace(0, 30, 61)
    np.testing.assert_allclose(chi2_2_cdf(x), stats.chi2.cdf(x, 2), atol=1e-14)
    np.testing.assert_allclose(chi2_4_cdf(x), stats.chi2.cdf(x, 4), atol=1e-14)


def test_consistency_factor_limits():
    assert consistency_factor(50.0).beta == pytest.approx(1.0)
    assert consistency_factor(1e-4).beta < 1e-7
    f = consistency_factor(C)
    assert f.alpha == f.beta
    assert f.beta == pytest.approx(0.800, abs=2e-3)


def test_consistency_factor_quadrature():
    # E[min(|e|, c)^2] with |e|^2 ~ Exp(1)
    from scipy.integrate import quad
    for c in (0.5, 1.0, 1.269, 2.0, 3.0):
        val = (quad(lambda t: t * math.exp(-t), 0, c * c, epsabs=1e-14)[0]
               + quad(lambda t: c * c * math.exp(-t), c * c, math.inf, epsabs=1e-14)[0])
        assert consistency_factor(c).beta == pytest.approx(val, rel=1e-10)


def test_consistency_factor_monte_carlo(huber):
    rng = np.random.default_rng(11)
    chi = huber.chi(cn(rng, 1_000_000))
    se = chi.std(ddof=1) / math.sqrt(chi.size)
    assert abs(chi.mean() - consistency_factor(C).beta) <= 3 * se


def test_circular_symmetry(huber, rng):
    e = cn(rng, 1000, scale=3)
    rot = np.exp(1j * rng.uniform(0, 2 * np.pi, 1000))
    np.testing.assert_allclose(huber.rho(rot * e), huber.rho(e), rtol=1e-13)


def test_rho_increasing_in_modulus(huber):
    r = np.linspace(1e-6, 10, 10_001)
    assert np.all(np.diff(huber.rho(r)) > 0)


def test_convexity_midpoint(huber, rng):
    x, y = cn(rng, 10_000, 3), cn(rng, 10_000, 3)
    lhs = huber.rho((x + y) / 2)
    rhs = (huber.rho(x) + huber.rho(y)) / 2
    assert np.all(lhs <= rhs + 1e-12)


def wirtinger_fd(f, e, h=1e-6):
    dr = (f(e + h) - f(e - h)) / (2 * h)
    di = (f(e + 1j * h) - f(e - 1j * h)) / (2 * h)
    return 0.5 * (dr + 1j * di)


@pytest.mark.parametrize("loss", [HuberLoss(C), HuberLoss(0.3), LeastSquaresLoss()])
def test_psi_is_wirtinger_gradient(loss, rng):
    e = cn(rng, 2000, scale=3)
    e = e[np.abs(np.abs(e) - loss.c) >= 1e-3]
    np.testing.assert_allclose(wirtinger_fd(loss.rho, e), loss.psi(e), atol=1e-5, rtol=0)


def test_psi_is_weight_times_residual(huber, rng):
    e = np.concatenate([cn(rng, 1000, 3), [0, huber.c, -huber.c * 1j]])
    np.testing.assert_allclose(huber.psi(e), huber.weight(e) * e, rtol=1e-14, atol=0)


def test_chi_is_squared_psi_modulus(huber, rng):
    e = cn(rng, 1000, 3)
    np.testing.assert_allclose(huber.chi(e), np.abs(huber.psi(e)) ** 2, rtol=1e-13)


def test_least_squares_is_infinite_threshold_limit(rng):
    e = cn(rng, 100, 3)
    big, ls = HuberLoss(1e8), LeastSquaresLoss()
    np.testing.assert_allclose(big.rho(e), ls.rho(e))
    np.testing.assert_allclose(big.psi(e), ls.psi(e))
    np.testing.assert_allclose(big.weight(e), ls.weight(e))
    assert ls.consistency().alpha == 1.0
