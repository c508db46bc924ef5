import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rareber.channel import (
    ChannelConfig,
    Residual,
    ScaleParams,
    TiltParams,
    apply_awgn,
    log_weight_scale,
    log_weight_tilt,
    sigma2_from_snr,
)


def _logpdf(y, mean, var):
    return stats.norm.logpdf(y, loc=mean, scale=np.sqrt(var)).sum(axis=-1)


def test_sigma2_from_snr():
    assert sigma2_from_snr(0) == 0.5
    assert sigma2_from_snr(10) == pytest.approx(0.05, rel=1e-15)
    assert sigma2_from_snr(25) == pytest.approx(0.5 * 10**-2.5, rel=1e-15)
    assert sigma2_from_snr(25) == pytest.approx(1.5811e-3, abs=1e-7)
    assert ChannelConfig.from_snr(10).sigma2 == sigma2_from_snr(10)
    with pytest.raises(ValueError):
        sigma2_from_snr(np.inf)


def test_apply_awgn():
    x = np.array([1.0, -1.0, 0.5])
    np.testing.assert_array_equal(apply_awgn(x, np.zeros(3)), x)
    e = np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(apply_awgn(np.zeros(3), e), e)
    a, b = np.array([0.3, -0.1, 2.0]), np.array([1.0, 1.0, -4.0])
    np.testing.assert_allclose(apply_awgn(x, a) + b - x, a + b)
    with pytest.raises(ValueError):
        apply_awgn(x, np.zeros(2))


def test_tilt_weight_examples():
    assert log_weight_tilt(np.array([0.7, -2.0]), np.zeros(2), 0.3) == 0.0
    assert log_weight_tilt(np.array([1.0]), np.array([1.0]), 1.0) == pytest.approx(-0.5)
    direct = _logpdf(np.array([1.0]), 0.0, 1.0) - _logpdf(np.array([1.0]), 1.0, 1.0)
    assert direct == pytest.approx(-0.5)


def test_scale_weight_examples():
    r = np.array([2.0])  # |r|^2 = 4
    assert log_weight_scale(r, 4.0, 1.0) == pytest.approx(np.log(2) - 1.5)
    assert np.exp(log_weight_scale(r, 4.0, 1.0)) == pytest.approx(0.4463, abs=1e-4)
    direct = _logpdf(r, 0.0, 1.0) - _logpdf(r, 0.0, 4.0)
    assert direct == pytest.approx(np.log(2) - 1.5)
    for eps in (1e-3, 1e-6, 1e-9):
        assert abs(log_weight_scale(r, 1 + eps, 1.0)) < 10 * eps


def test_weights_match_log_density_oracle():
    rng = np.random.default_rng(0)
    for _ in range(10_000 // 100):
        n = rng.integers(1, 9)
        sigma2 = rng.uniform(1e-3, 2.0)
        r = rng.normal(scale=np.sqrt(sigma2) * 3, size=(100, n))
        theta = rng.normal(scale=np.sqrt(sigma2) * 3, size=n)
        c = rng.uniform(1.01, 50)
        direct_tilt = _logpdf(r, 0, sigma2) - _logpdf(r, theta, sigma2)
        direct_scale = _logpdf(r, 0, sigma2) - _logpdf(r, 0, c * sigma2)
        np.testing.assert_allclose(log_weight_tilt(r, theta, sigma2), direct_tilt, rtol=0, atol=1e-10 * max(1, np.abs(direct_tilt).max() / 1e3))
        np.testing.assert_allclose(log_weight_scale(r, c, sigma2, n), direct_scale, rtol=0, atol=1e-10 * max(1, np.abs(direct_scale).max() / 1e3))


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6), st.randoms())
def test_scale_weight_depends_only_on_norm(values, rnd):
    r = np.array(values)
    perm = r.copy()
    rnd.shuffle(perm)
    assert log_weight_scale(perm, 3.0, 0.7) == pytest.approx(log_weight_scale(r, 3.0, 0.7), rel=1e-12, abs=1e-12)


def test_residual_caches_squared_norm():
    res = Residual.of([1.0, 2.0, 3.0], [0.5, 0.0, -1.0])
    assert res.r2 == pytest.approx(float(np.sum(res.r**2)), rel=1e-12)
    assert log_weight_scale(res, 2.0, 0.5) == log_weight_scale(res.r, 2.0, 0.5)
    assert log_weight_tilt(res, TiltParams([0.1, 0.2, 0.3]), 0.5) == log_weight_tilt(res.r, [0.1, 0.2, 0.3], 0.5)


def test_param_invariants():
    with pytest.raises(ValueError):
        ScaleParams(1.05, 0.1)
    with pytest.raises(ValueError):
        ScaleParams(2.0, 0.0)
    with pytest.raises(ValueError):
        TiltParams([np.nan])
    assert ScaleParams(1.1, 0.1).c == 1.1


@pytest.mark.parametrize("kind", ["tilt", "scale"])
def test_weights_have_unit_mean_under_proposal(kind):
    rng = np.random.default_rng(1)
    n, sigma2, N = 3, 0.4, 100_000
    if kind == "tilt":
        theta = np.array([0.5, -0.2, 0.3])
        r = theta + np.sqrt(sigma2) * rng.standard_normal((N, n))
        w = np.exp(log_weight_tilt(r, theta, sigma2))
    else:
        c = 1.5
        r = np.sqrt(c * sigma2) * rng.standard_normal((N, n))
        w = np.exp(log_weight_scale(r, c, sigma2))
    assert abs(w.mean() - 1) <= 4 * w.std(ddof=1) / np.sqrt(N)
