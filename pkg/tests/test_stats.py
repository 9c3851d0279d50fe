import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from xrtraffic import FrameTrace, TraceMeta, diff_series, synth_trace
from xrtraffic.errors import DegenerateSeriesError, InsufficientDataError
from xrtraffic.stats import (
    autocorr,
    empirical_ccdf,
    empirical_cdf,
    nearest_rank,
    overflow_report,
    rate_series,
    rolling_autocorr,
)

META = TraceMeta("test", 30e6, 60.0, "t0")


def naive_acf(x, max_lag):
    # textbook biased estimator, written out term by term
    x = np.asarray(x, dtype=float)
    n = x.size
    m = sum(x) / n
    den = sum((v - m) ** 2 for v in x)
    return np.array([sum((x[t] - m) * (x[t + k] - m) for t in range(n - k)) / den for k in range(max_lag + 1)])


def test_rate_of_constant_cbr_trace():
    tr = FrameTrace(META, np.full(100, 62500.0))
    assert np.all(rate_series(tr, 1) == 30e6)
    assert np.all(rate_series(tr, 7) == 30e6)


def test_rate_unit_conversion():
    # 50000 B * 60 /s * 8 = 24 Mb/s, 75000 B -> 36 Mb/s
    tr = FrameTrace(META, np.array([50000.0, 75000.0]))
    np.testing.assert_allclose(rate_series(tr, 1), [24e6, 36e6], rtol=1e-15)


def test_rate_mean_nearly_independent_of_window():
    tr = synth_trace(META, 6000, 5000, -0.3, seed=2)
    base = rate_series(tr, 1).mean()
    for T in (6, 60):
        assert abs(rate_series(tr, T).mean() - base) / base < T / len(tr)


def test_nearest_rank_convention():
    x = np.arange(1.0, 101.0)
    assert nearest_rank(x, 0.95) == 95.0
    assert nearest_rank(x, 0.99) == 99.0
    assert nearest_rank([3.0, 1.0, 2.0], 0.5) == 2.0
    assert nearest_rank([5.0], 0.01) == 5.0


def test_cdf_small_examples():
    cdf = empirical_cdf([1, 1, 2])
    assert cdf(1) == pytest.approx(2 / 3)
    assert cdf(2) == 1.0
    assert cdf(0.999) == 0.0
    assert cdf(1.5) == pytest.approx(2 / 3)
    one = empirical_cdf([4.2])
    assert one(4.1999) == 0.0 and one(4.2) == 1.0


def test_ccdf_complements_cdf():
    x = np.random.default_rng(0).normal(size=200)
    grid = np.linspace(-3, 3, 41)
    np.testing.assert_allclose(empirical_ccdf(x)(grid), 1 - empirical_cdf(x)(grid), atol=1e-15)


def test_cdf_empty():
    with pytest.raises(InsufficientDataError):
        empirical_cdf([])


def test_cdf_dkw_bound():
    # DKW: P(sup|F_n - F| > eps) <= 2 exp(-2 n eps^2); eps = 0.06 at n = 1000 gives ~1.5e-3
    x = np.random.default_rng(3).uniform(size=1000)
    cdf = empirical_cdf(x)
    s = np.sort(x)
    k = np.arange(1, s.size + 1) / s.size
    dist = max(np.max(np.abs(cdf(s) - s)), np.max(np.abs(k - 1 / s.size - s)))
    assert dist < 0.06


def test_overflow_constant_trace():
    tr = FrameTrace(META, np.full(50, 65000.0))
    rep = overflow_report(tr, 6)
    excess = 65000 * 60 * 8 - 30e6
    assert rep.std_dev == 0.0
    assert rep.p95 == pytest.approx(excess) and rep.p99 == pytest.approx(excess)
    assert rep.window == 6


def test_overflow_percentiles_ordered():
    tr = synth_trace(META, 3000, 6000, -0.4, seed=5)
    for T in (1, 6, 60):
        rep = overflow_report(tr, T)
        assert rep.p99 >= rep.p95


def test_acf_matches_naive_oracle():
    x = np.random.default_rng(9).normal(size=60)
    np.testing.assert_allclose(autocorr(x, 10).values, naive_acf(x, 10), rtol=1e-12, atol=1e-14)


def test_acf_alternating_diff():
    # alternating +-1 series: sum of lag-1 products is -(n-1), denominator n
    n = 1001
    tr = FrameTrace(META, np.tile([1.0, 2.0], 501)[:n + 1])
    d = diff_series(tr)
    r1 = autocorr(d, 1).values[1]
    m = d.mean()
    assert r1 == pytest.approx(naive_acf(d, 1)[1], abs=1e-12)
    assert abs(r1 + 1) < 2 / n + abs(m)


def test_acf_errors():
    with pytest.raises(DegenerateSeriesError):
        autocorr(np.full(10, 3.0), 2)
    with pytest.raises(InsufficientDataError):
        autocorr([1.0, 2.0, 3.0], 3)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(float, st.integers(5, 80), elements=finite), st.integers(0, 4))
def test_acf_properties(x, max_lag):
    assume(np.ptp(x) > 1e-3)
    acf = autocorr(x, max_lag)
    assert acf.values[0] == pytest.approx(1.0)
    assert np.all(np.abs(acf.values) <= 1 + 1e-12)
    np.testing.assert_allclose(autocorr(x[::-1], max_lag).values, acf.values, atol=1e-9)


@given(arrays(float, st.integers(5, 80), elements=finite), st.floats(0.01, 100), st.floats(-1e3, 1e3),
       st.booleans())
def test_acf_affine_invariance(x, a, b, negate):
    assume(np.ptp(x) > 1e-2)
    a = -a if negate else a
    np.testing.assert_allclose(autocorr(a * x + b, 3).values, autocorr(x, 3).values, atol=1e-8)


def test_rolling_single_window_equals_global():
    x = np.random.default_rng(4).normal(size=300)
    roll = rolling_autocorr(x, 300, 17, 5)
    assert roll.matrix.shape == (1, 6)
    np.testing.assert_allclose(roll.matrix[0], autocorr(x, 5).values, rtol=1e-13)


def test_rolling_row_count_and_rows():
    x = np.random.default_rng(6).normal(size=1000)
    roll = rolling_autocorr(x, 200, 60, 4)
    assert roll.matrix.shape[0] == (1000 - 200) // 60 + 1
    for i, s in enumerate(roll.starts):
        np.testing.assert_allclose(roll.matrix[i], autocorr(x[s:s + 200], 4).values, rtol=1e-12, atol=1e-14)


def test_rolling_stationary_close_to_global():
    tr = synth_trace(META, 36000, 5000, -0.4, seed=21)
    d = diff_series(tr)
    # sample-ACF standard error is about 1/sqrt(window); 3000 frames puts 0.1 beyond 5 sigma
    roll = rolling_autocorr(d, 3000, 600, 5)
    glob = autocorr(d, 5).values
    assert np.all(np.abs(roll.matrix - glob) <= 0.1)


def test_rolling_degenerate_window_flagged():
    x = np.concatenate([np.full(100, 5.0), np.random.default_rng(1).normal(size=100)])
    roll = rolling_autocorr(x, 100, 100, 3)
    assert roll.degenerate == (0,)
    assert np.all(np.isnan(roll.matrix[0]))
    assert np.all(np.isfinite(roll.matrix[1]))
