import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from xrtraffic import FrameTrace, TraceMeta, diff_series, synth_trace, windowed_mean
from xrtraffic.errors import InsufficientDataError, RangeError, StabilityError
from xrtraffic.stats import autocorr
from xrtraffic.trace import synth_diff_acf1

META = TraceMeta("test", 30e6, 60.0, "t0")

sizes_strategy = arrays(float, st.integers(2, 200), elements=st.floats(1.0, 1e6))


def mk(sizes, meta=META):
    return FrameTrace(meta, np.asarray(sizes, dtype=float))


def test_meta_expected_frame_size():
    # 30 Mb/s at 60 fps is 62.5 kB per frame
    assert META.expected_frame_bytes == 62500.0
    assert META.frame_interval == pytest.approx(1 / 60)


@pytest.mark.parametrize("rate,fps", [(0, 60), (30e6, 0), (-1, 60), (np.nan, 60)])
def test_meta_rejects_bad_rates(rate, fps):
    with pytest.raises(ValueError):
        TraceMeta("x", rate, fps)


@pytest.mark.parametrize("sizes", [[], [1.0, 0.0], [1.0, -3.0], [1.0, np.inf], [[1.0, 2.0]]])
def test_trace_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        FrameTrace(META, np.array(sizes, dtype=float))


def test_trace_is_immutable():
    tr = mk([1.0, 2.0])
    with pytest.raises(ValueError):
        tr.sizes[0] = 5.0


def test_nominal_times():
    tr = mk([1.0, 2.0, 3.0])
    np.testing.assert_allclose(tr.nominal_times, [0, 1 / 60, 2 / 60])


@pytest.mark.parametrize("sizes,T,expected", [
    ([10, 20, 30], 1, [10, 20, 30]),
    ([10, 20, 30], 3, [20]),
    ([10, 20, 30, 40], 2, [15, 25, 35]),
])
def test_windowed_mean_examples(sizes, T, expected):
    np.testing.assert_allclose(windowed_mean(mk(sizes), T).values, expected, rtol=1e-15)


def test_windowed_mean_range_error():
    with pytest.raises(RangeError, match="T=4"):
        windowed_mean(mk([1, 2, 3]), 4)
    with pytest.raises(RangeError):
        windowed_mean(mk([1, 2, 3]), 0)


def test_windowed_mean_long_window_matches_loop():
    # cumulative-sum path vs a plain loop
    rng = np.random.default_rng(1)
    x = rng.uniform(5e4, 8e4, 5000)
    T = 1000
    loop = np.array([x[i:i + T].mean() for i in range(x.size - T + 1)])
    np.testing.assert_allclose(windowed_mean(mk(x), T).values, loop, rtol=1e-12)


@given(sizes_strategy)
def test_windowed_mean_identity_at_one(x):
    out = windowed_mean(mk(x), 1).values
    assert np.array_equal(out, x)


@given(sizes_strategy, st.data())
def test_windowed_mean_bounds(x, data):
    T = data.draw(st.integers(1, x.size))
    out = windowed_mean(mk(x), T).values
    assert out.size == x.size - T + 1
    tol = 1e-12 * x.max()
    assert x.min() - tol <= out.mean() <= x.max() + tol


@pytest.mark.parametrize("sizes,expected", [
    ([5, 5, 5], [0, 0]),
    ([1, 2, 1, 2], [1, -1, 1]),
    ([62500, 70000], [7500]),
])
def test_diff_examples(sizes, expected):
    assert np.array_equal(diff_series(mk(sizes)), np.array(expected, dtype=float))


def test_diff_too_short():
    with pytest.raises(InsufficientDataError):
        diff_series(mk([1.0]))


@given(sizes_strategy)
def test_diff_sum_conserved(x):
    d = diff_series(mk(x))
    assert d.sum() == pytest.approx(x[-1] - x[0], abs=1e-9 * x.max() * x.size)


def test_synth_noiseless_is_exact_cbr():
    tr = synth_trace(META, 500)
    assert np.all(tr.sizes == META.expected_frame_bytes)


def test_synth_deterministic():
    a = synth_trace(META, 1000, 5000, -0.4, seed=7)
    b = synth_trace(META, 1000, 5000, -0.4, seed=7)
    c = synth_trace(META, 1000, 5000, -0.4, seed=8)
    assert a == b
    assert not np.array_equal(a.sizes, c.sizes)


def test_synth_diff_acf_closed_form():
    # oracle: deviations d_t = a d_{t-1} + e_t give, for D_t = d_t - d_{t-1},
    # gamma_D(1) = 2 gamma(1) - gamma(0) - gamma(2) = -gamma(0) (1 - a)^2,
    # gamma_D(0) = 2 gamma(0) (1 - a), so rho_D(1) = -(1 - a) / 2.
    a = -0.4
    expected = -(1 - a) / 2
    assert synth_diff_acf1(a) == pytest.approx(expected)
    tr = synth_trace(META, 100_000, 3000, a, seed=11)
    r1 = autocorr(diff_series(tr), 1).values[1]
    assert abs(r1 - expected) <= 0.05


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-0.9, 0.0), st.floats(100.0, 8000.0))
def test_synth_mean_within_three_sigma(seed, a, sigma):
    n = 4000
    tr = synth_trace(META, n, sigma, a, seed=seed)
    assert abs(tr.sizes.mean() - META.expected_frame_bytes) <= 3 * sigma / np.sqrt(n)


def test_synth_rejects_unstable_and_bad_args():
    with pytest.raises(StabilityError):
        synth_trace(META, 10, 1.0, 1.0)
    with pytest.raises(RangeError):
        synth_trace(META, 0)
    with pytest.raises(RangeError):
        synth_trace(META, 10, -1.0)
