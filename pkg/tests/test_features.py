import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from wearnet.errors import DegenerateStatisticsError, DomainError, ShapeError
from wearnet.features import FeatureSeries, TsfKind, compute_tsf, shannon_entropy, tsf_series

X = [1.0, -2.0, 3.0, -4.0]
RMS_X = math.sqrt(7.5)

# hand-derived values for X (mean -0.5, population variance 6.25)
HAND = {
    TsfKind.RMS: RMS_X,
    TsfKind.KURTOSIS: 1241 / 841,
    TsfKind.SKEWNESS: 0.0,
    TsfKind.PEAK_TO_PEAK: 7.0,
    TsfKind.CREST_FACTOR: 4 / RMS_X,
    TsfKind.SHAPE_FACTOR: RMS_X / 2.5,
    TsfKind.IMPULSE_FACTOR: 1.6,
    TsfKind.MARGIN_FACTOR: 4 / ((1 + math.sqrt(2) + math.sqrt(3) + 2) / 4) ** 2,
}


@pytest.mark.parametrize("kind", list(TsfKind))
def test_hand_computed_values(kind):
    assert compute_tsf(X, kind) == pytest.approx(HAND[kind], rel=1e-12, abs=1e-12)


def test_skewed_vector():
    x = [0.0, 0.0, 0.0, 4.0]
    assert compute_tsf(x, "Skewness") == pytest.approx(2 / math.sqrt(3), rel=1e-12)
    assert compute_tsf(x, "Kurtosis") == pytest.approx(7 / 3, rel=1e-12)


def test_moments_agree_with_scipy(rng):
    for _ in range(20):
        x = rng.standard_gamma(2.0, size=int(rng.integers(5, 500)))
        assert compute_tsf(x, "Kurtosis") == pytest.approx(stats.kurtosis(x, fisher=False, bias=True), rel=1e-10)
        assert compute_tsf(x, "Skewness") == pytest.approx(stats.skew(x, bias=True), rel=1e-10, abs=1e-12)


def test_gaussian_kurtosis_is_three():
    x = np.random.default_rng(7).standard_normal(100_000)
    assert abs(compute_tsf(x, TsfKind.KURTOSIS) - 3.0) < 0.2


def test_kind_parsing():
    assert TsfKind.parse("rms") is TsfKind.RMS
    assert TsfKind.parse("PeakToPeak") is TsfKind.PEAK_TO_PEAK
    with pytest.raises(ValueError):
        TsfKind.parse("variance")


@pytest.mark.parametrize("kind", [TsfKind.KURTOSIS, TsfKind.SKEWNESS, TsfKind.CREST_FACTOR,
                                  TsfKind.SHAPE_FACTOR, TsfKind.IMPULSE_FACTOR, TsfKind.MARGIN_FACTOR])
def test_degenerate_windows(kind):
    x = np.zeros(8) if kind not in (TsfKind.KURTOSIS, TsfKind.SKEWNESS) else np.full(8, 2.5)
    with pytest.raises(DegenerateStatisticsError):
        compute_tsf(x, kind)


def test_empty_window():
    with pytest.raises(ShapeError):
        compute_tsf([], "RMS")


def test_series_error_names_snapshot():
    data = np.ones((3, 10))
    data[0] = np.arange(10)
    with pytest.raises(DegenerateStatisticsError, match="snapshot 1"):
        tsf_series(data, "Kurtosis")


# -- entropy -------------------------------------------------------------------

def test_entropy_examples():
    np.testing.assert_allclose(shannon_entropy([2.0, 2.0], 2), [-2.0], rtol=1e-15)
    np.testing.assert_allclose(shannon_entropy([0.5, 0.5], 2), [0.5], rtol=1e-15)
    np.testing.assert_allclose(shannon_entropy([1.0, 2.0, 4.0], 2), [-1.0, -5.0], rtol=1e-15)


def test_entropy_zero_contributes_nothing():
    np.testing.assert_array_equal(shannon_entropy([0.0, 1.0, 0.0], 3), [0.0])


def test_entropy_errors():
    with pytest.raises(DomainError):
        shannon_entropy([0.1, -0.1], 1)
    with pytest.raises(ShapeError):
        shannon_entropy([0.1, 0.2], 3)


def test_entropy_decreases_with_rms_below_inverse_e():
    # -v log2 v is increasing on (0, 1/e), so a growing RMS trend gives rising entropy;
    # above 1/e the same trend gives falling entropy
    v = np.linspace(0.01, 0.3, 40)
    assert np.all(np.diff(shannon_entropy(v, 4)) > 0)
    assert np.all(np.diff(shannon_entropy(v + 0.5, 4)) < 0)


def test_feature_series_lengths(rng):
    data = rng.standard_normal((20, 64))
    fs = FeatureSeries.from_series(data, "RMS", window_len=16)
    assert fs.values.shape == (20,)
    assert fs.entropy.shape == (5,)
    assert FeatureSeries.from_series(data[:3], "RMS", window_len=16).entropy.size == 0


# -- properties ----------------------------------------------------------------

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
windows = arrays(np.float64, st.integers(4, 64), elements=finite).filter(lambda a: np.ptp(a) > 1e-3)
scales = st.floats(0.01, 100.0)


@settings(max_examples=60, deadline=None)
@given(windows, scales)
def test_scale_behaviour(x, c):
    assert compute_tsf(c * x, "RMS") == pytest.approx(c * compute_tsf(x, "RMS"), rel=1e-9)
    assert compute_tsf(c * x, "PeakToPeak") == pytest.approx(c * compute_tsf(x, "PeakToPeak"), rel=1e-9)
    for kind in ("Kurtosis", "Skewness", "CrestFactor", "ShapeFactor", "ImpulseFactor", "MarginFactor"):
        assert compute_tsf(c * x, kind) == pytest.approx(compute_tsf(x, kind), rel=1e-7, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(windows, st.randoms(use_true_random=False))
def test_permutation_invariance(x, r):
    y = x.copy()
    r.shuffle(y)
    for kind in TsfKind:
        assert compute_tsf(y, kind) == pytest.approx(compute_tsf(x, kind), rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(0, 10)), st.integers(1, 10))
def test_entropy_length_and_values(v, w):
    if w > v.size:
        with pytest.raises(ShapeError):
            shannon_entropy(v, w)
        return
    h = shannon_entropy(v, w)
    assert h.shape == (v.size - w + 1,)
    terms = np.array([-t * math.log2(t) if t > 0 else 0.0 for t in v])
    expected = [terms[j:j + w].mean() for j in range(h.size)]
    np.testing.assert_allclose(h, expected, rtol=1e-9, atol=1e-12)
