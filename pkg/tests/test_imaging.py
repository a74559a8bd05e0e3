import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wearnet.errors import BalanceError, FormatError, ShapeError
from wearnet.imaging import (ImageSet, ImagingConfig, balance_classes, balanced_indices, decode_pgm,
                             encode_pgm, image_count, imagify_run, load_dataset, save_dataset,
                             signal_to_image, snapshot_windows)
from wearnet.ingest import DegradationProfile, synth_run
from wearnet.labeling import label_run


def test_two_by_two_example():
    np.testing.assert_array_equal(signal_to_image([0, 1, 2, 3], 2), [[0, 85], [170, 255]])


def test_constant_window_is_black():
    img = signal_to_image(np.full(16, 3.7), 4)
    assert img.dtype == np.uint8 and not img.any()


def test_rounding_is_half_away_from_zero():
    # (1/2) * 255 = 127.5 -> 128
    np.testing.assert_array_equal(signal_to_image([0, 1, 0.5, 0], 2), [[0, 255], [128, 0]])


def test_row_major_fill():
    img = signal_to_image(np.arange(9.0), 3)
    assert img[0, 2] < img[1, 0] and img[2, 2] == 255 and img[0, 0] == 0


def test_image_count():
    assert image_count(20480, 64, 64) == 257
    assert image_count(4096, 64, 64) == 1
    assert image_count(4095, 64, 64) == 0
    assert image_count(100, 4, 10) == 9


def test_windows_are_strided(rng):
    x = rng.normal(size=50)
    w = snapshot_windows(x, 3, 7)
    assert w.shape == (image_count(50, 3, 7), 9)
    for i, row in enumerate(w):
        np.testing.assert_array_equal(row, x[7 * i:7 * i + 9])


def test_window_size_mismatch():
    with pytest.raises(ShapeError):
        signal_to_image(np.zeros(10), 3)
    with pytest.raises(ShapeError):
        ImagingConfig(64, 64).validate(4000)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 16, elements=st.floats(-1e6, 1e6)), st.floats(0.1, 10), st.floats(-1e3, 1e3))
def test_affine_invariance_and_range(x, a, b):
    img = signal_to_image(x, 4)
    if np.ptp(x) > 1e-6 * max(1.0, np.abs(x).max()):
        assert img.min() == 0 and img.max() == 255
        ref = (x - x.min()) / np.ptp(x) * 255
        assert np.max(np.abs(img.ravel() - ref)) <= 0.5 + 1e-9
        np.testing.assert_allclose(signal_to_image(a * x + b, 4).astype(int), img.astype(int), atol=1)


def test_balance_to_smallest_class(rng):
    labels = np.repeat([0, 1, 2], [10, 4, 7])
    idx = balanced_indices(labels, 3, seed=0)
    assert np.bincount(labels[idx]).tolist() == [4, 4, 4]
    assert np.all(np.diff(idx) > 0)
    np.testing.assert_array_equal(idx, balanced_indices(labels, 3, seed=0))
    assert set(np.flatnonzero(labels == 1)) <= set(idx)


def test_balance_reference_class_sizes():
    sizes = [139520, 26368, 29440, 13056, 27648, 9984, 5888]
    labels = np.repeat(np.arange(7), sizes)
    idx = balanced_indices(labels, 7, seed=3)
    assert np.bincount(labels[idx]).tolist() == [5888] * 7
    assert len(idx) == 41216


def test_balance_requires_every_class():
    with pytest.raises(BalanceError):
        balanced_indices(np.array([0, 0, 2]), 3, 0)


def test_pgm_round_trip(rng):
    img = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
    data = encode_pgm(img)
    assert data.startswith(b"P5\n7 5\n255\n") and len(data) == 11 + 35
    np.testing.assert_array_equal(decode_pgm(data), img)


def test_pgm_header_comments_and_errors():
    img = decode_pgm(b"P5 # comment\n2 1\n# another\n255\n\x01\x02")
    np.testing.assert_array_equal(img, [[1, 2]])
    with pytest.raises(FormatError):
        decode_pgm(b"P2\n1 1\n255\n\x00")
    with pytest.raises(FormatError):
        decode_pgm(b"P5\n2 2\n255\n\x00")


def _small_run():
    prof = DegradationProfile(snapshots=14, samples_per_snapshot=64, carrier_cycles=4, levels=7)
    series = synth_run(prof, 0)
    return series, label_run(series.data.std(axis=1), K=7)


def test_imagify_run_provenance():
    series, lab = _small_run()
    ds = imagify_run(series, lab, ImagingConfig(4, 16))
    per = image_count(64, 4, 16)
    assert len(ds) == 14 * per
    assert ds.pixels.shape[1:] == (4, 4)
    np.testing.assert_array_equal(ds.labels, np.repeat(lab.assignment, per))
    assert ds.keys()[per] == (series.names[1], 0)
    np.testing.assert_array_equal(ds.pixels[per + 1], signal_to_image(series.data[1, 16:32], 4))


def test_dataset_save_load_round_trip(tmp_path):
    series, lab = _small_run()
    ds = balance_classes(imagify_run(series, lab, ImagingConfig(4, 16)), seed=0)
    manifest = save_dataset(ds, tmp_path / "imgs")
    header = manifest.read_text().splitlines()[0]
    assert header == "path,label,snapshot,sub_index"
    back = load_dataset(manifest, n_classes=7)
    np.testing.assert_array_equal(back.pixels, ds.pixels)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.keys() == ds.keys()


def test_imageset_rejects_bad_labels():
    with pytest.raises(Exception):
        ImageSet(np.zeros((1, 2, 2)), [3], ["a"], [0], 3)
