"""Histogram cue features: mass conservation, layout, counting-oracle equality."""

import math

import numpy as np
import pytest

from spixtrack.errors import DegenerateRegionError, ParameterError
from spixtrack.features import (
    channel_histogram,
    flatten,
    patch_feature_batch,
    superpixel_features,
    unflatten,
)
from spixtrack.media import ImageRGB, Patch, rgb_to_hsi
from spixtrack.motion import AffineState
from spixtrack.snic import segment

from synthetic import random_patch


def counting_oracle(values, n_bins):
    """Brute-force per-value binning with the same floor rule."""
    counts = [0] * n_bins
    for v in values:
        counts[min(int(math.floor(v * n_bins)), n_bins - 1)] += 1
    return np.array(counts, dtype=np.float64) / len(values)


class TestChannelHistogram:
    def test_all_zero_values_single_bin(self):
        np.testing.assert_array_equal(
            channel_histogram([0.0] * 20, 8), [1, 0, 0, 0, 0, 0, 0, 0]
        )

    def test_five_of_twenty_in_bin_three(self):
        values = [0.4] * 5 + [0.9] * 15  # 0.4*8 = 3.2 -> bin 3
        hist = channel_histogram(values, 8)
        assert hist[3] == 5 / 20

    def test_matches_counting_oracle_exactly(self, rng):
        values = rng.random(100)
        np.testing.assert_array_equal(channel_histogram(values, 8), counting_oracle(values, 8))

    def test_last_bin_closed_at_one(self):
        hist = channel_histogram([1.0, 0.999999], 4)
        assert hist[3] == 1.0

    def test_permutation_invariance(self, rng):
        values = rng.random(50)
        shuffled = values.copy()
        rng.shuffle(shuffled)
        np.testing.assert_array_equal(
            channel_histogram(values, 8), channel_histogram(shuffled, 8)
        )

    def test_mass_conservation_random_regions(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 400))
            bins = int(rng.integers(1, 20))
            hist = channel_histogram(rng.random(n), bins)
            assert abs(hist.sum() - 1.0) < 1e-12
            assert (hist >= 0).all()

    def test_locality_single_value_change(self, rng):
        values = rng.random(64)
        changed = values.copy()
        changed[10] = rng.random()
        diff = channel_histogram(values, 8) - channel_histogram(changed, 8)
        nonzero = np.nonzero(diff)[0]
        assert len(nonzero) <= 2
        assert np.abs(diff).max() <= 1 / 64 + 1e-15

    def test_empty_region_rejected(self):
        with pytest.raises(DegenerateRegionError):
            channel_histogram([], 8)

    def test_bad_bins_rejected(self):
        with pytest.raises(ParameterError):
            channel_histogram([0.5], 0)


def make_patch(data):
    rgb = ImageRGB(data)
    h, w = data.shape[:2]
    return Patch(rgb=rgb, hsi=rgb_to_hsi(rgb), source_state=AffineState((w - 1) / 2, (h - 1) / 2))


class TestSuperpixelFeatures:
    def test_uniform_gray_region_one_hot_columns(self, rng):
        patch = make_patch(np.full((16, 16, 3), 0.5))
        labels = segment(patch, 4, 20.0)
        fm = superpixel_features(patch, labels, 0, 8)
        assert fm.shape == (8, 8)
        # H (sat 0 -> hue 0) and S land in bin 0; I, R, G, B land in bin 4
        for col, bin_idx in ((0, 0), (1, 0), (2, 4), (3, 4), (4, 4), (5, 4)):
            expected = np.zeros(8)
            expected[bin_idx] = 1.0
            np.testing.assert_array_equal(fm[:, col], expected)

    def test_leftmost_column_region_x_one_hot(self):
        data = np.full((32, 32, 3), 0.25)
        patch = make_patch(data)

        class FakeLabels:
            labels = np.where(np.arange(32)[None, :] == 0, 0, 1).repeat(32, axis=0).reshape(32, 32)
            k = 2

        fm = superpixel_features(patch, FakeLabels, 0, 8)
        x_col = fm[:, 6]
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_array_equal(x_col, expected)

    def test_columns_equal_per_channel_histograms(self, rng):
        patch = random_patch(rng, 16, 16)
        labels = segment(patch, 5, 20.0)
        region = 2
        mask = labels.labels == region
        ys, xs = np.nonzero(mask)
        channels = [
            patch.hsi.data[:, :, 0][mask],
            patch.hsi.data[:, :, 1][mask],
            patch.hsi.data[:, :, 2][mask],
            patch.rgb.data[:, :, 0][mask],
            patch.rgb.data[:, :, 1][mask],
            patch.rgb.data[:, :, 2][mask],
            xs / 15.0,
            ys / 15.0,
        ]
        fm = superpixel_features(patch, labels, region, 8)
        for col, values in enumerate(channels):
            np.testing.assert_array_equal(fm[:, col], channel_histogram(values, 8))

    def test_bad_region_id(self, rng):
        patch = random_patch(rng, 8, 8)
        labels = segment(patch, 3, 20.0)
        with pytest.raises(ParameterError):
            superpixel_features(patch, labels, 5, 8)


class TestFlatten:
    def test_layout_first_column_first(self):
        fm = np.zeros((2, 8))
        fm[:, 0] = (1.0, 0.0)
        fm[:, 1] = (0.25, 0.75)
        vec = flatten(fm)
        np.testing.assert_array_equal(vec[:4], [1.0, 0.0, 0.25, 0.75])

    def test_round_trip(self, rng):
        fm = rng.random((8, 8))
        np.testing.assert_array_equal(unflatten(flatten(fm), 8), fm)

    def test_length_is_bins_times_cues(self, rng):
        assert flatten(rng.random((8, 8))).size == 64

    def test_vector_mass_equals_cue_count(self, rng):
        patch = random_patch(rng, 16, 16)
        labels = segment(patch, 6, 20.0)
        vec = flatten(superpixel_features(patch, labels, 1, 8))
        assert abs(vec.sum() - 8.0) < 1e-10


class TestPatchFeatureBatch:
    def test_matches_per_region_path_exactly(self, rng):
        patch = random_patch(rng, 16, 16)
        labels = segment(patch, 6, 20.0)
        batch = patch_feature_batch(patch, labels, 8)
        assert batch.shape == (64, 6)
        for region in range(6):
            expected = flatten(superpixel_features(patch, labels, region, 8))
            np.testing.assert_array_equal(batch[:, region], expected)
