"""Superpixel segmentation guarantees: exact count, coverage, connectivity."""

import numpy as np
import pytest
from scipy import ndimage

from spixtrack.errors import ParameterError
from spixtrack.media import ImageRGB, Patch, rgb_to_hsi
from spixtrack.motion import AffineState
from spixtrack.snic import export_boundary_overlay, export_label_map, seed_grid, segment

from synthetic import random_patch

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


def make_patch(data):
    rgb = ImageRGB(data)
    h, w = data.shape[:2]
    return Patch(rgb=rgb, hsi=rgb_to_hsi(rgb), source_state=AffineState((w - 1) / 2, (h - 1) / 2))


def assert_valid_segmentation(label_map, k):
    labels = label_map.labels
    present = np.unique(labels)
    assert len(present) == k, f"expected {k} labels, got {len(present)}"
    assert present.min() == 0 and present.max() == k - 1
    for region in range(k):
        mask = labels == region
        assert mask.any()
        # flood-fill oracle: each region must be one 4-connected component
        _, n_components = ndimage.label(mask, structure=FOUR_CONNECTED)
        assert n_components == 1, f"region {region} splits into {n_components} parts"


class TestSegmentGuarantees:
    def test_constant_patch_gives_spatial_quadrants(self):
        patch = make_patch(np.full((32, 32, 3), 0.5))
        lm = segment(patch, 4, 20.0)
        assert_valid_segmentation(lm, 4)
        sizes = lm.region_sizes()
        assert sizes.min() >= 200 and sizes.max() <= 312  # 256 +/- boundary rounding
        expected_centers = {(8, 8), (24, 8), (8, 24), (24, 24)}
        for cx, cy in lm.centroids:
            assert min(abs(cx - ex) + abs(cy - ey) for ex, ey in expected_centers) < 4.0

    def test_black_white_split_separates_colors(self):
        data = np.zeros((32, 32, 3))
        data[:, 16:] = 1.0
        patch = make_patch(data)
        lm = segment(patch, 2, 20.0)
        assert_valid_segmentation(lm, 2)
        means = lm.mean_colors
        bright = int(means[:, 0].argmax())
        dark = 1 - bright
        # brute-force check: outside a 2-column boundary band, no color mixing
        left = lm.labels[:, :15]
        right = lm.labels[:, 17:]
        assert (left == dark).all()
        assert (right == bright).all()
        np.testing.assert_allclose(means[dark], 0.0, atol=1e-12)
        np.testing.assert_allclose(means[bright], 1.0, atol=1e-12)

    def test_paper_configuration_thirty_regions(self, rng):
        patch = random_patch(rng)
        lm = segment(patch, 30, 20.0)
        assert_valid_segmentation(lm, 30)

    def test_random_patches_all_guarantees(self, rng):
        for _ in range(10):
            patch = random_patch(rng)
            lm = segment(patch, 30, 20.0)
            assert_valid_segmentation(lm, 30)

    def test_determinism(self, rng):
        patch = random_patch(rng)
        a = segment(patch, 30, 20.0)
        b = segment(patch, 30, 20.0)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_centroids_are_region_means(self, rng):
        patch = random_patch(rng, 16, 24)
        lm = segment(patch, 7, 20.0)
        for region in range(7):
            ys, xs = np.nonzero(lm.labels == region)
            np.testing.assert_allclose(lm.centroids[region], (xs.mean(), ys.mean()))
            np.testing.assert_allclose(
                lm.mean_colors[region],
                patch.rgb.data[ys, xs].mean(axis=0),
                atol=1e-12,
            )

    @pytest.mark.parametrize("k", [1, 5, 16, 64, 1024])
    def test_exact_count_for_many_k(self, rng, k):
        patch = random_patch(rng)
        lm = segment(patch, k, 20.0)
        assert len(np.unique(lm.labels)) == k

    def test_k_above_pixel_count_rejected(self, rng):
        patch = random_patch(rng, 4, 4)
        with pytest.raises(ParameterError):
            segment(patch, 17, 20.0)

    def test_negative_compactness_rejected(self, rng):
        with pytest.raises(ParameterError):
            segment(random_patch(rng), 4, -1.0)

    def test_zero_compactness_pure_color_growth(self):
        data = np.zeros((16, 16, 3))
        data[:, 8:] = 1.0
        lm = segment(make_patch(data), 2, 0.0)
        assert_valid_segmentation(lm, 2)


class TestSeedGrid:
    def test_exact_count_and_raster_order(self):
        seeds = seed_grid(32, 32, 30)
        assert len(seeds) == 30
        assert len(set(seeds)) == 30
        ys = [y for _, y in seeds]
        assert ys == sorted(ys)

    @pytest.mark.parametrize("w,h,k", [(32, 32, 4), (5, 40, 13), (40, 5, 13), (7, 3, 21)])
    def test_distinct_seeds_inside_grid(self, w, h, k):
        seeds = seed_grid(w, h, k)
        assert len(seeds) == k and len(set(seeds)) == k
        assert all(0 <= x < w and 0 <= y < h for x, y in seeds)

    def test_slot_stability_across_patches(self, rng):
        # same geometry => same seed layout, so region ids align spatially
        a = segment(random_patch(rng), 30, 20.0)
        b = segment(random_patch(rng), 30, 20.0)
        dist = np.linalg.norm(a.centroids - b.centroids, axis=1)
        assert dist.mean() < 6.0


class TestDebugExports:
    def test_exports_write_files(self, tmp_path, rng):
        patch = random_patch(rng)
        lm = segment(patch, 12, 20.0)
        label_path = tmp_path / "labels.png"
        overlay_path = tmp_path / "overlay.png"
        export_label_map(lm, label_path)
        export_boundary_overlay(patch, lm, overlay_path)
        from PIL import Image

        with Image.open(label_path) as img:
            assert img.size == (32, 32)
            back = np.asarray(img)
        np.testing.assert_array_equal(back, lm.labels.astype(np.uint16))
        with Image.open(overlay_path) as img:
            assert img.size == (32, 32)
