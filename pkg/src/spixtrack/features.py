"""Per-superpixel multi-cue histogram features.

Each superpixel yields an (n_bins x 8) matrix of normalized histograms over
the cues (H, S, I, R, G, B, x, y); spatial coordinates are normalized by the
patch dimensions so features stay comparable across candidate positions.
Flattening is column-major, giving a feature vector of length B = n_bins * 8.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateRegionError, ParameterError
from .media import Patch
from .snic import LabelMap

CUE_ORDER = ("H", "S", "I", "R", "G", "B", "x", "y")
N_CUES = len(CUE_ORDER)


def channel_histogram(values, n_bins: int) -> np.ndarray:
    """Normalized histogram of values in [0, 1].

    Bin i covers [i/n, (i+1)/n); the last bin is closed at 1.0.  Counts are
    divided by the number of values, so the bins sum to one.
    """
    if n_bins < 1:
        raise ParameterError(f"n_bins must be >= 1, got {n_bins}")
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DegenerateRegionError("cannot histogram an empty region")
    idx = np.minimum((v * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins).astype(np.float64)
    return counts / v.size


def _cue_stack(patch: Patch) -> np.ndarray:
    """All 8 cue channels as an (h*w, 8) array in CUE_ORDER."""
    h, w = patch.height, patch.width
    xn = np.tile(np.arange(w, dtype=np.float64), h) / max(w - 1, 1)
    yn = np.repeat(np.arange(h, dtype=np.float64), w) / max(h - 1, 1)
    return np.column_stack(
        [
            patch.hsi.data[:, :, 0].ravel(),
            patch.hsi.data[:, :, 1].ravel(),
            patch.hsi.data[:, :, 2].ravel(),
            patch.rgb.data[:, :, 0].ravel(),
            patch.rgb.data[:, :, 1].ravel(),
            patch.rgb.data[:, :, 2].ravel(),
            xn,
            yn,
        ]
    )


def superpixel_features(patch: Patch, labels: LabelMap, region_id: int, n_bins: int) -> np.ndarray:
    """Feature matrix (n_bins x 8) of one superpixel region."""
    if region_id < 0 or region_id >= labels.k:
        raise ParameterError(f"region id {region_id} outside [0, {labels.k})")
    mask = labels.labels.ravel() == region_id
    if not mask.any():
        raise DegenerateRegionError(f"region {region_id} is empty")
    cues = _cue_stack(patch)[mask]
    return np.column_stack([channel_histogram(cues[:, c], n_bins) for c in range(N_CUES)])


def flatten(feature_matrix: np.ndarray) -> np.ndarray:
    """Column-major flattening of an (n_bins x 8) feature matrix."""
    fm = np.asarray(feature_matrix, dtype=np.float64)
    if fm.ndim != 2 or fm.shape[1] != N_CUES:
        raise ParameterError(f"expected (n_bins, {N_CUES}) matrix, got {fm.shape}")
    return fm.flatten(order="F")


def unflatten(vec: np.ndarray, n_bins: int) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    if v.size != n_bins * N_CUES:
        raise ParameterError(f"expected length {n_bins * N_CUES}, got {v.size}")
    return v.reshape((n_bins, N_CUES), order="F")


def patch_feature_batch(patch: Patch, labels: LabelMap, n_bins: int) -> np.ndarray:
    """Flattened feature vectors of every region at once, as a (B, k) matrix.

    Column j equals flatten(superpixel_features(..., region_id=j, ...)); the
    batch form exists because candidate scoring histograms hundreds of patches
    per frame and a single bincount over (region, cue, bin) triples is far
    cheaper than a per-region loop.
    """
    if n_bins < 1:
        raise ParameterError(f"n_bins must be >= 1, got {n_bins}")
    cues = _cue_stack(patch)  # (n_pixels, 8)
    lab = labels.labels.ravel()
    k = labels.k
    sizes = np.bincount(lab, minlength=k)
    if (sizes == 0).any():
        raise DegenerateRegionError("label map contains an empty region")

    bin_idx = np.minimum((cues * n_bins).astype(np.int64), n_bins - 1)  # (n_pixels, 8)
    cue_idx = np.arange(N_CUES, dtype=np.int64)[None, :]
    combined = (lab[:, None] * N_CUES + cue_idx) * n_bins + bin_idx
    counts = np.bincount(combined.ravel(), minlength=k * N_CUES * n_bins).astype(np.float64)
    counts = counts.reshape(k, N_CUES * n_bins)
    counts /= sizes[:, None]
    return counts.T  # (B, k); per region the layout is cue-major = column-major flatten
