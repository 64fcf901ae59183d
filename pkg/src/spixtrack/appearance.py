"""Positive/negative subspace appearance models and the update policy.

A candidate slice is scored by its weighted reconstruction error against a
subspace model: mode-1/2 residuals of the centered slice through the u1/u2
bases, plus the mode-3 residual through v3.  The unnormalized log-likelihood
is the negative-model error minus the positive-model error, and only frames
whose best candidate clears the threshold enter the update scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateGeometryError, ParameterError
from .media import ImageRGB
from .motion import AffineState
from .pipeline import PoolingPipeline
from .tensorops import SubspaceModel, hosvd, incremental_update


@dataclass(frozen=True)
class AppearanceModel:
    """Positive subspace, optional negative subspace, and the update buffer."""

    positive: SubspaceModel
    negative: SubspaceModel | None
    gamma: float
    update_rate: int
    threshold: float
    forgetting: float
    pending: tuple = field(default_factory=tuple)  # accepted (z, s) slices

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.update_rate < 1:
            raise ParameterError(f"update rate must be >= 1, got {self.update_rate}")
        if len(self.pending) >= self.update_rate:
            raise ParameterError("pending buffer must stay below the update rate")


def reconstruction_error(j, model: SubspaceModel, gamma: float) -> float:
    """Weighted residual of one (d1, d2) slice against the model (>= 0)."""
    re1, re2 = reconstruction_errors_batch(np.asarray(j, dtype=np.float64)[None], model)
    return float(gamma * re1[0] + (1.0 - gamma) * re2[0])


def reconstruction_errors_batch(slices: np.ndarray, model: SubspaceModel):
    """Mode-residual pair (re1, re2) for a stack of slices, shape (n, d1, d2).

    Uses the projector energy identity ||(I-UU^T)X||^2 = ||X||^2 - ||U^T X||^2,
    valid because the bases are orthonormal; residuals clamp at zero against
    float round-off.
    """
    slices = np.asarray(slices, dtype=np.float64)
    if slices.ndim != 3 or slices.shape[1:] != model.dims:
        raise ParameterError(
            f"candidate stack {slices.shape} does not match model dims {model.dims}"
        )
    centered = slices - model.mean[None, :, :]
    total = np.einsum("nij,nij->n", centered, centered)

    proj1 = np.einsum("iu,nij->nuj", model.u1, centered)
    e1 = np.einsum("nuj,nuj->n", proj1, proj1)
    proj2 = np.einsum("ju,nij->nui", model.u2, centered)
    e2 = np.einsum("nui,nui->n", proj2, proj2)
    re1 = np.maximum(total - e1, 0.0) + np.maximum(total - e2, 0.0)

    # mode-3 row vectors: per-slice flattening with the first index fastest
    rows = centered.transpose(0, 2, 1).reshape(len(centered), -1)
    proj3 = rows @ model.v3
    re2 = np.maximum(
        np.einsum("nd,nd->n", rows, rows) - np.einsum("nr,nr->n", proj3, proj3), 0.0
    )
    return re1, re2


def log_likelihood(re_pos: float, re_neg: float | None) -> float:
    """Log of the unnormalized candidate likelihood.

    With both models present this is re_neg - re_pos; before the negative
    model exists the positive error alone is used.
    """
    if re_neg is None:
        return -float(re_pos)
    return float(re_neg) - float(re_pos)


def score_candidates(slices: np.ndarray, model: AppearanceModel):
    """Log-likelihood plus both reconstruction errors for a slice stack."""
    re1p, re2p = reconstruction_errors_batch(slices, model.positive)
    re_pos = model.gamma * re1p + (1.0 - model.gamma) * re2p
    if model.negative is None:
        return -re_pos, re_pos, None
    re1n, re2n = reconstruction_errors_batch(slices, model.negative)
    re_neg = model.gamma * re1n + (1.0 - model.gamma) * re2n
    return re_neg - re_pos, re_pos, re_neg


def sample_annulus_states(
    best: AffineState,
    count: int,
    inner: float,
    outer: float,
    rng_seed: int,
    frame_w: int,
    frame_h: int,
) -> np.ndarray:
    """Uniform area sampling of centers in the annulus around the best state.

    All other affine parameters are copied from the best state.  Raises if the
    annulus cannot touch the frame at all.
    """
    if count < 1:
        raise ParameterError(f"negative-sample count must be >= 1, got {count}")
    if not 0.0 < inner < outer:
        raise ParameterError(f"annulus must satisfy 0 < inner < outer, got ({inner}, {outer})")
    nearest_dx = max(0.0 - best.x, best.x - (frame_w - 1.0), 0.0)
    nearest_dy = max(0.0 - best.y, best.y - (frame_h - 1.0), 0.0)
    if np.hypot(nearest_dx, nearest_dy) > outer:
        raise DegenerateGeometryError("annulus lies entirely outside the frame")
    corners_dx = np.maximum(np.abs(best.x - 0.0), np.abs(best.x - (frame_w - 1.0)))
    corners_dy = np.maximum(np.abs(best.y - 0.0), np.abs(best.y - (frame_h - 1.0)))
    if np.hypot(corners_dx, corners_dy) < inner:
        raise DegenerateGeometryError("frame lies entirely inside the annulus hole")

    rng = np.random.default_rng(rng_seed)
    radii = np.sqrt(rng.uniform(inner**2, outer**2, size=count))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    states = np.tile(best.as_array(), (count, 1))
    states[:, 0] += radii * np.cos(angles)
    states[:, 1] += radii * np.sin(angles)
    return states


def collect_negatives(
    frame: ImageRGB,
    best: AffineState,
    count: int,
    ring: tuple[float, float],
    pipeline: PoolingPipeline,
    rng_seed: int,
) -> np.ndarray:
    """Pool ``count`` background samples around the target into a (z, s, count) tensor."""
    states = sample_annulus_states(
        best, count, ring[0], ring[1], rng_seed, frame.width, frame.height
    )
    slices = pipeline.pool_states(frame, states)  # (count, z, s)
    return np.moveaxis(slices, 0, 2)


def update_gate(model: AppearanceModel, best_loglik: float) -> bool:
    """Whether the best candidate enters the update scheme.

    Once a negative model exists the gate is the spec'd log-likelihood
    threshold; before that (the frame right after init) the candidate is
    always accepted, since the discriminative comparison has no negative
    side yet and rejecting would leave the models frozen forever.
    """
    if model.negative is None:
        return True
    return best_loglik > model.threshold


def maybe_update(
    model: AppearanceModel,
    best_slice: np.ndarray,
    best_loglik: float,
    negatives: np.ndarray,
) -> AppearanceModel:
    """Apply the update policy after a frame's MAP selection.

    Accepted frames push the best slice onto the pending buffer and rebuild
    the negative subspace from the harvested negatives; once the buffer holds
    ``update_rate`` slices they are absorbed into the positive subspace in one
    incremental step and the buffer clears.
    """
    if not update_gate(model, best_loglik):
        return model
    negatives = np.asarray(negatives, dtype=np.float64)
    negative = hosvd(negatives, _capped_ranks(model.positive.ranks, negatives.shape))
    pending = model.pending + (np.asarray(best_slice, dtype=np.float64),)
    positive = model.positive
    if len(pending) >= model.update_rate:
        batch = np.stack(pending, axis=2)
        positive = incremental_update(positive, batch, model.forgetting)
        pending = ()
    return replace(model, positive=positive, negative=negative, pending=pending)


def _capped_ranks(ranks, shape) -> tuple[int, int, int]:
    return (
        min(ranks[0], shape[0]),
        min(ranks[1], shape[1]),
        min(ranks[2], shape[2], shape[0] * shape[1]),
    )
