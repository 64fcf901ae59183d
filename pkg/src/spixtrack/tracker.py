"""Per-frame tracking loop: propagate, pool, score, select, update.

Frame 1 learns the dictionary from the ground-truth template plus
motion-model perturbations of it and seeds the positive model; from frame 2
on, each step scores a fresh particle cloud against the appearance model,
emits the MAP box, harvests background samples around it and runs the update
policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .appearance import (
    AppearanceModel,
    collect_negatives,
    maybe_update,
    score_candidates,
    update_gate,
)
from .boxes import BoundingBox
from .coding import Dictionary, learn_dictionary, sparse_encode_batch
from .config import TrackerConfig
from .errors import InitializationError, TrackerError, TrackingFailureError
from .media import ImageRGB, extract_template
from .motion import AffineState, map_estimate, propagate
from .pipeline import PoolingPipeline
from .snic import segment
from .features import patch_feature_batch
from .tensorops import empty_model


def box_to_state(box: BoundingBox, config: TrackerConfig) -> AffineState:
    """Affine state whose template footprint reproduces the box.

    Scale carries the area ratio and aspect the shape ratio, so the two stay
    orthogonal: box width = template_w * scale * sqrt(aspect).
    """
    cx = box.x + (box.w - 1) / 2.0
    cy = box.y + (box.h - 1) / 2.0
    scale = math.sqrt(box.w * box.h / (config.template_w * config.template_h))
    aspect = (box.w * config.template_h) / (box.h * config.template_w)
    return AffineState(x=cx, y=cy, theta=0.0, scale=scale, aspect=aspect, skew=0.0)


def state_to_box(state: AffineState, config: TrackerConfig) -> BoundingBox:
    """Axis-aligned footprint of a state (rotation and skew do not widen it)."""
    w = config.template_w * state.scale * math.sqrt(state.aspect)
    h = config.template_h * state.scale / math.sqrt(state.aspect)
    return BoundingBox(x=state.x - (w - 1) / 2.0, y=state.y - (h - 1) / 2.0, w=w, h=h)


@dataclass(frozen=True)
class FrameDiagnostics:
    """Observable record of one tracking step, for tests and result files."""

    frame_index: int
    best_loglik: float
    re_pos: float
    re_neg: float | None
    accepted: bool
    bootstrap: bool  # accepted before any negative model existed
    positive_updated: bool
    pending_size: int
    n_candidates: int

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "best_loglik": self.best_loglik,
            "re_pos": self.re_pos,
            "re_neg": self.re_neg,
            "accepted": self.accepted,
            "bootstrap": self.bootstrap,
            "positive_updated": self.positive_updated,
            "pending_size": self.pending_size,
            "n_candidates": self.n_candidates,
        }


@dataclass(frozen=True)
class TrackerState:
    """Everything the tracker carries between frames."""

    config: TrackerConfig
    dictionary: Dictionary
    pipeline: PoolingPipeline
    appearance: AppearanceModel
    last_state: AffineState
    frame_index: int
    rng_counter: int


def _derive_seed(base_seed: int, counter: int) -> int:
    return int(np.random.SeedSequence((base_seed, counter)).generate_state(1)[0])


def init_tracker(frame: ImageRGB, init_box: BoundingBox, config: TrackerConfig) -> TrackerState:
    """Build the dictionary and appearance model from the first frame."""
    if (
        init_box.x < 0
        or init_box.y < 0
        or init_box.x + init_box.w > frame.width
        or init_box.y + init_box.h > frame.height
    ):
        raise InitializationError(
            f"init box {init_box} does not fit inside a "
            f"{frame.width}x{frame.height} frame"
        )
    state0 = box_to_state(init_box, config)

    sample_states = propagate(
        state0, config.particles, config.noise(), _derive_seed(config.rng_seed, 0)
    )
    all_states = np.vstack([state0.as_array()[None, :], sample_states.states])

    s = config.superpixels
    feats = np.empty((config.bins * 8, len(all_states) * s))
    for i, row in enumerate(all_states):
        st = AffineState.from_array(row)
        patch = extract_template(frame, st, config.template_w, config.template_h)
        labels = segment(patch, s, config.compactness)
        feats[:, i * s : (i + 1) * s] = patch_feature_batch(patch, labels, config.bins)

    dictionary = learn_dictionary(
        feats.T, config.dictionary_size, _derive_seed(config.rng_seed, 1)
    )
    pipeline = PoolingPipeline(
        dictionary=dictionary,
        template_w=config.template_w,
        template_h=config.template_h,
        superpixels=s,
        compactness=config.compactness,
        n_bins=config.bins,
        lam=config.lam,
        code_tol=config.code_tol,
        code_max_sweeps=config.code_max_sweeps,
        code_polish_rounds=config.code_polish_rounds,
        workers=config.workers,
    )
    gt_slice = sparse_encode_batch(
        feats[:, :s],
        dictionary,
        config.lam,
        tol=config.code_tol,
        max_sweeps=config.code_max_sweeps,
        polish_rounds=config.code_polish_rounds,
    )
    appearance = AppearanceModel(
        positive=empty_model(gt_slice, config.ranks()),
        negative=None,
        gamma=config.gamma,
        update_rate=config.update_rate,
        threshold=config.threshold,
        forgetting=config.forgetting,
        pending=(gt_slice,),
    )
    return TrackerState(
        config=config,
        dictionary=dictionary,
        pipeline=pipeline,
        appearance=appearance,
        last_state=state0,
        frame_index=1,
        rng_counter=2,
    )


def step(state: TrackerState, frame: ImageRGB) -> tuple[TrackerState, BoundingBox, FrameDiagnostics]:
    """Advance one frame; returns the new state, the MAP box and diagnostics."""
    cfg = state.config
    particles = propagate(
        state.last_state,
        cfg.particles,
        cfg.noise(),
        _derive_seed(cfg.rng_seed, state.rng_counter),
    )
    # identical particles (e.g. zero noise) collapse to one pipeline pass
    uniq, inverse = np.unique(particles.states, axis=0, return_inverse=True)
    try:
        slices = state.pipeline.pool_states(frame, uniq)
    except TrackerError as exc:
        raise TrackingFailureError(
            f"candidate extraction failed at frame {state.frame_index + 1}: {exc}",
            last_state=state.last_state,
        ) from exc

    loglik_u, re_pos_u, re_neg_u = score_candidates(slices, state.appearance)
    particles.log_weights[:] = loglik_u[inverse]
    best_state, best_loglik = map_estimate(particles)
    best_u = int(inverse[int(np.argmax(particles.log_weights))])
    box = state_to_box(best_state, cfg)

    negatives = collect_negatives(
        frame,
        best_state,
        cfg.negatives,
        (cfg.annulus_inner, cfg.annulus_outer),
        state.pipeline,
        _derive_seed(cfg.rng_seed, state.rng_counter + 1),
    )
    bootstrap = state.appearance.negative is None
    accepted = update_gate(state.appearance, best_loglik)
    appearance = maybe_update(state.appearance, slices[best_u], best_loglik, negatives)
    positive_updated = accepted and len(appearance.pending) == 0

    diag = FrameDiagnostics(
        frame_index=state.frame_index + 1,
        best_loglik=float(best_loglik),
        re_pos=float(re_pos_u[best_u]),
        re_neg=None if re_neg_u is None else float(re_neg_u[best_u]),
        accepted=accepted,
        bootstrap=bootstrap and accepted,
        positive_updated=positive_updated,
        pending_size=len(appearance.pending),
        n_candidates=len(uniq),
    )
    new_state = TrackerState(
        config=cfg,
        dictionary=state.dictionary,
        pipeline=state.pipeline,
        appearance=appearance,
        last_state=best_state,
        frame_index=state.frame_index + 1,
        rng_counter=state.rng_counter + 2,
    )
    return new_state, box, diag
