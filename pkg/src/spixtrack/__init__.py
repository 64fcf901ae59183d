"""Superpixel multi-cue tensor tracking.

Candidate templates are segmented into superpixels, described by multi-cue
histograms, sparse-coded against a first-frame dictionary and pooled into
third-order tensors; incremental positive/negative subspace models score the
candidates of a particle filter.  The package ships as a library plus a
FastAPI service and a benchmark CLI.
"""

from .appearance import (
    AppearanceModel,
    collect_negatives,
    log_likelihood,
    maybe_update,
    reconstruction_error,
)
from .benchmark import (
    EvalCurve,
    OpeResult,
    Sequence,
    load_sequence,
    precision_at,
    precision_curve,
    run_ope,
    success_curve,
    write_results,
)
from .boxes import BoundingBox, center_error, iou
from .coding import (
    Dictionary,
    learn_dictionary,
    load_dictionary,
    pool_candidate,
    save_dictionary,
    sparse_encode,
    sparse_encode_batch,
)
from .config import TrackerConfig, parse_config_file, write_config_file
from .features import channel_histogram, flatten, superpixel_features, unflatten
from .media import ImageHSI, ImageRGB, Patch, extract_template, load_image, rgb_to_hsi
from .motion import AffineState, NoiseSpec, ParticleSet, map_estimate, propagate
from .pipeline import PoolingPipeline
from .snic import LabelMap, segment
from .tensorops import SubspaceModel, fold, hosvd, incremental_update, mode_product, unfold
from .tracker import (
    FrameDiagnostics,
    TrackerState,
    box_to_state,
    init_tracker,
    state_to_box,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "AffineState",
    "AppearanceModel",
    "BoundingBox",
    "Dictionary",
    "EvalCurve",
    "FrameDiagnostics",
    "ImageHSI",
    "ImageRGB",
    "LabelMap",
    "NoiseSpec",
    "OpeResult",
    "ParticleSet",
    "Patch",
    "PoolingPipeline",
    "Sequence",
    "SubspaceModel",
    "TrackerConfig",
    "TrackerState",
    "box_to_state",
    "center_error",
    "channel_histogram",
    "collect_negatives",
    "extract_template",
    "flatten",
    "fold",
    "hosvd",
    "incremental_update",
    "init_tracker",
    "iou",
    "learn_dictionary",
    "load_dictionary",
    "load_image",
    "load_sequence",
    "log_likelihood",
    "map_estimate",
    "maybe_update",
    "mode_product",
    "parse_config_file",
    "pool_candidate",
    "precision_at",
    "precision_curve",
    "propagate",
    "reconstruction_error",
    "rgb_to_hsi",
    "run_ope",
    "save_dictionary",
    "segment",
    "sparse_encode",
    "sparse_encode_batch",
    "state_to_box",
    "step",
    "success_curve",
    "superpixel_features",
    "unflatten",
    "unfold",
    "write_config_file",
    "write_results",
]
