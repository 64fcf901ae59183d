"""Pydantic request/response models for the tracking service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..boxes import BoundingBox
from ..config import TrackerConfig


class BoxModel(BaseModel):
    x: float
    y: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)

    @classmethod
    def from_box(cls, box: BoundingBox) -> "BoxModel":
        return cls(x=box.x, y=box.y, w=box.w, h=box.h)

    def to_box(self) -> BoundingBox:
        return BoundingBox(self.x, self.y, self.w, self.h)


class ConfigModel(BaseModel):
    """Tracker configuration overrides; omitted fields keep their defaults."""

    model_config = {"extra": "forbid"}

    template_w: int | None = None
    template_h: int | None = None
    superpixels: int | None = None
    compactness: float | None = None
    bins: int | None = None
    dictionary_size: int | None = None
    lam: float | None = None
    particles: int | None = None
    negatives: int | None = None
    update_rate: int | None = None
    gamma: float | None = None
    threshold: float | None = None
    sigma_x: float | None = None
    sigma_y: float | None = None
    sigma_theta: float | None = None
    sigma_scale: float | None = None
    sigma_aspect: float | None = None
    sigma_skew: float | None = None
    rank1: int | None = None
    rank2: int | None = None
    rank3: int | None = None
    forgetting: float | None = None
    annulus_inner: float | None = None
    annulus_outer: float | None = None
    rng_seed: int | None = None
    code_tol: float | None = None
    code_max_sweeps: int | None = None
    code_polish_rounds: int | None = None
    workers: int | None = None

    def to_config(self) -> TrackerConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return TrackerConfig(**overrides)


class CreateSessionRequest(BaseModel):
    frame: str  # base64-encoded PNG or JPEG file bytes
    init_box: BoxModel
    config: ConfigModel | None = None


class CreateSessionResponse(BaseModel):
    session_id: str
    frame_index: int
    box: BoxModel


class DiagnosticsModel(BaseModel):
    frame_index: int
    best_loglik: float
    re_pos: float
    re_neg: float | None
    accepted: bool
    bootstrap: bool
    positive_updated: bool
    pending_size: int
    n_candidates: int


class StepRequest(BaseModel):
    frame: str  # base64-encoded PNG or JPEG file bytes
    ground_truth: BoxModel | None = None


class StepResponse(BaseModel):
    frame_index: int
    box: BoxModel
    iou: float | None = None
    center_error: float | None = None
    diagnostics: DiagnosticsModel


class SessionInfo(BaseModel):
    session_id: str
    frame_index: int
    last_box: BoxModel


class EvaluateRequest(BaseModel):
    ious: list[float] = Field(min_length=1)
    center_errors: list[float] = Field(min_length=1)


class CurveModel(BaseModel):
    thresholds: list[float]
    values: list[float]
    auc: float


class EvaluateResponse(BaseModel):
    success: CurveModel
    precision: CurveModel
    success_auc: float
    precision_at_20: float
    mean_iou: float


class HealthResponse(BaseModel):
    status: str
    version: str
    sessions: int
