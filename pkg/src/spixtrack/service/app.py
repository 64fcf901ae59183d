"""FastAPI application exposing tracking sessions and metric evaluation.

Sessions are held in process memory; each session serializes its own steps
while distinct sessions track concurrently.  Run a single service process
per model store (no cross-process session sharing).
"""

from __future__ import annotations

import base64
import binascii
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..benchmark import precision_at, precision_curve, success_curve
from ..boxes import center_error, iou
from ..errors import TrackerError
from ..media import ImageRGB, decode_image
from ..tracker import TrackerState, init_tracker, step
from .schemas import (
    BoxModel,
    ConfigModel,
    CreateSessionRequest,
    CreateSessionResponse,
    CurveModel,
    DiagnosticsModel,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    SessionInfo,
    StepRequest,
    StepResponse,
)


@dataclass
class _Session:
    state: TrackerState
    last_box: BoxModel
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def add(self, state: TrackerState, box: BoxModel) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._sessions[sid] = _Session(state=state, last_box=box)
        return sid

    def get(self, sid: str) -> _Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return session

    def remove(self, sid: str) -> None:
        with self._lock:
            if self._sessions.pop(sid, None) is None:
                raise HTTPException(status_code=404, detail=f"unknown session {sid}")

    def __len__(self):
        with self._lock:
            return len(self._sessions)


def _decode_frame(payload: str) -> ImageRGB:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"frame is not valid base64: {exc}")
    try:
        return decode_image(raw)
    except TrackerError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="spixtrack", version=__version__)
    store = SessionStore()

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__, sessions=len(store))

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(req: CreateSessionRequest):
        frame = _decode_frame(req.frame)
        config = (req.config or ConfigModel()).to_config()
        try:
            state = init_tracker(frame, req.init_box.to_box(), config)
        except TrackerError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        # by the one-pass convention the first frame's output is the init box
        box = req.init_box
        sid = store.add(state, box)
        return CreateSessionResponse(session_id=sid, frame_index=1, box=box)

    @app.post("/sessions/{sid}/frames", response_model=StepResponse)
    def track_frame(sid: str, req: StepRequest):
        session = store.get(sid)
        frame = _decode_frame(req.frame)
        with session.lock:
            try:
                new_state, box, diag = step(session.state, frame)
            except TrackerError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session.state = new_state
            session.last_box = BoxModel.from_box(box)
        overlap = err = None
        if req.ground_truth is not None:
            truth = req.ground_truth.to_box()
            overlap = iou(box, truth)
            err = center_error(box, truth)
        return StepResponse(
            frame_index=new_state.frame_index,
            box=BoxModel.from_box(box),
            iou=overlap,
            center_error=err,
            diagnostics=DiagnosticsModel(**diag.to_dict()),
        )

    @app.get("/sessions/{sid}", response_model=SessionInfo)
    def session_info(sid: str):
        session = store.get(sid)
        return SessionInfo(
            session_id=sid,
            frame_index=session.state.frame_index,
            last_box=session.last_box,
        )

    @app.delete("/sessions/{sid}")
    def close_session(sid: str):
        store.remove(sid)
        return {"closed": sid}

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        try:
            succ = success_curve(req.ious)
            prec = precision_curve(req.center_errors)
        except TrackerError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        mean_iou = float(sum(req.ious) / len(req.ious))
        return EvaluateResponse(
            success=CurveModel(
                thresholds=succ.thresholds.tolist(), values=succ.values.tolist(), auc=succ.auc
            ),
            precision=CurveModel(
                thresholds=prec.thresholds.tolist(), values=prec.values.tolist(), auc=prec.auc
            ),
            success_auc=succ.auc,
            precision_at_20=precision_at(prec),
            mean_iou=mean_iou,
        )

    return app
