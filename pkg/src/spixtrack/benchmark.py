"""Benchmark plumbing: sequence ingestion, one-pass evaluation, and the
precision/success/AUC metrics, plus CSV/JSON result persistence.

Sequence directories follow the usual benchmark layout: an ``img/`` folder of
numbered frames next to a ``groundtruth_rect.txt`` with one ``x,y,w,h`` row
per frame (comma or whitespace separated).
"""

from __future__ import annotations

import csv
import json
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxes import BoundingBox, center_error, iou
from .config import TrackerConfig
from .errors import ParameterError, SequenceFormatError
from .media import load_image
from .tracker import FrameDiagnostics, init_tracker, step

SUCCESS_THRESHOLDS = np.round(np.linspace(0.0, 1.0, 51), 2)
PRECISION_THRESHOLDS = np.arange(51, dtype=np.float64)
PRECISION_REPORT_AT = 20.0

_IMG_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass(frozen=True)
class Sequence:
    """Ordered frame paths with one ground-truth box per frame."""

    name: str
    frames: tuple
    ground_truth: tuple

    def __post_init__(self):
        if len(self.frames) != len(self.ground_truth):
            raise SequenceFormatError(
                f"{self.name}: {len(self.frames)} frames vs "
                f"{len(self.ground_truth)} ground-truth rows"
            )
        if len(self.frames) < 2:
            raise SequenceFormatError(f"{self.name}: need at least 2 frames")

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class EvalCurve:
    """Sampled threshold curve plus its area-under-curve score."""

    thresholds: np.ndarray
    values: np.ndarray
    auc: float

    def __post_init__(self):
        if len(self.thresholds) != len(self.values):
            raise ParameterError("thresholds and values must align")


def _frame_sort_key(path: Path):
    m = re.search(r"(\d+)", path.stem)
    return (int(m.group(1)) if m else -1, path.name)


def parse_ground_truth_line(line: str) -> BoundingBox:
    parts = [p for p in re.split(r"[,\s\t]+", line.strip()) if p]
    if len(parts) != 4:
        raise SequenceFormatError(f"expected 4 values per ground-truth row, got {line!r}")
    try:
        x, y, w, h = (float(p) for p in parts)
    except ValueError as exc:
        raise SequenceFormatError(f"unparsable ground-truth row {line!r}") from exc
    try:
        return BoundingBox(x, y, w, h)
    except ParameterError as exc:
        raise SequenceFormatError(f"degenerate ground-truth row {line!r}: {exc}") from exc


def load_sequence(seq_dir) -> Sequence:
    """Load a benchmark-layout sequence directory."""
    root = Path(seq_dir)
    img_dir = root / "img"
    if not img_dir.is_dir():
        raise SequenceFormatError(f"{root}: missing img/ directory")
    frames = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in _IMG_EXTENSIONS),
        key=_frame_sort_key,
    )
    if not frames:
        raise SequenceFormatError(f"{img_dir}: no frame files found")
    gt_path = root / "groundtruth_rect.txt"
    if not gt_path.is_file():
        raise SequenceFormatError(f"{root}: missing groundtruth_rect.txt")
    rows = [line for line in gt_path.read_text().splitlines() if line.strip()]
    boxes = tuple(parse_ground_truth_line(line) for line in rows)
    return Sequence(name=root.name, frames=tuple(frames), ground_truth=boxes)


def success_curve(ious) -> EvalCurve:
    """Fraction of frames whose overlap strictly exceeds each threshold."""
    v = np.asarray(ious, dtype=np.float64)
    if v.size == 0:
        raise ParameterError("need at least one overlap value")
    values = (v[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1)
    return EvalCurve(
        thresholds=SUCCESS_THRESHOLDS.copy(), values=values, auc=float(values.mean())
    )


def precision_curve(errors) -> EvalCurve:
    """Fraction of frames whose center error is within each pixel threshold."""
    v = np.asarray(errors, dtype=np.float64)
    if v.size == 0:
        raise ParameterError("need at least one center-error value")
    values = (v[None, :] <= PRECISION_THRESHOLDS[:, None]).mean(axis=1)
    return EvalCurve(
        thresholds=PRECISION_THRESHOLDS.copy(), values=values, auc=float(values.mean())
    )


def precision_at(curve: EvalCurve, threshold: float = PRECISION_REPORT_AT) -> float:
    idx = int(np.argmin(np.abs(curve.thresholds - threshold)))
    return float(curve.values[idx])


@dataclass
class OpeResult:
    """Per-frame boxes and metrics of one one-pass evaluation run."""

    sequence: str
    boxes: list
    ious: list
    center_errors: list
    diagnostics: list
    frame_seconds: list

    def summary(self) -> dict:
        succ = success_curve(self.ious)
        prec = precision_curve(self.center_errors)
        return {
            "sequence": self.sequence,
            "frames": len(self.boxes),
            "mean_iou": float(np.mean(self.ious)),
            "auc": succ.auc,
            "precision_at_20": precision_at(prec),
            "mean_center_error": float(np.mean(self.center_errors)),
            "seconds_per_frame": float(np.mean(self.frame_seconds)),
        }


def run_ope(config: TrackerConfig, seq: Sequence, progress=None) -> OpeResult:
    """One-pass evaluation: init on the first ground-truth box, then track.

    The first frame's output box is the ground-truth box itself (the init
    convention); every later frame runs one tracking step.  Tracking errors
    propagate with the frame index attached.
    """
    first = load_image(seq.frames[0])
    state = init_tracker(first, seq.ground_truth[0], config)
    boxes = [seq.ground_truth[0]]
    ious = [iou(boxes[0], seq.ground_truth[0])]
    cles = [center_error(boxes[0], seq.ground_truth[0])]
    diags: list[FrameDiagnostics] = []
    times = [0.0]
    for t in range(1, len(seq)):
        t0 = time.perf_counter()
        frame = load_image(seq.frames[t])
        state, box, diag = step(state, frame)
        times.append(time.perf_counter() - t0)
        boxes.append(box)
        ious.append(iou(box, seq.ground_truth[t]))
        cles.append(center_error(box, seq.ground_truth[t]))
        diags.append(diag)
        if progress is not None:
            progress(t, len(seq))
    return OpeResult(
        sequence=seq.name,
        boxes=boxes,
        ious=ious,
        center_errors=cles,
        diagnostics=diags,
        frame_seconds=times,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def write_results(result: OpeResult, out_dir) -> dict:
    """Persist results.csv plus summary.json; returns the summary dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "y", "w", "h", "iou", "cle"])
        for i, box in enumerate(result.boxes):
            writer.writerow(
                [
                    i,
                    _fmt(box.x),
                    _fmt(box.y),
                    _fmt(box.w),
                    _fmt(box.h),
                    _fmt(result.ious[i]),
                    _fmt(result.center_errors[i]),
                ]
            )
    summary = result.summary()
    with (out / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def read_results_csv(path):
    """Rows of a results.csv as (index, BoundingBox, iou, cle) tuples."""
    rows = []
    with Path(path).open() as fh:
        reader = csv.DictReader(fh)
        required = {"index", "x", "y", "w", "h", "iou", "cle"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SequenceFormatError(f"{path}: not a results.csv file")
        for row in reader:
            rows.append(
                (
                    int(row["index"]),
                    BoundingBox(
                        float(row["x"]), float(row["y"]), float(row["w"]), float(row["h"])
                    ),
                    float(row["iou"]),
                    float(row["cle"]),
                )
            )
    if not rows:
        raise SequenceFormatError(f"{path}: empty results file")
    return rows


def write_curves(ious, errors, out_dir) -> dict:
    """Write success/precision curve CSVs plus an evaluation summary JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    succ = success_curve(ious)
    prec = precision_curve(errors)
    for name, curve in (("success_curve.csv", succ), ("precision_curve.csv", prec)):
        with (out / name).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "value"])
            for t, v in zip(curve.thresholds, curve.values):
                writer.writerow([_fmt(t), _fmt(v)])
    summary = {
        "frames": int(len(np.asarray(ious))),
        "success_auc": succ.auc,
        "precision_at_20": precision_at(prec),
        "mean_iou": float(np.mean(np.asarray(ious, dtype=np.float64))),
    }
    with (out / "eval_summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def draw_overlay(frame_path, predicted: BoundingBox, truth: BoundingBox, out_path) -> None:
    """Save the frame with the predicted (yellow) and truth (green) boxes."""
    from PIL import Image, ImageDraw

    with Image.open(frame_path) as img:
        canvas = img.convert("RGB")
        draw = ImageDraw.Draw(canvas)
        draw.rectangle(
            [truth.x, truth.y, truth.x + truth.w - 1, truth.y + truth.h - 1],
            outline=(0, 255, 0),
        )
        draw.rectangle(
            [predicted.x, predicted.y, predicted.x + predicted.w - 1, predicted.y + predicted.h - 1],
            outline=(255, 220, 0),
        )
        canvas.save(out_path)
