"""Command-line entry points: ``track``, ``eval`` and ``serve``.

The CLI is a thin client of the HTTP service: tracking and metric math run
behind the API in every mode.  Without ``--server`` the app is mounted
in-process, so single-machine runs need no separate daemon; with it, requests
go to a remote service and only file handling stays local.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import sys
import time
from pathlib import Path

import httpx

from .benchmark import load_sequence
from .boxes import BoundingBox
from .config import TrackerConfig, parse_config_file
from .errors import TrackerError


class ServiceClient:
    """Minimal JSON-over-HTTP client, in-process by default."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def close(self):
        self._client.close()

    def _check(self, resp) -> dict:
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise TrackerError(f"service error {resp.status_code}: {detail}")
        return resp.json()

    def post(self, path: str, payload: dict) -> dict:
        return self._check(self._client.post(path, json=payload))

    def delete(self, path: str) -> dict:
        return self._check(self._client.delete(path))


def _box_payload(box: BoundingBox) -> dict:
    return {"x": box.x, "y": box.y, "w": box.w, "h": box.h}


def _encode_frame(path) -> str:
    return base64.b64encode(Path(path).read_bytes()).decode("ascii")


def _load_config(args) -> TrackerConfig:
    config = parse_config_file(args.config) if args.config else TrackerConfig()
    if args.seed is not None:
        config = config.with_overrides(rng_seed=args.seed)
    if getattr(args, "workers", None) is not None:
        config = config.with_overrides(workers=args.workers)
    return config


def _fmt(value: float) -> str:
    return repr(float(value))


def cmd_track(args) -> int:
    seq = load_sequence(args.seq)
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    client = ServiceClient(args.server)
    try:
        created = client.post(
            "/sessions",
            {
                "frame": _encode_frame(seq.frames[0]),
                "init_box": _box_payload(seq.ground_truth[0]),
                "config": config.to_dict(),
            },
        )
        sid = created["session_id"]
        rows = [
            {
                "index": 0,
                "box": created["box"],
                "iou": 1.0,
                "cle": 0.0,
                "seconds": 0.0,
                "diagnostics": None,
            }
        ]
        for t in range(1, len(seq)):
            t0 = time.perf_counter()
            resp = client.post(
                f"/sessions/{sid}/frames",
                {
                    "frame": _encode_frame(seq.frames[t]),
                    "ground_truth": _box_payload(seq.ground_truth[t]),
                },
            )
            rows.append(
                {
                    "index": t,
                    "box": resp["box"],
                    "iou": resp["iou"],
                    "cle": resp["center_error"],
                    "seconds": time.perf_counter() - t0,
                    "diagnostics": resp["diagnostics"],
                }
            )
            if args.overlay:
                from .benchmark import draw_overlay

                overlay_dir = out / "overlays"
                overlay_dir.mkdir(exist_ok=True)
                b = resp["box"]
                draw_overlay(
                    seq.frames[t],
                    BoundingBox(b["x"], b["y"], b["w"], b["h"]),
                    seq.ground_truth[t],
                    overlay_dir / f"{t:04d}.png",
                )
        client.delete(f"/sessions/{sid}")
        scores = client.post(
            "/evaluate",
            {
                "ious": [row["iou"] for row in rows],
                "center_errors": [row["cle"] for row in rows],
            },
        )
    finally:
        client.close()

    with (out / "results.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "y", "w", "h", "iou", "cle"])
        for row in rows:
            b = row["box"]
            writer.writerow(
                [
                    row["index"],
                    _fmt(b["x"]),
                    _fmt(b["y"]),
                    _fmt(b["w"]),
                    _fmt(b["h"]),
                    _fmt(row["iou"]),
                    _fmt(row["cle"]),
                ]
            )
    summary = {
        "sequence": seq.name,
        "frames": len(rows),
        "mean_iou": scores["mean_iou"],
        "auc": scores["success_auc"],
        "precision_at_20": scores["precision_at_20"],
        "seconds_per_frame": sum(r["seconds"] for r in rows) / max(len(rows) - 1, 1),
    }
    with (out / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with (out / "diagnostics.json").open("w") as fh:
        json.dump([r["diagnostics"] for r in rows[1:]], fh, indent=2)
        fh.write("\n")
    print(
        f"{seq.name}: {len(rows)} frames, mean IoU {summary['mean_iou']:.3f}, "
        f"{summary['seconds_per_frame']:.2f}s/frame -> {out}"
    )
    return 0


def _collect_result_rows(results_dir: Path):
    files = sorted(results_dir.rglob("results.csv"))
    if not files:
        raise TrackerError(f"no results.csv files under {results_dir}")
    ious: list[float] = []
    errors: list[float] = []
    for path in files:
        with path.open() as fh:
            for row in csv.DictReader(fh):
                ious.append(float(row["iou"]))
                errors.append(float(row["cle"]))
    return files, ious, errors


def _write_curve_csv(path, thresholds, values):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "value"])
        for t, v in zip(thresholds, values):
            writer.writerow([_fmt(t), _fmt(v)])


def cmd_eval(args) -> int:
    results_dir = Path(args.results)
    files, ious, errors = _collect_result_rows(results_dir)
    client = ServiceClient(args.server)
    try:
        resp = client.post("/evaluate", {"ious": ious, "center_errors": errors})
    finally:
        client.close()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_curve_csv(
        out / "success_curve.csv", resp["success"]["thresholds"], resp["success"]["values"]
    )
    _write_curve_csv(
        out / "precision_curve.csv",
        resp["precision"]["thresholds"],
        resp["precision"]["values"],
    )
    summary = {
        "result_files": [str(p) for p in files],
        "frames": len(ious),
        "success_auc": resp["success_auc"],
        "precision_at_20": resp["precision_at_20"],
        "mean_iou": resp["mean_iou"],
    }
    with (out / "eval_summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"{len(files)} result file(s), {len(ious)} frames: "
        f"AUC {resp['success_auc']:.4f}, precision@20 {resp['precision_at_20']:.4f} -> {out}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spixtrack", description="Superpixel tensor tracker"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker over one sequence directory")
    p_track.add_argument("--seq", required=True, help="sequence directory (img/ + groundtruth_rect.txt)")
    p_track.add_argument("--config", default=None, help="flat key=value config file")
    p_track.add_argument("--out", required=True, help="output directory for results")
    p_track.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    p_track.add_argument("--workers", type=int, default=None, help="candidate-scoring processes")
    p_track.add_argument("--overlay", action="store_true", help="write box overlay PNGs")
    p_track.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="compute curves from tracked results")
    p_eval.add_argument("--results", required=True, help="directory containing results.csv files")
    p_eval.add_argument("--out", required=True, help="output directory for curves")
    p_eval.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrackerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
