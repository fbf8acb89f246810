"""File formats: detection sidecars, PNG frames, frame logs and video reports.

Sidecar layout::

    {"frames": [{"frame_id": "000", "boxes": [
        {"class": 2, "x": 0.1, "y": 0.2, "w": 0.05, "h": 0.05, "confidence": 0.9}]}]}

Class codes follow `ArtifactClass`. ``confidence`` may be omitted for
ground-truth files and defaults to 1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import cv2
import numpy as np

from .geometry import ArtifactClass, BBox, Detection, Frame

_BOX_KEYS = ("class", "x", "y", "w", "h", "confidence")
FRAME_LOG_HEADER = ("frame_id", "qs", "disposition", "stages", "psnr_pre", "psnr_post",
                    "ssim_pre", "ssim_post", "index", "warnings", "reason", "qs_post")


class SidecarError(ValueError):
    """Malformed sidecar; the message names the offending record and field."""


@dataclass
class DetectionSidecar:
    frames: dict = field(default_factory=dict)

    def detections(self, frame_id: str) -> list:
        return list(self.frames.get(frame_id, ()))

    def to_json(self) -> dict:
        return {"frames": [
            {"frame_id": fid, "boxes": [
                {"class": int(d.label), "x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h,
                 "confidence": d.confidence} for d in dets]}
            for fid, dets in self.frames.items()]}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SidecarError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SidecarError(f"{where}: non-finite value")
    return float(value)


def _parse_box(raw, where: str) -> Detection:
    if not isinstance(raw, dict):
        raise SidecarError(f"{where}: expected an object")
    extra = set(raw) - set(_BOX_KEYS)
    if extra:
        raise SidecarError(f"{where}.{sorted(extra)[0]}: unknown field")
    for key in _BOX_KEYS[:5]:
        if key not in raw:
            raise SidecarError(f"{where}.{key}: missing field")
    code = raw["class"]
    if isinstance(code, bool) or not isinstance(code, int):
        raise SidecarError(f"{where}.class: expected an integer class code, got {code!r}")
    if code not in ArtifactClass._value2member_map_:
        raise SidecarError(f"{where}.class: unknown class code {code}")
    coords = [_number(raw[k], f"{where}.{k}") for k in ("x", "y", "w", "h")]
    conf = _number(raw.get("confidence", 1.0), f"{where}.confidence")
    if not 0.0 <= conf <= 1.0:
        raise SidecarError(f"{where}.confidence: {conf} outside [0, 1]")
    try:
        box = BBox(*coords)
    except ValueError as exc:
        raise SidecarError(f"{where}: {exc}") from None
    return Detection(ArtifactClass(code), box, conf)


def parse_sidecar_obj(data) -> DetectionSidecar:
    if not isinstance(data, dict) or set(data) != {"frames"} or not isinstance(data["frames"], list):
        raise SidecarError("sidecar: expected an object with a single 'frames' list")
    frames = {}
    for i, rec in enumerate(data["frames"]):
        where = f"frames[{i}]"
        if not isinstance(rec, dict) or set(rec) != {"frame_id", "boxes"}:
            raise SidecarError(f"{where}: expected exactly the fields frame_id and boxes")
        fid = rec["frame_id"]
        if not isinstance(fid, str):
            raise SidecarError(f"{where}.frame_id: expected a string")
        where = f"{where}(frame_id={fid!r})"
        if fid in frames:
            raise SidecarError(f"{where}.frame_id: duplicate frame id")
        if not isinstance(rec["boxes"], list):
            raise SidecarError(f"{where}.boxes: expected a list")
        frames[fid] = [_parse_box(b, f"{where}.boxes[{j}]") for j, b in enumerate(rec["boxes"])]
    return DetectionSidecar(frames)


def parse_sidecar(path) -> DetectionSidecar:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SidecarError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_sidecar_obj(data)


def write_sidecar(sidecar: DetectionSidecar, path) -> None:
    Path(path).write_text(json.dumps(sidecar.to_json(), indent=2) + "\n")


def read_frame(path, index: int = 0) -> Frame:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot read image {path}")
    if raw.dtype == np.uint8:
        depth, peak = 8, 255.0
    elif raw.dtype == np.uint16:
        depth, peak = 16, 65535.0
    else:
        raise OSError(f"unsupported image dtype {raw.dtype} in {path}")
    if raw.ndim == 3:
        raw = raw[:, :, :3][:, :, ::-1]
    return Frame(raw.astype(np.float64) / peak, index=index, bit_depth_source=depth)


def write_frame(frame: Frame, path, bit_depth: int | None = None) -> None:
    depth = bit_depth or frame.bit_depth_source
    peak, dtype = (255.0, np.uint8) if depth == 8 else (65535.0, np.uint16)
    data = np.round(np.clip(frame.pixels, 0, 1) * peak).astype(dtype)
    data = data[:, :, 0] if frame.channels == 1 else data[:, :, ::-1]
    if not cv2.imwrite(str(path), np.ascontiguousarray(data)):
        raise OSError(f"cannot write image {path}")


def list_frames(directory) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".png")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return str(v)


def emit_report(report, logs: Iterable, json_path=None, csv_path=None) -> None:
    """Write the video report as JSON and the per-frame logs as CSV."""
    if json_path is not None:
        Path(json_path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FRAME_LOG_HEADER)
            for log in logs:
                row = log.to_row()
                writer.writerow([_cell(row[k]) for k in FRAME_LOG_HEADER])
