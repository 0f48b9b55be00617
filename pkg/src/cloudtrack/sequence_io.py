"""Disk format for sequences and the confidence admission filter.

A sequence directory looks like::

    <root>/
      sequence.meta        # "frame_count=<n>" plus optional "name=<str>"
      frames/<i>.xyz       # raw little-endian float32 xyz triples
      detections/<i>.csv   # header: frame,conf,cx,cy,cz,l,w,h,yaw[,gt_id]

Frame files are indexed 0..frame_count-1 with no zero padding.  The gt_id
column is optional; when present, an empty field means "no identity"
(used for injected false detections).  All multi-byte binary values are
little-endian.  Floats in CSV files are written with shortest round-trip
formatting, so a load/write cycle of canonical files is byte identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Detection, Frame, OrientedBox3, PointCloud

DETECTION_HEADER = "frame,conf,cx,cy,cz,l,w,h,yaw"
DEFAULT_CONFIDENCE_THRESHOLD = 0.4
DEFAULT_MAX_OBJECTS = 100


@dataclass(frozen=True)
class IngestConfig:
    """Admission policy: strict confidence cut plus per-frame capacity."""

    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    max_objects: int = DEFAULT_MAX_OBJECTS

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0, 1]")
        if self.max_objects < 1:
            raise ValueError("max_objects must be >= 1")


@dataclass(frozen=True)
class SequenceSource:
    """Read-only handle to an on-disk sequence."""

    root: Path
    frame_count: int
    name: str = ""
    config: IngestConfig = field(default_factory=IngestConfig)

    def point_path(self, index: int) -> Path:
        return self.root / "frames" / f"{index}.xyz"

    def detection_path(self, index: int) -> Path:
        return self.root / "detections" / f"{index}.csv"


def open_sequence(root, config: IngestConfig | None = None) -> SequenceSource:
    """Open a sequence directory, validating the meta file and frame files."""
    root = Path(root)
    meta = root / "sequence.meta"
    if not meta.is_file():
        raise FileNotFoundError(f"missing sequence meta file: {meta}")
    frame_count = None
    name = ""
    for lineno, line in enumerate(meta.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{meta}:{lineno}: expected key=value, got {line!r}")
        if key == "frame_count":
            frame_count = int(value)
        elif key == "name":
            name = value
    if frame_count is None or frame_count < 0:
        raise ValueError(f"{meta}: missing or invalid frame_count")
    src = SequenceSource(root, frame_count, name, config or IngestConfig())
    for i in range(frame_count):
        for path in (src.point_path(i), src.detection_path(i)):
            if not path.is_file():
                raise FileNotFoundError(f"missing frame file: {path}")
    return src


def _parse_points(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) % 12 != 0:
        raise ValueError(
            f"{path}: truncated point record at byte {len(data) - len(data) % 12}"
        )
    pts = np.frombuffer(data, dtype="<f4").astype(np.float64).reshape(-1, 3)
    if pts.size and not np.isfinite(pts).all():
        bad = int(np.flatnonzero(~np.isfinite(pts).all(axis=1))[0])
        raise ValueError(f"{path}: non-finite coordinate in point {bad}")
    return pts


def _parse_detection_row(path: Path, lineno: int, row: str, has_gt: bool) -> Detection:
    fields = row.split(",")
    expected = 10 if has_gt else 9
    if len(fields) != expected:
        raise ValueError(f"{path}:{lineno}: expected {expected} fields, got {len(fields)}")
    try:
        values = [float(v) for v in fields[1:9]]
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: bad numeric field ({exc})") from None
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{path}:{lineno}: non-finite value")
    conf, cx, cy, cz, l, w, h, yaw = values
    gt_id: int | None = None
    if has_gt and fields[9] != "":
        try:
            gt_id = int(fields[9])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad gt_id {fields[9]!r}") from None
    try:
        box = OrientedBox3(np.array([cx, cy, cz]), l, w, h, yaw)
        return Detection(box, conf, gt_id)
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: {exc}") from None


def _parse_detections(path: Path) -> tuple[Detection, ...]:
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}:1: missing header")
    header = lines[0]
    if header == DETECTION_HEADER:
        has_gt = False
    elif header == DETECTION_HEADER + ",gt_id":
        has_gt = True
    else:
        raise ValueError(f"{path}:1: unexpected header {header!r}")
    out = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row:
            continue
        out.append(_parse_detection_row(path, lineno, row, has_gt))
    return tuple(out)


def load_frame(src: SequenceSource, index: int) -> Frame:
    """Load one frame, unfiltered, in file order."""
    if not 0 <= index < src.frame_count:
        raise IndexError(f"frame index {index} outside 0..{src.frame_count - 1}")
    ppath, dpath = src.point_path(index), src.detection_path(index)
    for path in (ppath, dpath):
        if not path.is_file():
            raise FileNotFoundError(f"missing frame file: {path}")
    cloud = PointCloud(_parse_points(ppath), frame_index=index)
    return Frame(index, cloud, _parse_detections(dpath))


def admit_detections(frame: Frame, cfg: IngestConfig) -> Frame:
    """Apply the admission filter: strictly-above-threshold confidence,
    descending confidence order (stable on ties), truncated to capacity."""
    kept = [d for d in frame.detections if d.confidence > cfg.confidence_threshold]
    order = sorted(range(len(kept)), key=lambda i: (-kept[i].confidence, i))
    admitted = tuple(kept[i] for i in order[: cfg.max_objects])
    return Frame(frame.index, frame.cloud, admitted)


def load_admitted_frame(src: SequenceSource, index: int) -> Frame:
    return admit_detections(load_frame(src, index), src.config)


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(x))


def _detection_row(frame_index: int, det: Detection, has_gt: bool) -> str:
    b = det.box
    vals = [det.confidence, b.center[0], b.center[1], b.center[2],
            b.length, b.width, b.height, b.yaw]
    row = f"{frame_index}," + ",".join(format_float(v) for v in vals)
    if has_gt:
        row += "," + ("" if det.gt_id is None else str(det.gt_id))
    return row


def write_detections(root, frame_index: int, detections, with_gt: bool = True) -> None:
    """Write one frame's detection CSV in canonical form."""
    root = Path(root)
    (root / "detections").mkdir(parents=True, exist_ok=True)
    header = DETECTION_HEADER + (",gt_id" if with_gt else "")
    rows = [header]
    rows.extend(_detection_row(frame_index, d, with_gt) for d in detections)
    path = root / "detections" / f"{frame_index}.csv"
    path.write_text("\n".join(rows) + "\n")


def write_frame(root, frame: Frame, with_gt: bool = True) -> None:
    """Write one frame's point and detection files in canonical form."""
    root = Path(root)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    pts = frame.cloud.points.astype("<f4")
    (root / "frames" / f"{frame.index}.xyz").write_bytes(pts.tobytes())
    write_detections(root, frame.index, frame.detections, with_gt)


def write_sequence_meta(root, frame_count: int, name: str = "") -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    lines = [f"frame_count={frame_count}"]
    if name:
        lines.append(f"name={name}")
    (root / "sequence.meta").write_text("\n".join(lines) + "\n")
