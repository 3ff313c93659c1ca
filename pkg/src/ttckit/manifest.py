"""Sequence data model and the on-disk dataset contract.

A dataset directory holds one subdirectory per sequence (six PNG frames
plus ``manifest.json``) and a top-level ``index.json`` listing sequence
ids and the configuration hash.  Manifests are serialized with sorted
keys and a fixed float representation so regeneration is byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import BoundingBox
from .errors import ManifestError
from .png import read_png, write_png

SEQUENCE_LENGTH = 6
_TIMESTAMP_TOL = 1e-9


@dataclass
class FrameSample:
    """One frame of a sequence: raster, per-object box, timestamp."""

    timestamp_s: float
    box: BoundingBox
    exact_box: BoundingBox | None = None
    depth_m: float | None = None
    image: np.ndarray | None = None  # (H, W, 3) float32 in [0, 1]
    image_path: str | None = None
    too_small: bool = False
    truncated: bool = False

    def load_image(self, root: Path | None = None) -> np.ndarray:
        if self.image is not None:
            return self.image
        if self.image_path is None:
            raise ManifestError("frame has neither raster nor image path")
        path = Path(self.image_path)
        if root is not None and not path.is_absolute():
            path = Path(root) / path
        raster = read_png(path).astype(np.float32) / 255.0
        self.image = raster
        return raster


@dataclass
class SequenceLabel:
    tau_s: float
    alpha_10hz: float
    velocity_mps: float
    q_used: int | None = None
    flags: list[str] = field(default_factory=list)
    alpha_by_gap: dict[int, float] | None = None
    depth_m: float | None = None


@dataclass
class Sequence:
    """Six consecutive frames at fixed FPS, optionally labeled."""

    sequence_id: str
    fps: float
    frames: list[FrameSample]
    label: SequenceLabel | None = None
    provenance: dict = field(default_factory=dict)
    depth_history: list[tuple[float, float]] | None = None

    def validate(self, length: int = SEQUENCE_LENGTH) -> None:
        if len(self.frames) != length:
            raise ManifestError(
                f"sequence {self.sequence_id}: expected {length} frames, got {len(self.frames)}"
            )
        dt = 1.0 / self.fps
        for i in range(1, len(self.frames)):
            gap = self.frames[i].timestamp_s - self.frames[i - 1].timestamp_s
            if abs(gap - dt) > _TIMESTAMP_TOL:
                raise ManifestError(
                    f"sequence {self.sequence_id}: frame spacing {gap} != 1/fps {dt}"
                )


def _box_to_json(box: BoundingBox | None):
    return None if box is None else [box.cx, box.cy, box.w, box.h]


def _box_from_json(data) -> BoundingBox | None:
    return None if data is None else BoundingBox(*data)


def sequence_to_manifest(seq: Sequence) -> dict:
    label = None
    if seq.label is not None:
        label = {
            "tau_s": seq.label.tau_s,
            "alpha_10hz": seq.label.alpha_10hz,
            "velocity_mps": seq.label.velocity_mps,
            "q_used": seq.label.q_used,
            "flags": list(seq.label.flags),
            "alpha_by_gap": (
                None
                if seq.label.alpha_by_gap is None
                else {str(k): v for k, v in sorted(seq.label.alpha_by_gap.items())}
            ),
            "depth_m": seq.label.depth_m,
        }
    return {
        "sequence_id": seq.sequence_id,
        "fps": seq.fps,
        "frames": [
            {
                "image_path": f.image_path,
                "timestamp_s": f.timestamp_s,
                "bbox": _box_to_json(f.box),
                "exact_bbox": _box_to_json(f.exact_box),
                "depth_m": f.depth_m,
            }
            for f in seq.frames
        ],
        "label": label,
        "provenance": seq.provenance,
        "depth_history": seq.depth_history,
    }


def sequence_from_manifest(data: dict) -> Sequence:
    try:
        frames = [
            FrameSample(
                timestamp_s=f["timestamp_s"],
                box=_box_from_json(f["bbox"]),
                exact_box=_box_from_json(f.get("exact_bbox")),
                depth_m=f.get("depth_m"),
                image_path=f.get("image_path"),
            )
            for f in data["frames"]
        ]
        label = None
        if data.get("label") is not None:
            raw = data["label"]
            alpha_by_gap = raw.get("alpha_by_gap")
            if alpha_by_gap is not None:
                alpha_by_gap = {int(k): v for k, v in alpha_by_gap.items()}
            label = SequenceLabel(
                tau_s=raw["tau_s"],
                alpha_10hz=raw["alpha_10hz"],
                velocity_mps=raw["velocity_mps"],
                q_used=raw.get("q_used"),
                flags=list(raw.get("flags", [])),
                alpha_by_gap=alpha_by_gap,
                depth_m=raw.get("depth_m"),
            )
        history = data.get("depth_history")
        if history is not None:
            history = [(t, y) for t, y in history]
        return Sequence(
            sequence_id=data["sequence_id"],
            fps=data["fps"],
            frames=frames,
            label=label,
            provenance=dict(data.get("provenance", {})),
            depth_history=history,
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed sequence manifest: {exc}") from exc


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, indent=1).encode() + b"\n"


def write_sequence_dir(seq: Sequence, dataset_dir: Path) -> Path:
    """Write frames and manifest under ``dataset_dir/<sequence_id>/``."""
    seq_dir = Path(dataset_dir) / seq.sequence_id
    seq_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        if frame.image is None:
            raise ManifestError(f"frame {i} of {seq.sequence_id} has no raster to write")
        name = f"frame_{i}.png"
        raster = np.clip(np.rint(frame.image * 255.0), 0, 255).astype(np.uint8)
        write_png(seq_dir / name, raster)
        frame.image_path = f"{seq.sequence_id}/{name}"
    (seq_dir / "manifest.json").write_bytes(
        canonical_json_bytes(sequence_to_manifest(seq))
    )
    return seq_dir


def read_sequence_dir(seq_dir: Path) -> Sequence:
    """Read a sequence manifest; frame rasters load lazily."""
    path = Path(seq_dir) / "manifest.json"
    if not path.is_file():
        raise ManifestError(f"no manifest.json under {seq_dir}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {path}") from exc
    return sequence_from_manifest(data)


def write_index(dataset_dir: Path, sequence_ids: list[str], config_hash: str, extra: dict | None = None) -> None:
    index = {
        "config_hash": config_hash,
        "count": len(sequence_ids),
        "sequences": sorted(sequence_ids),
    }
    if extra:
        index.update(extra)
    (Path(dataset_dir) / "index.json").write_bytes(canonical_json_bytes(index))


def read_index(dataset_dir: Path) -> dict:
    path = Path(dataset_dir) / "index.json"
    if not path.is_file():
        raise ManifestError(f"no index.json under {dataset_dir}")
    return json.loads(path.read_text())


def load_dataset(dataset_dir: Path) -> list[Sequence]:
    """Load every indexed sequence (sorted by id); rasters stay lazy."""
    dataset_dir = Path(dataset_dir)
    index = read_index(dataset_dir)
    sequences = []
    for seq_id in index["sequences"]:
        seq = read_sequence_dir(dataset_dir / seq_id)
        for frame in seq.frames:
            if frame.image_path is not None and not Path(frame.image_path).is_absolute():
                frame.image_path = str(dataset_dir / frame.image_path)
        sequences.append(seq)
    return sequences
