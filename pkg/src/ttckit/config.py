"""Run configuration tree: serializable, hashable, CLI-facing.

Every on-disk artifact embeds ``config_hash(cfg)`` so downstream steps
can refuse mismatched inputs.  Hashing uses a canonical JSON encoding
(sorted keys, minimal separators, shortest-repr floats), which is stable
across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import DomainError
from .estimate import ScaleSearchConfig
from .learn import TrainConfig
from .synth import CameraModel, NoiseModel, PlanarTarget, checker_texture, noise_texture


def _from_dict(cls, data: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise DomainError(f"unknown config keys under {path}: {sorted(unknown)}")
    kwargs = {}
    for f in fields(cls):
        if f.name in data:
            value = data[f.name]
            if isinstance(value, list) and "tuple" in str(f.type):
                value = tuple(value)
            kwargs[f.name] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class CameraConfig:
    f: float = 1000.0
    cx: float | None = None
    cy: float | None = None
    width: int = 1024
    height: int = 576

    def to_model(self) -> CameraModel:
        cx = self.width / 2.0 if self.cx is None else self.cx
        cy = self.height / 2.0 if self.cy is None else self.cy
        return CameraModel(f=self.f, cx=cx, cy=cy, width=self.width, height=self.height)


@dataclass(frozen=True)
class TargetConfig:
    physical_width: float = 2.0
    physical_height: float = 2.0
    texture: str = "noise"  # "noise" | "checker"
    texture_seed: int = 7
    texture_low: float = 0.25
    texture_high: float = 0.95
    lateral_offset_x: float = 0.0
    vertical_offset_z: float = 0.0

    def to_target(self, seed_offset: int = 0) -> PlanarTarget:
        if self.texture == "noise":
            tex = noise_texture(self.texture_seed + seed_offset,
                                low=self.texture_low, high=self.texture_high)
        elif self.texture == "checker":
            tex = checker_texture(low=self.texture_low, high=self.texture_high)
        else:
            raise DomainError(f"unknown texture kind {self.texture!r}")
        return PlanarTarget(
            self.physical_width,
            self.physical_height,
            tex,
            lateral_offset_x=self.lateral_offset_x,
            vertical_offset_z=self.vertical_offset_z,
        )


@dataclass(frozen=True)
class SynthConfig:
    templates: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    variants_per_template: int = 2
    sequences_per_variant: int = 1
    fps: float = 10.0
    length: int = 6
    start_min: float = 0.7
    background: float = 0.08
    vary_texture: bool = True  # new texture seed per sequence


@dataclass(frozen=True)
class RunConfig:
    camera: CameraConfig = field(default_factory=CameraConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    synth: SynthConfig = field(default_factory=SynthConfig)
    search_pixel: ScaleSearchConfig = field(default_factory=ScaleSearchConfig.pixel_defaults)
    search_feature: ScaleSearchConfig = field(default_factory=ScaleSearchConfig.feature_defaults)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        sub = {
            "camera": CameraConfig,
            "target": TargetConfig,
            "noise": NoiseModel,
            "synth": SynthConfig,
            "search_pixel": ScaleSearchConfig,
            "search_feature": ScaleSearchConfig,
            "train": TrainConfig,
        }
        kwargs = {}
        for name, sub_cls in sub.items():
            if name in data:
                kwargs[name] = _from_dict(sub_cls, data[name], name)
        if "seed" in data:
            kwargs["seed"] = data["seed"]
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise DomainError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {path}: {exc}") from exc
        return cls.from_dict(data)


def canonical_config_json(cfg: RunConfig) -> bytes:
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_config_json(cfg)).hexdigest()[:16]
