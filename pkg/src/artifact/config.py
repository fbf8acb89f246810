"""Run configuration: every tunable constant in one JSON-serializable object."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .degradation import DegradationSpec
from .restoration.tv import TvParams
from .scoring import QualityConfig


@dataclass
class RunConfig:
    """Aggregated settings for scoring, planning, restoration and simulation.

    ``dilation_radius`` is expressed for a 512-pixel frame and scaled with the
    larger frame dimension at run time.
    """

    quality: QualityConfig = field(default_factory=QualityConfig)
    tv: TvParams = field(default_factory=TvParams)
    inpaint_tv: TvParams = field(default_factory=lambda: TvParams(max_iters=3000))
    inpaint_method: str = "tv"
    patch_side: int = 9
    dilation_radius: int = 4
    confidence_threshold: float = 0.25
    intensity_ceiling: float = 0.9
    degradation: DegradationSpec = field(default_factory=DegradationSpec)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.inpaint_method not in ("tv", "patch"):
            raise ValueError(f"inpaint_method must be 'tv' or 'patch', got {self.inpaint_method!r}")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must lie in [0, 1]")
        if not 0.0 < self.intensity_ceiling <= 1.0:
            raise ValueError("intensity_ceiling must lie in (0, 1]")
        if self.patch_side < 1 or self.patch_side % 2 == 0:
            raise ValueError("patch_side must be a positive odd integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def dilation_for(self, dims) -> int:
        return int(round(self.dilation_radius * max(dims) / 512))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.to_dict() if hasattr(v, "to_dict") else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        if "quality" in kw:
            kw["quality"] = QualityConfig.from_dict(kw["quality"])
        for key in ("tv", "inpaint_tv"):
            if key in kw:
                kw[key] = TvParams.from_dict(kw[key])
        if "degradation" in kw:
            kw["degradation"] = DegradationSpec.from_dict(kw["degradation"])
        return cls(**kw)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
