"""Frame quality score and triage.

The score penalises every detected box by its class weight times a blend of
its area fraction and a coarse location weight:

    QS = max(0, 1 - sum_b (lambda_A * W_C * W_A + lambda_L * W_C * W_L))

Frames with only a few boxes switch to a heavier lambda pair so that a
single large artifact is not under-penalised.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import Sequence

from .geometry import ArtifactClass, Detection, area_fraction, location_weight

DEFAULT_CLASS_WEIGHTS = {
    ArtifactClass.misc_artifact: 0.50,
    ArtifactClass.specularity: 0.20,
    ArtifactClass.saturation: 0.10,
    ArtifactClass.blur: 0.05,
    ArtifactClass.contrast: 0.05,
    ArtifactClass.bubbles: 0.10,
}


class Disposition(str, enum.Enum):
    discard = "discard"
    restore = "restore"
    keep = "keep"


@dataclass
class QualityConfig:
    """Weights and thresholds for `quality_score` and `triage`.

    ``small_count_cutoff`` boxes or more use ``(lambda_area, lambda_location)``;
    fewer boxes use ``small_count_lambdas``.
    """

    class_weights: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_WEIGHTS))
    lambda_area: float = 0.5
    lambda_location: float = 0.5
    small_count_cutoff: int = 5
    small_count_lambdas: tuple = (1.0, 1.0)
    discard_below: float = 0.5
    keep_above: float = 0.95

    def __post_init__(self):
        weights = {ArtifactClass(k) if not isinstance(k, str) else ArtifactClass[k]: float(v)
                   for k, v in self.class_weights.items()}
        missing = set(ArtifactClass) - set(weights)
        if missing:
            raise ValueError(f"class weights missing for {sorted(c.name for c in missing)}")
        if any(v < 0 for v in weights.values()):
            raise ValueError("class weights must be >= 0")
        self.class_weights = weights
        self.small_count_lambdas = tuple(float(v) for v in self.small_count_lambdas)
        lambdas = (self.lambda_area, self.lambda_location) + self.small_count_lambdas
        if len(self.small_count_lambdas) != 2 or any(v < 0 for v in lambdas):
            raise ValueError("lambda weights must be two nonnegative pairs")
        if not 0.0 <= self.discard_below <= self.keep_above <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= discard_below <= keep_above <= 1")

    def lambdas_for(self, n_boxes: int) -> tuple[float, float]:
        if n_boxes < self.small_count_cutoff:
            return self.small_count_lambdas
        return self.lambda_area, self.lambda_location

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["class_weights"] = {c.name: w for c, w in sorted(self.class_weights.items())}
        out["small_count_lambdas"] = list(self.small_count_lambdas)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "QualityConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown quality config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class BoxContribution:
    detection: Detection
    area_term: float
    location_term: float


@dataclass(frozen=True)
class QualityReport:
    qs: float
    disposition: Disposition
    contributions: tuple = ()

    @property
    def penalty(self) -> float:
        return sum(c.area_term + c.location_term for c in self.contributions)


def triage(qs: float, cfg: QualityConfig | None = None) -> Disposition:
    cfg = cfg or QualityConfig()
    if qs < cfg.discard_below:
        return Disposition.discard
    if qs > cfg.keep_above:
        return Disposition.keep
    return Disposition.restore


def quality_score(dets: Sequence[Detection], cfg: QualityConfig | None = None) -> QualityReport:
    """Score a frame from its detections and route it.

    Raises
    ------
    ValueError
        If a detection carries an unknown class code.
    """
    cfg = cfg or QualityConfig()
    lam_a, lam_l = cfg.lambdas_for(len(dets))
    contributions = []
    for det in dets:
        label = ArtifactClass(det.label)
        wc = cfg.class_weights[label]
        contributions.append(BoxContribution(
            det, lam_a * wc * area_fraction(det.box), lam_l * wc * location_weight(det.box)))
    penalty = sum(c.area_term + c.location_term for c in contributions)
    qs = min(1.0, max(0.0, 1.0 - penalty))
    return QualityReport(qs, triage(qs, cfg), tuple(contributions))
