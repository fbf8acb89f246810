"""Per-frame triage and sequential restoration, plus video-level accounting.

Mildly corrupted frames go through at most three stages in a fixed order:
whole-frame deblurring, whole-frame exposure correction with colour
re-transfer, then inpainting of the dilated artifact boxes.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import RunConfig
from .degradation import Psf
from .geometry import ArtifactClass, Detection, Frame, boxes_to_mask
from .metrics import psnr, ssim
from .restoration import (color_retransfer, color_stats, estimate_gamma, exposure_correct,
                          patch_inpaint, tv_deconvolve, tv_inpaint)
from .scoring import Disposition, quality_score

log = logging.getLogger(__name__)

_INPAINT_CLASSES = (ArtifactClass.specularity, ArtifactClass.bubbles, ArtifactClass.misc_artifact)
_EXPOSURE_CLASSES = (ArtifactClass.saturation, ArtifactClass.contrast)


class Stage(str, enum.Enum):
    deblur = "deblur"
    exposure = "exposure_crt"
    inpaint = "inpaint"


_ORDER = {Stage.deblur: 0, Stage.exposure: 1, Stage.inpaint: 2}


@dataclass(frozen=True)
class PlanStage:
    stage: Stage
    detections: tuple = ()
    mask: np.ndarray | None = None
    direction: str | None = None


@dataclass(frozen=True)
class RestorationPlan:
    stages: tuple = ()

    def __post_init__(self):
        kinds = [s.stage for s in self.stages]
        if len(set(kinds)) != len(kinds):
            raise ValueError("a stage may appear at most once")
        if kinds != sorted(kinds, key=_ORDER.__getitem__):
            raise ValueError("stages must run deblur -> exposure -> inpaint")
        for s in self.stages:
            if s.stage is Stage.inpaint and s.mask is None:
                raise ValueError("inpaint stage needs a mask")

    @property
    def names(self) -> list[str]:
        return [s.stage.value for s in self.stages]


def plan_restoration(dets: Sequence[Detection], dims, cfg: RunConfig | None = None) -> RestorationPlan:
    """Choose restoration stages from the artifact classes present."""
    cfg = cfg or RunConfig()
    stages = []
    blur = tuple(d for d in dets if d.label is ArtifactClass.blur)
    if blur:
        stages.append(PlanStage(Stage.deblur, blur))
    expo = tuple(d for d in dets if d.label in _EXPOSURE_CLASSES)
    if expo:
        sat = sum(d.box.area for d in expo if d.label is ArtifactClass.saturation)
        con = sum(d.box.area for d in expo if d.label is ArtifactClass.contrast)
        stages.append(PlanStage(Stage.exposure, expo,
                                direction="saturation" if sat >= con else "low_contrast"))
    local = tuple(d for d in dets if d.label in _INPAINT_CLASSES)
    if local:
        mask = boxes_to_mask(local, dims, cfg.dilation_for(dims))
        stages.append(PlanStage(Stage.inpaint, local, mask=mask))
    return RestorationPlan(tuple(stages))


@dataclass
class FrameLog:
    frame_id: str
    index: int = 0
    qs: float | None = None
    disposition: Disposition = Disposition.discard
    stages: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    reason: str | None = None
    psnr_pre: float | None = None
    psnr_post: float | None = None
    ssim_pre: float | None = None
    ssim_post: float | None = None
    qs_post: float | None = None

    def to_row(self) -> dict:
        row = dict(self.__dict__)
        row["disposition"] = self.disposition.value
        return row


def _inpaint(x: np.ndarray, mask: np.ndarray, cfg: RunConfig) -> np.ndarray:
    if cfg.inpaint_method == "patch":
        return patch_inpaint(x, mask, cfg.patch_side, fallback=cfg.inpaint_tv)
    return tv_inpaint(x, mask, cfg.inpaint_tv)


def restore_frame(frame: Frame, plan: RestorationPlan, cfg: RunConfig | None = None,
                  psf: Psf | None = None, frame_id: str | None = None) -> tuple[Frame | None, FrameLog]:
    """Run the plan's stages in order.

    Whole-frame stages may touch every pixel; the inpaint stage only writes
    inside its mask. If any stage fails the frame is returned as ``None``
    with a discard disposition and the failure recorded in the log.

    Parameters
    ----------
    psf : Psf, optional
        Known blur kernel for the deblur stage. Without it a Gaussian of std
        ``cfg.tv.kernel_radius`` is assumed.
    """
    cfg = cfg or RunConfig()
    flog = FrameLog(frame_id if frame_id is not None else str(frame.index), frame.index,
                    disposition=Disposition.restore)
    x = frame.pixels
    for st in plan.stages:
        try:
            if st.stage is Stage.deblur:
                x = tv_deconvolve(x, psf, cfg.tv)
            elif st.stage is Stage.exposure:
                x = _exposure_stage(x, st.direction, cfg, flog)
            else:
                if st.mask.all():
                    raise ValueError("inpaint mask covers the whole frame")
                filled = _inpaint(x, st.mask, cfg)
                x = np.where(st.mask[:, :, None], filled, x)
        except Exception as exc:  # any stage failure discards the frame
            log.warning("frame %s: %s stage failed: %s", flog.frame_id, st.stage.value, exc)
            flog.disposition = Disposition.discard
            flog.reason = f"{st.stage.value} failed: {exc}"
            return None, flog
        flog.stages.append(st.stage.value)
    if not plan.stages:
        return frame, flog
    return frame.with_pixels(x), flog


def _exposure_stage(x: np.ndarray, direction: str, cfg: RunConfig, flog: FrameLog) -> np.ndarray:
    ceiling = cfg.intensity_ceiling
    if estimate_gamma(x, ceiling) is None:
        flog.warnings.append("exposure: degenerate frame, left unchanged")
        return x
    src = color_stats(x, ceiling)
    corrected = exposure_correct(x, direction, ceiling)
    tgt = color_stats(corrected, ceiling)
    if np.linalg.eigvalsh(tgt.cov).min() <= 1e-12:
        flog.warnings.append("crt: singular target covariance regularized")
    return color_retransfer(corrected, src, tgt)


@dataclass
class VideoReport:
    total: int = 0
    kept: int = 0
    restored: int = 0
    discarded: int = 0
    baseline_kept: int = 0
    class_histogram: dict = field(default_factory=dict)
    confidence_threshold: float = 0.25

    def fraction(self, count: int) -> float:
        return count / self.total if self.total else 0.0

    @property
    def retained_fraction(self) -> float:
        return self.fraction(self.kept + self.restored)

    @property
    def baseline_retained_fraction(self) -> float:
        return self.fraction(self.baseline_kept)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "restored": self.restored,
            "discarded": self.discarded,
            "fractions": {
                "kept": self.fraction(self.kept),
                "restored": self.fraction(self.restored),
                "discarded": self.fraction(self.discarded),
            },
            "retained_fraction": self.retained_fraction,
            "baseline_retained_fraction": self.baseline_retained_fraction,
            "class_histogram": {c.name: self.class_histogram.get(c.name, 0) for c in ArtifactClass},
            "confidence_threshold": self.confidence_threshold,
        }


FrameSource = Frame | Callable[[], Frame]


@dataclass
class FrameResult:
    frame: Frame | None
    log: FrameLog
    detections: list


def _process_one(fid: str, index: int, source: FrameSource, dets: Sequence[Detection],
                 cfg: RunConfig, clean: Frame | None, psf: Psf | None, rescore) -> FrameResult:
    dets = [d for d in dets if d.confidence >= cfg.confidence_threshold]
    report = quality_score(dets, cfg.quality)
    try:
        frame = source() if callable(source) else source
    except (OSError, ValueError) as exc:
        flog = FrameLog(fid, index, report.qs, Disposition.discard, reason=f"io: {exc}")
        return FrameResult(None, flog, dets)

    if report.disposition is Disposition.keep:
        out, flog = frame, FrameLog(fid, index, report.qs, Disposition.keep)
    elif report.disposition is Disposition.discard:
        out, flog = None, FrameLog(fid, index, report.qs, Disposition.discard, reason="qs below threshold")
    else:
        plan = plan_restoration(dets, frame.dims, cfg)
        out, flog = restore_frame(frame, plan, cfg, psf, fid)
        flog.index, flog.qs = index, report.qs
        if out is not None and rescore is not None:
            flog.qs_post = quality_score(rescore(out), cfg.quality).qs

    if clean is not None:
        flog.psnr_pre, flog.ssim_pre = psnr(clean, frame), ssim(clean, frame)
        if out is not None:
            flog.psnr_post, flog.ssim_post = psnr(clean, out), ssim(clean, out)
    return FrameResult(out, flog, dets)


def process_video(frames: Mapping[str, FrameSource], sidecar: Mapping[str, Sequence[Detection]],
                  cfg: RunConfig | None = None, ground_truth: Mapping[str, Frame] | None = None,
                  psfs: Mapping[str, Psf] | None = None, threads: int | None = None,
                  rescore: Callable[[Frame], Sequence[Detection]] | None = None):
    """Triage and restore every frame of a video.

    Parameters
    ----------
    frames : mapping of frame id to Frame or zero-argument loader
        Iteration order is the output order. A loader raising ``OSError`` or
        ``ValueError`` counts as a discarded frame.
    sidecar : mapping of frame id to detections
        Missing ids mean no detections.
    ground_truth : mapping of frame id to clean Frame, optional
        Enables pre/post PSNR and SSIM in the logs.
    psfs : mapping of frame id to Psf, optional
        Known blur kernels for deblurring.
    rescore : callable, optional
        Detector applied to restored frames; its score is logged as ``qs_post``.

    Returns
    -------
    report : VideoReport
    logs : list of FrameLog
    outputs : list of Frame or None
        Keep frames are passed through as the same object; discarded frames
        are ``None``.
    """
    cfg = cfg or RunConfig()
    threads = threads or cfg.threads
    ground_truth = ground_truth or {}
    psfs = psfs or {}
    jobs = [(fid, i, src, sidecar.get(fid, ()), cfg, ground_truth.get(fid), psfs.get(fid), rescore)
            for i, (fid, src) in enumerate(frames.items())]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda j: _process_one(*j), jobs))
    else:
        results = [_process_one(*j) for j in jobs]

    counts = Counter(r.log.disposition for r in results)
    hist = Counter(d.label.name for r in results for d in r.detections)
    report = VideoReport(
        total=len(results),
        kept=counts[Disposition.keep],
        restored=counts[Disposition.restore],
        discarded=counts[Disposition.discard],
        baseline_kept=sum(1 for r in results
                          if not r.detections and not (r.log.reason or "").startswith("io:")),
        class_histogram=dict(hist),
        confidence_threshold=cfg.confidence_threshold,
    )
    return report, [r.log for r in results], [r.frame for r in results]


def baseline_retention(sidecar: Mapping[str, Sequence[Detection]], frame_ids: Sequence[str],
                       confidence_threshold: float = 0.25) -> float:
    """Fraction kept by the rule that discards any frame with a detection."""
    if not frame_ids:
        return 0.0
    kept = sum(1 for fid in frame_ids
               if not any(d.confidence >= confidence_threshold for d in sidecar.get(fid, ())))
    return kept / len(frame_ids)
