"""Detector-agnostic evaluation: greedy matching, per-class AP and mAP.

AP uses all-points interpolation: the precision curve is replaced by its
upper envelope (running maximum from the right) and integrated over recall.
Values are reported in percent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import ArtifactClass, Detection, iou

DEFAULT_THRESHOLDS = (0.05, 0.25, 0.50)


@dataclass
class EvalDataset:
    """Ground truth and predictions keyed by frame id.

    Ground-truth entries are `Detection` objects too; their confidence is
    ignored.
    """

    ground_truth: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)

    def __post_init__(self):
        stray = set(self.predictions) - set(self.ground_truth)
        if stray:
            raise ValueError(f"predictions reference unknown frame ids: {sorted(stray)}")

    @property
    def frame_ids(self) -> list:
        return list(self.ground_truth)

    @property
    def n_predictions(self) -> int:
        return sum(len(p) for p in self.predictions.values())

    def classes_present(self) -> list[ArtifactClass]:
        present = {g.label for gts in self.ground_truth.values() for g in gts}
        return sorted(present)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one frame's predictions at one threshold.

    ``matches`` holds ``(pred_index, gt_index, iou)`` triples; indices refer to
    the caller's input lists.
    """

    matches: tuple
    false_positives: tuple
    missed: tuple


def match_predictions(preds: Sequence[Detection], gts: Sequence[Detection],
                      iou_thr: float) -> MatchResult:
    """Greedy confidence-ordered matching.

    Predictions are visited by descending confidence (ties keep input order)
    and each claims the unmatched same-class GT with the highest IoU, provided
    that IoU reaches `iou_thr`.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = [False] * len(gts)
    matches, fps = [], []
    for pi in order:
        p = preds[pi]
        best, best_iou = -1, -1.0
        for gi, g in enumerate(gts):
            if taken[gi] or g.label != p.label:
                continue
            v = iou(p.box, g.box)
            if v >= iou_thr and v > best_iou:
                best, best_iou = gi, v
        if best >= 0:
            taken[best] = True
            matches.append((pi, best, best_iou))
        else:
            fps.append(pi)
    missed = tuple(gi for gi, t in enumerate(taken) if not t)
    return MatchResult(tuple(matches), tuple(fps), missed)


def _ranked_hits(dataset: EvalDataset, label: ArtifactClass, iou_thr: float):
    """Per-prediction (confidence, is_tp, iou) for `label` plus the GT count."""
    records = []
    n_gt = 0
    for order, fid in enumerate(dataset.frame_ids):
        gts = [g for g in dataset.ground_truth[fid] if g.label == label]
        preds = [p for p in dataset.predictions.get(fid, ()) if p.label == label]
        n_gt += len(gts)
        res = match_predictions(preds, gts, iou_thr)
        hit = {pi: v for pi, _, v in res.matches}
        for pi, p in enumerate(preds):
            # (frame order, in-frame index) breaks confidence ties by input order
            records.append((-p.confidence, order, pi, pi in hit, hit.get(pi, 0.0)))
    records.sort(key=lambda r: r[:3])
    return records, n_gt


def pr_curve(dataset: EvalDataset, label: ArtifactClass, iou_thr: float) -> list[tuple[float, float]]:
    """One ``(recall, precision)`` point per ranked prediction."""
    records, n_gt = _ranked_hits(dataset, label, iou_thr)
    if not records or n_gt == 0:
        return []
    tp = np.cumsum([r[3] for r in records], dtype=np.float64)
    ranks = np.arange(1, len(records) + 1, dtype=np.float64)
    return list(zip((tp / n_gt).tolist(), (tp / ranks).tolist()))


def _envelope_area(recall: np.ndarray, precision: np.ndarray) -> float:
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def average_precision(dataset: EvalDataset, label: ArtifactClass, iou_thr: float) -> float | None:
    """All-points interpolated AP in percent; ``None`` when the class has no GT."""
    records, n_gt = _ranked_hits(dataset, label, iou_thr)
    if n_gt == 0:
        return None
    if not records:
        return 0.0
    curve = pr_curve(dataset, label, iou_thr)
    rec, prec = (np.array(v) for v in zip(*curve))
    return 100.0 * _envelope_area(rec, prec)


def mean_average_precision(dataset: EvalDataset, iou_thr: float) -> float | None:
    aps = [average_precision(dataset, c, iou_thr) for c in dataset.classes_present()]
    aps = [a for a in aps if a is not None]
    if not aps:
        return None
    return float(np.mean(aps))


def mean_match_iou(dataset: EvalDataset, iou_thr: float = 0.25) -> float | None:
    ious = []
    for fid in dataset.frame_ids:
        preds = list(dataset.predictions.get(fid, ()))
        res = match_predictions(preds, dataset.ground_truth[fid], iou_thr)
        ious.extend(v for _, _, v in res.matches)
    return float(np.mean(ious)) if ious else None


@dataclass
class EvalResult:
    per_class_ap: dict
    map: dict
    mean_iou_25: float | None
    n_predictions: int
    n_ground_truth: int
    pr_curves: dict

    def to_dict(self) -> dict:
        return {
            "map": {f"{round(t * 100)}": v for t, v in self.map.items()},
            "per_class_ap": {
                f"{round(t * 100)}": {c.name: ap for c, ap in sorted(aps.items())}
                for t, aps in self.per_class_ap.items()
            },
            "mean_iou_25": self.mean_iou_25,
            "n_predictions": self.n_predictions,
            "n_ground_truth": self.n_ground_truth,
        }


def evaluate(dataset: EvalDataset, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> EvalResult:
    per_class, maps, curves = {}, {}, {}
    classes = dataset.classes_present()
    for thr in thresholds:
        per_class[thr] = {c: average_precision(dataset, c, thr) for c in classes}
        aps = list(per_class[thr].values())
        maps[thr] = float(np.mean(aps)) if aps else None
        curves[thr] = {c: pr_curve(dataset, c, thr) for c in classes}
    n_gt = sum(len(g) for g in dataset.ground_truth.values())
    return EvalResult(per_class, maps, mean_match_iou(dataset, 0.25),
                      dataset.n_predictions, n_gt, curves)


def write_pr_csv(curve: Sequence[tuple[float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["recall", "precision"])
        for r, p in curve:
            writer.writerow([repr(float(r)), repr(float(p))])


def dataset_from_sidecars(ground_truth: Mapping, predictions: Mapping) -> EvalDataset:
    """Build an `EvalDataset` from parsed sidecars (frame id -> detections)."""
    gt = {fid: list(d) for fid, d in ground_truth.items()}
    preds = {fid: list(d) for fid, d in predictions.items() if d}
    return EvalDataset(gt, preds)
