"""Labelled synthetic video corpora with detections known by construction.

Each frame is drawn clean, mildly corrupted (blur, burnt-out specular spots
or an exposure shift, with matching low-weight detections) or severely
corrupted (large central debris plus extra clutter). The sidecar carries
the boxes a perfect detector would report, together with a sprinkling of
sub-threshold false alarms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degradation import DegradationSpec, Psf, corrupt, random_trajectory, trajectory_kernel
from .geometry import ArtifactClass, BBox, Detection, Frame
from .synthetic import smooth_texture_composite

LABELS = ("clean", "mild", "severe")


@dataclass
class CorpusFrame:
    frame_id: str
    label: str
    kind: str
    clean: Frame
    corrupted: Frame
    detections: list
    psf: Psf | None = None


def _box_around(r0: int, c0: int, side: int, dims) -> BBox:
    h, w = dims
    return BBox(c0 / w, r0 / h, min(side / w, 1 - c0 / w), min(side / h, 1 - r0 / h))


def _spurious(rng: np.random.Generator) -> list:
    """Occasional low-confidence detections that the 0.25 filter should drop."""
    if rng.random() < 0.3:
        x, y = rng.uniform(0.0, 0.8, 2)
        return [Detection(ArtifactClass(int(rng.integers(0, 6))), BBox(x, y, 0.1, 0.1),
                          float(rng.uniform(0.05, 0.2)))]
    return []


def _clean(img: np.ndarray, rng) -> tuple[np.ndarray, list, str]:
    dets = []
    if rng.random() < 0.5:
        # tiny corner specularity: detected, but well above the keep threshold
        x, y = rng.choice([0.02, 0.9]), rng.choice([0.02, 0.9])
        dets.append(Detection(ArtifactClass.specularity, BBox(x, y, 0.05, 0.05),
                              float(rng.uniform(0.5, 1.0))))
    return img, dets, "clean"


def _mild(img: np.ndarray, rng, seed: int) -> tuple[np.ndarray, list, str, Psf | None]:
    dims = img.shape[:2]
    full = BBox(0.0, 0.0, 1.0, 1.0)
    kind = ("blur", "specularity", "exposure")[int(rng.integers(0, 3))]
    conf = float(rng.uniform(0.5, 1.0))
    if kind == "blur":
        psf = trajectory_kernel(random_trajectory(seed, side=9), side=9)
        out = corrupt(img, DegradationSpec(psf=psf, noise_sigma=0.003), seed)
        return out, [Detection(ArtifactClass.blur, full, conf)], kind, psf
    if kind == "exposure":
        gamma = float(rng.choice([0.6, 1.6]))
        out = corrupt(img, DegradationSpec(gamma=gamma), seed)
        label = ArtifactClass.saturation if gamma < 1 else ArtifactClass.contrast
        return out, [Detection(label, full, conf)], kind, None
    out = img.copy()
    dets = []
    h, w = dims
    for _ in range(int(rng.integers(1, 4))):
        side = int(rng.integers(4, 9))
        r0, c0 = int(rng.integers(0, h - side)), int(rng.integers(0, w - side))
        out[r0:r0 + side, c0:c0 + side] = 1.0
        dets.append(Detection(ArtifactClass.specularity, _box_around(r0, c0, side, dims), conf))
    return out, dets, kind, None


def _severe(img: np.ndarray, rng, seed: int) -> tuple[np.ndarray, list, str]:
    h, w = img.shape[:2]
    out = img.copy()
    side = float(rng.uniform(0.7, 0.85))
    x0 = y0 = (1 - side) / 2
    r0, r1 = int(y0 * h), int((y0 + side) * h)
    c0, c1 = int(x0 * w), int((x0 + side) * w)
    debris = np.random.default_rng(seed).uniform(0.0, 0.4, (r1 - r0, c1 - c0, 1))
    out[r0:r1, c0:c1] = debris * np.array([0.9, 0.8, 0.5])[: img.shape[2]]
    dets = [Detection(ArtifactClass.misc_artifact, BBox(x0, y0, side, side),
                      float(rng.uniform(0.5, 1.0))),
            Detection(ArtifactClass.specularity, BBox(0.05, 0.4, 0.1, 0.1), 0.6)]
    return np.clip(out, 0, 1), dets, "debris"


def simulate_corpus(n_frames: int = 500, fractions=(0.6, 0.3, 0.1), size: int = 128,
                    seed: int = 0, channels: int = 3) -> list[CorpusFrame]:
    """Build a shuffled corpus with exact label proportions (rounded)."""
    if n_frames < 0:
        raise ValueError("n_frames must be >= 0")
    if len(fractions) != 3 or abs(sum(fractions) - 1) > 1e-9 or min(fractions) < 0:
        raise ValueError("fractions must be three nonnegative values summing to 1")
    counts = [int(round(f * n_frames)) for f in fractions[:2]]
    counts.append(n_frames - sum(counts))
    labels = np.repeat(np.array(LABELS), counts)
    rng = np.random.default_rng(seed)
    rng.shuffle(labels)
    corpus = []
    for i, label in enumerate(labels):
        frame_seed = int(rng.integers(0, 2 ** 31))
        frng = np.random.default_rng(frame_seed)
        img = smooth_texture_composite(size, seed=frame_seed, channels=channels)
        psf = None
        if label == "clean":
            out, dets, kind = _clean(img, frng)
        elif label == "mild":
            out, dets, kind, psf = _mild(img, frng, frame_seed)
        else:
            out, dets, kind = _severe(img, frng, frame_seed)
        dets = dets + _spurious(frng)
        fid = f"{i:05d}"
        corpus.append(CorpusFrame(fid, str(label), kind, Frame(img, index=i),
                                  Frame(out, index=i), dets, psf))
    return corpus
