"""Frames, boxes and masks shared by every other module.

Pixel data is stored as ``float64`` arrays of shape ``(H, W, C)`` with values
in ``[0, 1]``. Box coordinates are normalized to the unit square with the
origin at the top-left corner. Masks are plain boolean arrays of shape
``(H, W)`` where ``True`` marks an unknown / corrupted pixel.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

BOX_EPS = 1e-9


class ArtifactClass(enum.IntEnum):
    """The six artifact categories, with their stable file-format codes."""

    blur = 0
    bubbles = 1
    specularity = 2
    saturation = 3
    contrast = 4
    misc_artifact = 5


@dataclass(frozen=True)
class Frame:
    """A single video frame.

    Attributes
    ----------
    pixels : ndarray
        ``(H, W, C)`` float array in ``[0, 1]``; ``C`` is 1 or 3. A 2-D array
        is accepted and promoted to one channel.
    index : int
        Position of the frame in its sequence.
    bit_depth_source : int
        8 or 16; the bit depth the frame was read from, reused when writing.
    """

    pixels: np.ndarray
    index: int = 0
    bit_depth_source: int = 8

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"frame pixels must be (H, W, 1|3), got {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("frame must have positive width and height")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("frame values must lie in [0, 1]")
        if self.bit_depth_source not in (8, 16):
            raise ValueError("bit_depth_source must be 8 or 16")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def dims(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    def with_pixels(self, pixels) -> "Frame":
        return replace(self, pixels=np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0))


def pixels_of(image) -> np.ndarray:
    """Return the float pixel array behind a `Frame` or array-like."""
    if isinstance(image, Frame):
        return image.pixels
    return np.asarray(image, dtype=np.float64)


def rewrap(template, pixels):
    """Return `pixels` as the same kind of object as `template`."""
    if isinstance(template, Frame):
        return template.with_pixels(np.reshape(pixels, template.pixels.shape))
    return pixels


@dataclass(frozen=True)
class BBox:
    """Normalized axis-aligned box ``(x, y, w, h)``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinate in {vals}")
        if self.x < -BOX_EPS or self.y < -BOX_EPS:
            raise ValueError(f"box origin outside the unit square: {vals}")
        if self.w <= 0 or self.h <= 0 or self.w > 1 + BOX_EPS or self.h > 1 + BOX_EPS:
            raise ValueError(f"box extents must lie in (0, 1]: {vals}")
        if self.x + self.w > 1 + BOX_EPS or self.y + self.h > 1 + BOX_EPS:
            raise ValueError(f"box extends past the unit square: {vals}")

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2, self.y + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    label: ArtifactClass
    box: BBox
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "label", ArtifactClass(self.label))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two normalized boxes."""
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def area_fraction(box: BBox) -> float:
    return box.w * box.h


_LOCATION_WEIGHTS = {0: 0.125, 1: 0.25, 2: 0.5}


def location_cell(box: BBox) -> tuple[int, int]:
    """(row, col) of the 3x3 grid cell containing the box center."""
    cx, cy = box.center
    col = min(max(int(cx * 3), 0), 2)
    row = min(max(int(cy * 3), 0), 2)
    return row, col


def location_weight(box: BBox) -> float:
    """0.5 for the central cell, 0.25 for edge cells, 0.125 for corners."""
    row, col = location_cell(box)
    return _LOCATION_WEIGHTS[(row == 1) + (col == 1)]


def dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a ``(2r+1)`` square structuring element."""
    if radius < 0:
        raise ValueError("dilation radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0 or not mask.any():
        return mask.copy()
    side = 2 * radius + 1
    # Square element is separable; the 1-D passes are much cheaper than a 2-D one.
    out = ndimage.binary_dilation(mask, structure=np.ones((side, 1), dtype=bool))
    return ndimage.binary_dilation(out, structure=np.ones((1, side), dtype=bool))


def _round_half_away(v: float) -> int:
    return int(math.floor(abs(v) + 0.5)) * (1 if v >= 0 else -1)


def box_to_slices(box: BBox, dims: Sequence[int]) -> tuple[slice, slice]:
    """Pixel row/column slices covered by `box` on a raster of `dims` (H, W).

    Edges are rounded half-away-from-zero; every box covers at least one
    pixel.
    """
    h, w = dims
    c0 = min(max(_round_half_away(box.x * w), 0), w - 1)
    r0 = min(max(_round_half_away(box.y * h), 0), h - 1)
    c1 = min(max(_round_half_away((box.x + box.w) * w), c0 + 1), w)
    r1 = min(max(_round_half_away((box.y + box.h) * h), r0 + 1), h)
    return slice(r0, r1), slice(c0, c1)


def boxes_to_mask(dets: Iterable[Detection], dims: Sequence[int], radius: int = 0) -> np.ndarray:
    mask = np.zeros(tuple(dims), dtype=bool)
    for det in dets:
        mask[box_to_slices(det.box, dims)] = True
    return dilate_mask(mask, radius)
