"""Colour statistics transfer and global exposure correction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..geometry import pixels_of, rewrap

DEFAULT_CEILING = 0.9
SINGULAR_DELTA = 1e-8


class SingularCovarianceWarning(RuntimeWarning):
    """Target covariance was singular and had to be regularized."""


class DegenerateFrameWarning(RuntimeWarning):
    """Frame carries no usable tonal information; returned unchanged."""


@dataclass(frozen=True)
class ColorStats:
    mean: np.ndarray
    cov: np.ndarray
    count: int
    mask: np.ndarray | None = None


def _flat(px: np.ndarray) -> np.ndarray:
    return px.reshape(-1, px.shape[2]) if px.ndim == 3 else px.reshape(-1, 1)


def sub_ceiling_mask(image, ceiling: float = DEFAULT_CEILING) -> np.ndarray:
    """Pixels whose brightest channel is below `ceiling`."""
    px = pixels_of(image)
    return (px.max(axis=2) if px.ndim == 3 else px) < ceiling


def color_stats(image, ceiling: float = DEFAULT_CEILING) -> ColorStats:
    """Mean and (population) covariance over the sub-ceiling pixels.

    Raises
    ------
    ValueError
        If fewer than two pixels fall below the ceiling.
    """
    px = pixels_of(image)
    mask = sub_ceiling_mask(px, ceiling)
    sel = _flat(px)[mask.ravel()]
    if len(sel) < 2:
        raise ValueError(f"only {len(sel)} pixels below the {ceiling} intensity ceiling")
    mean = sel.mean(axis=0)
    centered = sel - mean
    # second pass removes the rounding left in the mean (constant frames give exactly 0)
    centered -= centered.mean(axis=0)
    cov = centered.T @ centered / len(sel)
    return ColorStats(mean, (cov + cov.T) / 2, len(sel), mask)


def _sym_power(m: np.ndarray, power: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals ** power) @ vecs.T


def retransfer_matrix(src: ColorStats, tgt: ColorStats) -> np.ndarray:
    """``src.cov^(1/2) @ tgt.cov^(-1/2)``; warns and regularizes if singular."""
    cov_t = tgt.cov
    if np.linalg.eigvalsh(cov_t).min() <= 1e-12:
        warnings.warn("target covariance is singular; adding delta*I", SingularCovarianceWarning,
                      stacklevel=3)
        cov_t = cov_t + SINGULAR_DELTA * np.eye(len(cov_t))
    return _sym_power(src.cov, 0.5) @ _sym_power(cov_t, -0.5)


def color_retransfer(target, src_stats: ColorStats, tgt_stats: ColorStats, clamp: bool = True):
    """Recolour `target` so its statistics move from `tgt_stats` to `src_stats`.

    Every pixel goes through ``A (I - mu_t) + mu_s`` with
    ``A = Sigma_s^(1/2) Sigma_t^(-1/2)``.
    """
    px = pixels_of(target)
    a = retransfer_matrix(src_stats, tgt_stats)
    flat = _flat(px)
    out = (flat - tgt_stats.mean) @ a.T + src_stats.mean
    out = out.reshape(px.shape)
    if clamp:
        out = np.clip(out, 0.0, 1.0)
        return rewrap(target, out)
    return out


def _shoulder(v: np.ndarray, knee: float) -> np.ndarray:
    """Identity below `knee`, smooth tanh roll-off towards 1 above it."""
    room = 1.0 - knee
    above = v > knee
    out = v.copy()
    out[above] = knee + room * np.tanh((v[above] - knee) / room)
    return out


def estimate_gamma(image, ceiling: float = DEFAULT_CEILING) -> float | None:
    """Exposure exponent ``g`` such that the sub-ceiling median equals ``0.5 ** g``.

    Clamped to ``[0.3, 3]``. ``None`` when nothing is below the ceiling or the
    median is 0, where no exponent maps it to 0.5.
    """
    px = pixels_of(image)
    inten = px.mean(axis=2) if px.ndim == 3 else px
    sel = inten[sub_ceiling_mask(px, ceiling)]
    if sel.size == 0:
        return None
    med = float(np.median(sel))
    if not 0.0 < med < 1.0:
        return None
    return min(3.0, max(0.3, math.log(med) / math.log(0.5)))


def exposure_correct(image, direction: str = "saturation", ceiling: float = DEFAULT_CEILING):
    """Undo a global power-law exposure shift.

    The corrupting exponent is estimated from the median and inverted
    (``v ** (1 / g)``). For ``direction="saturation"`` highlights above
    `ceiling` are additionally rolled off with a smooth shoulder.
    """
    if direction not in ("saturation", "low_contrast"):
        raise ValueError(f"unknown exposure direction {direction!r}")
    px = pixels_of(image)
    g = estimate_gamma(px, ceiling)
    if g is None:
        warnings.warn("degenerate frame; exposure left unchanged", DegenerateFrameWarning,
                      stacklevel=2)
        return rewrap(image, px.copy())
    out = px ** (1.0 / g)
    if direction == "saturation":
        out = _shoulder(out, ceiling)
    return rewrap(image, np.clip(out, 0.0, 1.0))
