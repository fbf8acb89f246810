"""Greedy exemplar-based inpainting.

Fill order follows the classic confidence x data-term priority: patches on
the fill front that are mostly known and sit on strong isophotes flowing into
the hole go first. Each selected patch is completed by copying the unknown
pixels from the fully-known source patch with the smallest SSD over the
target's known pixels.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from ..geometry import pixels_of, rewrap
from .tv import TvParams, tv_inpaint

log = logging.getLogger(__name__)

_ALPHA = 1.0
_DATA_FLOOR = 1e-3


def _window(center: int, radius: int, size: int) -> slice:
    return slice(max(center - radius, 0), min(center + radius + 1, size))


class _Filler:
    def __init__(self, x: np.ndarray, mask: np.ndarray, patch_side: int, search_radius):
        self.x = x
        self.h = patch_side // 2
        self.side = patch_side
        self.search_radius = search_radius
        self.unknown = mask.copy()
        self.conf = (~mask).astype(np.float64)
        self.rows, self.cols = mask.shape
        # source centers: patch fully inside the frame and fully known originally
        full = ndimage.uniform_filter((~mask).astype(np.float64), patch_side, mode="constant")
        src = full > 1 - 1e-9
        h = self.h
        src[:h] = src[self.rows - h:] = False
        src[:, :h] = src[:, self.cols - h:] = False
        self.source = src
        self.priority = np.full(mask.shape, -np.inf)
        self._update_priority(slice(0, self.rows), slice(0, self.cols))

    def _patch(self, r: int, c: int) -> tuple[slice, slice]:
        return _window(r, self.h, self.rows), _window(c, self.h, self.cols)

    def _update_priority(self, rs: slice, cs: slice) -> None:
        # work on a margin-extended window so neighbourhood ops are exact inside
        m = self.h + 2
        er = slice(max(rs.start - m, 0), min(rs.stop + m, self.rows))
        ec = slice(max(cs.start - m, 0), min(cs.stop + m, self.cols))
        unk = self.unknown[er, ec]
        known = ~unk
        front = unk & ndimage.binary_dilation(known, structure=np.ones((3, 3), bool))
        conf = ndimage.uniform_filter(self.conf[er, ec], self.side, mode="constant")

        gray = self.x[er, ec].mean(axis=2)
        gy, gx = np.gradient(gray)
        # gradients are only trusted where every stencil neighbour is known
        trusted = ndimage.binary_erosion(known, structure=np.ones((3, 3), bool),
                                         border_value=1).astype(np.float64)
        ny, nx = np.gradient(ndimage.gaussian_filter(known.astype(np.float64), 1.0))
        nnorm = np.hypot(nx, ny) + 1e-12

        prio = np.full(unk.shape, -np.inf)
        if front.any():
            # isophote = locally averaged trusted gradient, rotated by 90 degrees
            sigma = self.h / 2 + 0.5
            wsum = ndimage.gaussian_filter(trusted, sigma) + 1e-12
            iso_x = -ndimage.gaussian_filter(gy * trusted, sigma) / wsum
            iso_y = ndimage.gaussian_filter(gx * trusted, sigma) / wsum
            data = np.abs(iso_x * nx + iso_y * ny) / nnorm / _ALPHA
            prio[front] = conf[front] * (data[front] + _DATA_FLOOR)
        # write back only the requested window
        ir = slice(rs.start - er.start, rs.stop - er.start)
        ic = slice(cs.start - ec.start, cs.stop - ec.start)
        self.priority[rs, cs] = prio[ir, ic]

    def _best_source(self, r: int, c: int, radius) -> tuple[int, int] | None:
        h = self.h
        pr, pc = self._patch(r, c)
        # target patch in the frame's coordinates, clipped at borders
        tgt = self.x[pr, pc]
        wt = (~self.unknown[pr, pc]).astype(np.float64)
        oy, ox = pr.start - (r - h), pc.start - (c - h)
        th, tw = wt.shape
        if radius is None:
            wr, wc = slice(0, self.rows), slice(0, self.cols)
        else:
            wr, wc = _window(r, radius, self.rows), _window(c, radius, self.cols)
        cand = self.source[wr, wc]
        if not cand.any():
            return None
        # region of pixels any candidate patch can touch
        ar = slice(max(wr.start - h, 0), min(wr.stop + h, self.rows))
        ac = slice(max(wc.start - h, 0), min(wc.stop + h, self.cols))
        area = self.x[ar, ac]
        views = sliding_window_view(area, (self.side, self.side), axis=(0, 1))
        # views[i, j] is the patch centered at (ar.start + i + h, ac.start + j + h)
        views = views[:, :, :, oy:oy + th, ox:ox + tw]
        i0, j0 = wr.start - ar.start - h, wc.start - ac.start - h
        ci, cj = np.nonzero(cand)
        ci = ci + i0
        cj = cj + j0
        patches = views[ci, cj]  # (n, C, th, tw)
        diff = patches - np.moveaxis(tgt, 2, 0)[None]
        ssd = np.einsum("nkij,ij->n", diff * diff, wt)
        k = int(np.argmin(ssd))
        return int(ci[k] + ar.start + h), int(cj[k] + ac.start + h)

    def step(self) -> bool:
        flat = int(np.argmax(self.priority))
        r, c = divmod(flat, self.cols)
        if not np.isfinite(self.priority[r, c]):
            return False
        src = self._best_source(r, c, self.search_radius)
        if src is None and self.search_radius is not None:
            src = self._best_source(r, c, None)
        if src is None:
            return False
        pr, pc = self._patch(r, c)
        sr = slice(src[0] - (r - pr.start), src[0] + (pr.stop - r))
        sc = slice(src[1] - (c - pc.start), src[1] + (pc.stop - c))
        fill = self.unknown[pr, pc]
        patch_conf = self.conf[pr, pc].sum() / self.side ** 2
        self.x[pr, pc][fill] = self.x[sr, sc][fill]
        self.conf[pr, pc][fill] = patch_conf
        self.unknown[pr, pc][fill] = False
        span = 2 * self.h + 1
        self._update_priority(_window(r, span, self.rows), _window(c, span, self.cols))
        return True


def patch_inpaint(f, mask, patch_side: int = 9, search_radius: int | None = 48,
                  fallback: TvParams | None = None):
    """Exemplar-based fill of the masked pixels.

    Parameters
    ----------
    f : Frame or array_like
        Input frame.
    mask : array_like of bool
        ``True`` where pixels are unknown. Only these pixels are written.
    patch_side : int
        Odd patch side in pixels.
    search_radius : int or None
        Source centers are searched within this many pixels of the target
        first, then over the whole frame. ``None`` searches the whole frame.
    fallback : TvParams, optional
        Settings for the TV fill used when no fully-known source patch exists.
    """
    if patch_side < 1 or patch_side % 2 == 0:
        raise ValueError("patch side must be a positive odd integer")
    px = pixels_of(f)
    x = (px[:, :, None] if px.ndim == 2 else px).copy()
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match frame {x.shape[:2]}")
    if not mask.any():
        return rewrap(f, x.reshape(px.shape))
    filler = _Filler(x, mask, patch_side, search_radius)
    steps = 0
    while filler.unknown.any():
        if not filler.step():
            log.warning("patch_inpaint: no source patch for %d pixels, using TV fill",
                        int(filler.unknown.sum()))
            filled = tv_inpaint(filler.x, filler.unknown, fallback)
            filler.x[...] = filled
            break
        steps += 1
    log.debug("patch_inpaint: %d fill steps", steps)
    return rewrap(f, filler.x.reshape(px.shape))
