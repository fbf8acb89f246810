"""Total-variation deconvolution and inpainting with a primal-dual solver.

Deconvolution minimizes

    E(u) = 1/2 ||h * u - g||^2 + (1 / lam) * TV(u)      subject to 0 <= u <= 1

with isotropic, channel-coupled TV. Both the data term and the TV term are
dualized, so the only operator needed besides the gradient is the blur and
its exact adjoint (reflective boundary).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import ndimage

from ..degradation import Psf
from ..geometry import pixels_of, rewrap
from ..ops import (convolve, convolve_adjoint, divergence, gradient, operator_norm,
                   project_tv_dual, tv_norm)

log = logging.getLogger(__name__)


@dataclass
class TvParams:
    """Solver settings.

    ``kernel_radius`` is the standard deviation of the Gaussian PSF assumed
    when deconvolving without a known kernel.
    """

    lam: float = 1e3
    kernel_radius: float = 2.3
    max_iters: int = 300
    tol: float = 1e-5

    def __post_init__(self):
        if not self.lam > 0 or not self.kernel_radius > 0:
            raise ValueError("lam and kernel_radius must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TvParams":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown tv keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SolverInfo:
    iterations: int = 0
    converged: bool = False
    objective: list = field(default_factory=list)


def _as3d(x):
    return x[:, :, None] if x.ndim == 2 else x


def deconvolution_objective(u, g, kernel, lam) -> float:
    r = convolve(u, kernel) - g
    return 0.5 * float(np.sum(r * r)) + tv_norm(u) / lam


def tv_deconvolve(g, psf: Psf | None = None, params: TvParams | None = None,
                  return_info: bool = False):
    """Non-blind TV deconvolution; a Gaussian PSF of std ``kernel_radius`` is
    assumed when `psf` is omitted.

    The primal-dual iteration itself is not monotone in ``E``; the returned
    image is the lowest-energy iterate seen, so ``info.objective`` (energy of
    that iterate after each step) is nonincreasing.
    """
    p_ = params or TvParams()
    if psf is None:
        psf = Psf.gaussian(p_.kernel_radius)
    elif not isinstance(psf, Psf):
        psf = Psf(psf)  # validates normalization
    k = psf.kernel
    data = _as3d(pixels_of(g))
    mu = 1.0 / p_.lam

    fwd = lambda u: convolve(u, k)  # noqa: E731
    adj = lambda y: convolve_adjoint(y, k)  # noqa: E731
    knorm = operator_norm(fwd, adj, data.shape, iters=15)
    step = 0.99 / np.sqrt(knorm ** 2 * 1.02 + 8.0)

    x = data.copy()
    kx = fwd(x)
    kbar = kx
    xbar = x
    q = np.zeros_like(data)
    p = np.zeros((2,) + data.shape)
    best = x
    best_e = 0.5 * float(np.sum((kx - data) ** 2)) + mu * tv_norm(x)
    info = SolverInfo(objective=[best_e])

    for it in range(1, p_.max_iters + 1):
        q = (q + step * (kbar - data)) / (1.0 + step)
        p = project_tv_dual(p + step * gradient(xbar), mu)
        x_new = np.clip(x - step * (adj(q) - divergence(p)), 0.0, 1.0)
        kx_new = fwd(x_new)
        e = 0.5 * float(np.sum((kx_new - data) ** 2)) + mu * tv_norm(x_new)
        if e <= best_e:
            best, best_e = x_new, e
        info.objective.append(best_e)
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1e-12)
        xbar = 2 * x_new - x
        kbar = 2 * kx_new - kx
        x, kx = x_new, kx_new
        info.iterations = it
        if change < p_.tol:
            info.converged = True
            break
    log.debug("tv_deconvolve: %d iterations, E=%.6g", info.iterations, best_e)
    out = rewrap(g, np.clip(best, 0.0, 1.0).reshape(pixels_of(g).shape))
    return (out, info) if return_info else out


def _normalized_fill(x: np.ndarray, known: np.ndarray) -> np.ndarray:
    """Cheap smooth initial guess for unknown pixels (normalized convolution)."""
    out = x.copy()
    w = known.astype(np.float64)
    missing = ~known
    for sigma in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
        den = ndimage.gaussian_filter(w, sigma)
        ok = missing & (den > 1e-3)
        if ok.any():
            for c in range(x.shape[2]):
                num = ndimage.gaussian_filter(x[:, :, c] * w, sigma)
                out[:, :, c][ok] = num[ok] / den[ok]
            missing = missing & ~ok
        if not missing.any():
            break
    if missing.any():
        out[missing] = x[known].mean(axis=0)
    return out


def _tv_fill_region(x: np.ndarray, known: np.ndarray, params: TvParams) -> tuple[np.ndarray, int]:
    u = _normalized_fill(x, known)
    unknown = ~known
    step = 0.99 / np.sqrt(8.0)
    p = np.zeros((2,) + u.shape)
    ubar = u
    it = 0
    for it in range(1, params.max_iters + 1):
        p = project_tv_dual(p + step * gradient(ubar), 1.0)
        u_new = u + step * divergence(p)
        u_new = np.where(unknown[:, :, None], np.clip(u_new, 0.0, 1.0), x)
        change = np.linalg.norm(u_new - u) / max(np.linalg.norm(u), 1e-12)
        ubar = 2 * u_new - u
        u = u_new
        if change < params.tol:
            break
    return u, it


def tv_inpaint(f, mask, params: TvParams | None = None):
    """Fill masked pixels with the TV-minimal interpolant of their surroundings.

    Known pixels are held fixed. Each connected hole is solved on its own
    crop, which is exact because TV terms between two known pixels are
    constant.

    Raises
    ------
    ValueError
        If the mask covers every pixel or does not match the frame.
    """
    params = params or TvParams(max_iters=3000)
    x = _as3d(pixels_of(f)).copy()
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match frame {x.shape[:2]}")
    if mask.all():
        raise ValueError("cannot inpaint: mask covers the whole frame")
    if not mask.any():
        return rewrap(f, x.reshape(pixels_of(f).shape))
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    src = x.copy()
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        r0 = max(sl[0].start - 2, 0)
        r1 = min(sl[0].stop + 2, x.shape[0])
        c0 = max(sl[1].start - 2, 0)
        c1 = min(sl[1].stop + 2, x.shape[1])
        # other holes inside the crop stay unknown; only hole i is written back
        crop_mask = mask[r0:r1, c0:c1]
        filled, _ = _tv_fill_region(src[r0:r1, c0:c1], ~crop_mask, params)
        own = labels[r0:r1, c0:c1] == i
        x[r0:r1, c0:c1][own] = filled[own]
    return rewrap(f, x.reshape(pixels_of(f).shape))
