"""Linear operators shared by the simulator and the solvers.

Convolution uses a symmetric (half-sample) reflective boundary, and
`convolve_adjoint` is its exact adjoint so that first-order solvers see a
consistent forward model.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve


def _as3d(x: np.ndarray) -> np.ndarray:
    return x[:, :, None] if x.ndim == 2 else x


def convolve(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve each channel of `image` with an odd-sided `kernel`."""
    x = _as3d(np.asarray(image, dtype=np.float64))
    k = np.asarray(kernel, dtype=np.float64)
    r = k.shape[0] // 2
    if r == 0:
        out = x * k[0, 0]
    else:
        if r > min(x.shape[:2]):
            raise ValueError("kernel larger than the image")
        padded = np.pad(x, ((r, r), (r, r), (0, 0)), mode="symmetric")
        out = fftconvolve(padded, k[:, :, None], mode="valid", axes=(0, 1))
    return out.reshape(np.shape(image))


def _fold(z: np.ndarray, r: int, axis: int) -> np.ndarray:
    # adjoint of symmetric padding by r along `axis`
    z = np.moveaxis(z, axis, 0)
    n = z.shape[0] - 2 * r
    out = z[r:r + n].copy()
    out[:r] += z[:r][::-1]
    out[n - r:] += z[r + n:][::-1]
    return np.moveaxis(out, 0, axis)


def convolve_adjoint(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    y = _as3d(np.asarray(image, dtype=np.float64))
    k = np.asarray(kernel, dtype=np.float64)
    r = k.shape[0] // 2
    if r == 0:
        out = y * k[0, 0]
    else:
        z = fftconvolve(y, k[::-1, ::-1, None], mode="full", axes=(0, 1))
        out = _fold(_fold(z, r, 0), r, 1)
    return out.reshape(np.shape(image))


def gradient(u: np.ndarray) -> np.ndarray:
    """Forward differences with Neumann boundary; returns shape ``(2, *u.shape)``."""
    g = np.zeros((2,) + u.shape)
    g[0, :-1] = u[1:] - u[:-1]
    g[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return g


def divergence(p: np.ndarray) -> np.ndarray:
    """Negative adjoint of `gradient`."""
    py, px = p[0], p[1]
    d = np.zeros(py.shape)
    d[0] = py[0]
    d[1:-1] = py[1:-1] - py[:-2]
    d[-1] = -py[-2]
    d[:, 0] += px[:, 0]
    d[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
    d[:, -1] += -px[:, -2]
    return d


def tv_norm(u: np.ndarray) -> float:
    """Isotropic total variation; channels are coupled per pixel."""
    g = gradient(u)
    if u.ndim == 3:
        return float(np.sqrt((g ** 2).sum(axis=(0, 3))).sum())
    return float(np.sqrt((g ** 2).sum(axis=0)).sum())


def project_tv_dual(p: np.ndarray, radius: float) -> np.ndarray:
    """Project a dual field onto the pointwise l2 ball of `radius`."""
    if p.ndim == 4:
        norm = np.sqrt((p ** 2).sum(axis=(0, 3), keepdims=True))
    else:
        norm = np.sqrt((p ** 2).sum(axis=0, keepdims=True))
    return p / np.maximum(1.0, norm / radius)


def operator_norm(forward, adjoint, shape, iters: int = 30, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm of a linear operator."""
    x = np.random.default_rng(seed).standard_normal(shape)
    x /= np.linalg.norm(x)
    s = 0.0
    for _ in range(iters):
        y = adjoint(forward(x))
        s = np.linalg.norm(y)
        if s == 0:
            return 0.0
        x = y / s
    return float(np.sqrt(s))
