"""Full-reference quality metrics on unit-range images.

All metrics take ``(reference, test)`` as frames or arrays with values in
``[0, 1]``. Colour inputs are compared per channel (PSNR, SSIM) or on
BT.601 luma (VIF, RECO).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve
from skimage.filters import threshold_otsu

from .geometry import pixels_of

_LUMA = np.array([0.299, 0.587, 0.114])


def _pair(ref, test) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(pixels_of(ref), dtype=np.float64)
    b = np.asarray(pixels_of(test), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def _luma(x: np.ndarray) -> np.ndarray:
    if x.ndim == 2:
        return x
    if x.shape[2] == 1:
        return x[:, :, 0]
    return x @ _LUMA


def psnr(ref, test) -> float:
    """Peak signal-to-noise ratio in dB for unit peak; ``inf`` for identical inputs."""
    a, b = _pair(ref, test)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(ref, test, sigma: float = 1.5, win_size: int = 11,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM with a Gaussian window; colour images average the channels.

    The map is cropped by half a window at each border so that reflected
    padding does not enter the mean.
    """
    a, b = _pair(ref, test)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if min(a.shape[:2]) < win_size:
        raise ValueError(f"images smaller than the {win_size}x{win_size} SSIM window")
    c1, c2 = k1 ** 2, k2 ** 2
    truncate = ((win_size - 1) // 2) / sigma
    filt = lambda x: ndimage.gaussian_filter(x, sigma, truncate=truncate, mode="reflect")  # noqa: E731
    pad = (win_size - 1) // 2
    vals = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mx, my = filt(x), filt(y)
        vx = filt(x * x) - mx * mx
        vy = filt(y * y) - my * my
        cxy = filt(x * y) - mx * my
        smap = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2))
        vals.append(smap[pad:-pad, pad:-pad].mean())
    return float(np.mean(vals))


def _gauss_window(n: int, sd: float) -> np.ndarray:
    r = np.arange(n) - (n - 1) / 2
    g = np.exp(-(r ** 2) / (2 * sd ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def vif(ref, test, scales: int = 4, sigma_nsq: float = 2.0) -> float:
    """Multi-scale pixel-domain visual information fidelity.

    Local variances use Gaussian windows of side ``2**(scales - s + 1) + 1``
    (s = 1..scales) with a decimation by two between scales, and the
    additive HVS noise variance `sigma_nsq` on the 0..255 scale.
    """
    a, b = _pair(ref, test)
    if np.array_equal(a, b):
        # exact no-distortion value; the variance floor would leave 1 - O(1e-11)
        return 1.0
    x, y = _luma(a) * 255.0, _luma(b) * 255.0
    eps = 1e-10
    num = den = 0.0
    for s in range(1, scales + 1):
        n = 2 ** (scales - s + 1) + 1
        win = _gauss_window(n, n / 5.0)
        if s > 1:
            x = fftconvolve(x, win, mode="valid")[::2, ::2]
            y = fftconvolve(y, win, mode="valid")[::2, ::2]
        if min(x.shape) < n:
            break
        mu1 = fftconvolve(x, win, mode="valid")
        mu2 = fftconvolve(y, win, mode="valid")
        s1 = np.maximum(fftconvolve(x * x, win, mode="valid") - mu1 * mu1, 0.0)
        s2 = np.maximum(fftconvolve(y * y, win, mode="valid") - mu2 * mu2, 0.0)
        s12 = fftconvolve(x * y, win, mode="valid") - mu1 * mu2

        g = s12 / (s1 + eps)
        sv = s2 - g * s12
        flat1 = s1 < eps
        g[flat1] = 0.0
        sv[flat1] = s2[flat1]
        s1[flat1] = 0.0
        flat2 = s2 < eps
        g[flat2] = 0.0
        sv[flat2] = 0.0
        neg = g < 0
        sv[neg] = s2[neg]
        g[neg] = 0.0
        sv = np.maximum(sv, eps)

        num += float(np.sum(np.log10(1.0 + g * g * s1 / (sv + sigma_nsq))))
        den += float(np.sum(np.log10(1.0 + s1 / sigma_nsq)))
    if den == 0:
        # flat reference carries no information
        return 0.0
    return max(0.0, num / den)


def _coherent_energy(img: np.ndarray, rho: float) -> np.ndarray:
    """sqrt(lambda1 - lambda2) of the Gaussian-smoothed structure tensor."""
    gx = ndimage.sobel(img, axis=1, mode="reflect") / 8.0
    gy = ndimage.sobel(img, axis=0, mode="reflect") / 8.0
    jxx = ndimage.gaussian_filter(gx * gx, rho)
    jyy = ndimage.gaussian_filter(gy * gy, rho)
    jxy = ndimage.gaussian_filter(gx * gy, rho)
    return np.sqrt(np.sqrt((jxx - jyy) ** 2 + 4 * jxy ** 2))


def reco(ref, test, rho: float = 1.0) -> float | None:
    """Relative edge coherence of `test` with respect to `ref`.

    Edge pixels are the reference pixels whose Sobel gradient magnitude
    exceeds Otsu's threshold. On those pixels the orientation-coherent
    gradient energy ``sqrt(lambda1 - lambda2)`` of the structure tensor is
    averaged for both images; the result is test / reference. Blurring
    lowers it, sharpening can push it above one. ``None`` when the
    reference has no edges.
    """
    a, b = _pair(ref, test)
    x, y = _luma(a), _luma(b)
    mag = np.hypot(ndimage.sobel(x, axis=1), ndimage.sobel(x, axis=0))
    if np.ptp(mag) == 0:
        return None
    edges = mag > threshold_otsu(mag)
    if not edges.any():
        return None
    ref_stat = _coherent_energy(x, rho)[edges].mean()
    if ref_stat == 0:
        return None
    return float(_coherent_energy(y, rho)[edges].mean() / ref_stat)


@dataclass(frozen=True)
class MetricSet:
    psnr: float
    ssim: float
    vif: float
    reco: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(ref, test) -> MetricSet:
    return MetricSet(psnr(ref, test), ssim(ref, test), vif(ref, test), reco(ref, test))
