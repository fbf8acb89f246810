"""Multi-scale high-frequency decomposition.

Each level low-passes the current image with a Gaussian whose sigma doubles
per level and keeps the difference as a signed band; the last low-pass is
the residual. Summing residual and bands gives the input back exactly (up
to floating-point rounding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..geometry import pixels_of


@dataclass(frozen=True)
class HfPyramid:
    lowpass: np.ndarray
    bands: tuple

    def reconstruct(self) -> np.ndarray:
        out = self.lowpass.copy()
        for b in self.bands:
            out += b
        return out


def _lowpass(x: np.ndarray, sigma: float) -> np.ndarray:
    s = (sigma, sigma, 0) if x.ndim == 3 else sigma
    return ndimage.gaussian_filter(x, s, mode="reflect")


def hf_pyramid(image, levels: int = 4, sigma0: float = 1.0) -> HfPyramid:
    current = np.array(pixels_of(image), dtype=np.float64)
    bands = []
    sigma = sigma0
    for _ in range(levels):
        low = _lowpass(current, sigma)
        bands.append(current - low)
        current = low
        sigma *= 2
    return HfPyramid(current, tuple(bands))


def hf_edge_fidelity(a, b, levels: int = 4) -> float:
    """Summed L2 distance between the band stacks of two images."""
    pa, pb = hf_pyramid(a, levels), hf_pyramid(b, levels)
    return float(sum(np.linalg.norm(x - y) for x, y in zip(pa.bands, pb.bands)))
