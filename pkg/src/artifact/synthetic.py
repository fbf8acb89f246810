"""Procedural test frames with smooth shading, sharp structures and texture."""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def smooth_texture_composite(size: int | tuple = 256, seed: int = 0, channels: int = 3,
                             texture_amplitude: float = 0.05) -> np.ndarray:
    """Tissue-like RGB frame in ``[0, 1]``.

    Layers: a low-frequency shading field, a few sharp-edged blobs and thin
    vessel-like curves, and a fine oriented sinusoidal texture.
    """
    h, w = (size, size) if np.isscalar(size) else size
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w] / max(h, w)

    shading = np.zeros((h, w))
    for _ in range(4):
        cy, cx = rng.uniform(0, 1, 2)
        s = rng.uniform(0.25, 0.6)
        shading += rng.uniform(0.5, 1.0) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s ** 2))
    shading = 0.3 + 0.35 * (shading - shading.min()) / (np.ptp(shading) + 1e-12)

    structure = np.zeros((h, w))
    for _ in range(5):
        cy, cx = rng.uniform(0.15, 0.85, 2)
        ry, rx = rng.uniform(0.04, 0.14, 2)
        structure += rng.uniform(-0.15, 0.15) * (((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 < 1)
    for _ in range(3):
        a, b, c = rng.uniform(-1, 1, 3)
        curve = 0.5 + 0.3 * a * np.sin(2 * np.pi * (b * xx + c)) - yy
        structure -= 0.12 * (np.abs(curve) < 0.006 * rng.uniform(1, 2))

    theta = rng.uniform(0, np.pi)
    period = rng.uniform(6, 10) / max(h, w)
    phase = 2 * np.pi * (np.cos(theta) * xx + np.sin(theta) * yy) / period
    texture = texture_amplitude * np.sin(phase) * (0.6 + 0.4 * np.sin(3 * np.pi * xx))

    gray = np.clip(shading + structure + texture, 0.02, 0.95)
    if channels == 1:
        return gray[:, :, None]
    tint = np.array([1.0, 0.72, 0.62]) + rng.uniform(-0.05, 0.05, 3)
    rgb = gray[:, :, None] * tint
    for ch, amp in enumerate((0.5, 0.3, 0.3)):
        # independent slow colour drift per channel keeps the colour covariance full rank
        rgb[..., ch] += amp * ndimage.gaussian_filter(rng.standard_normal((h, w)), 8)
    return np.clip(rgb, 0.0, 1.0)


def checkerboard(size: int = 64, period: int = 8, channels: int = 1) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    board = (((yy // (period // 2)) + (xx // (period // 2))) % 2).astype(np.float64)
    board = 0.2 + 0.6 * board
    return np.repeat(board[:, :, None], channels, axis=2)
