"""Forward corruption model for building paired clean/corrupted data.

A clean frame ``f`` is turned into ``clamp(mask_knockout((h * f + noise) ** gamma))``:
blur with a point-spread function, additive Gaussian noise, a power-law
exposure shift and an optional burnt-out (value 1.0) square mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import pixels_of, rewrap
from .ops import convolve

# Patch sides used for random inpainting masks (5, 7, 11, 13, ..., 33).
DEFAULT_MASK_SIDES = (5, 7, 11) + tuple(range(13, 34, 2))
DEFAULT_KERNEL_SIDE = 15
N_DEFAULT_TRAJECTORIES = 15


@dataclass(frozen=True)
class Psf:
    """Odd-sided square blur kernel with nonnegative taps summing to one."""

    kernel: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
            raise ValueError(f"psf must be an odd-sided square kernel, got {k.shape}")
        if (k < 0).any():
            raise ValueError("psf taps must be nonnegative")
        if abs(k.sum() - 1.0) > 1e-9:
            raise ValueError(f"psf taps must sum to 1 (sum={k.sum():.12g})")
        object.__setattr__(self, "kernel", k)

    @property
    def side(self) -> int:
        return self.kernel.shape[0]

    @classmethod
    def delta(cls, side: int = 1) -> "Psf":
        k = np.zeros((side, side))
        k[side // 2, side // 2] = 1.0
        return cls(k)

    @classmethod
    def gaussian(cls, std: float, side: int | None = None) -> "Psf":
        if std <= 0:
            raise ValueError("gaussian psf std must be > 0")
        if side is None:
            side = 2 * int(math.ceil(3 * std)) + 1
        r = np.arange(side) - side // 2
        g = np.exp(-(r ** 2) / (2 * std ** 2))
        k = np.outer(g, g)
        return cls(k / k.sum())

    def to_list(self) -> list:
        return self.kernel.tolist()


@dataclass(frozen=True)
class BlurTrajectory:
    """Camera-shake path as ``(x, y)`` points relative to the kernel center."""

    points: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("trajectory needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.points, axis=0).T)))


def random_trajectory(seed: int, side: int = DEFAULT_KERNEL_SIDE, n_points: int = 64,
                      inertia: float = 0.85) -> BlurTrajectory:
    """Random walk with momentum, rescaled to fit inside the kernel support.

    The velocity is a blend of the previous velocity and a fresh Gaussian
    kick, which gives smoothly curving shake paths. The path is centered on
    its centroid and scaled so that its largest coordinate reaches between
    half and all of the kernel half-width.
    """
    rng = np.random.default_rng(seed)
    half = (side - 1) / 2
    vel = rng.standard_normal(2)
    vel /= np.linalg.norm(vel)
    pts = np.zeros((n_points, 2))
    for i in range(1, n_points):
        vel = inertia * vel + (1 - inertia) * rng.standard_normal(2) * 2.0
        pts[i] = pts[i - 1] + vel
    pts -= pts.mean(axis=0)
    extent = np.abs(pts).max()
    if extent > 0:
        pts *= rng.uniform(0.5, 1.0) * half / extent
    return BlurTrajectory(pts, seed)


def default_trajectories(side: int = DEFAULT_KERNEL_SIDE) -> list[BlurTrajectory]:
    return [random_trajectory(seed, side) for seed in range(N_DEFAULT_TRAJECTORIES)]


def _splat(kernel: np.ndarray, x: float, y: float, mass: float) -> None:
    c = kernel.shape[0] // 2
    fx, fy = x + c, y + c
    x0, y0 = int(math.floor(fx)), int(math.floor(fy))
    ax, ay = fx - x0, fy - y0
    for dy, wy in ((0, 1 - ay), (1, ay)):
        for dx, wx in ((0, 1 - ax), (1, ax)):
            w = wx * wy
            if w > 0:
                kernel[y0 + dy, x0 + dx] += mass * w


def trajectory_kernel(traj: BlurTrajectory, side: int = DEFAULT_KERNEL_SIDE) -> Psf:
    """Rasterize a shake path into a normalized PSF.

    The polyline is resampled at ``ceil(L) + 1`` points evenly spaced in arc
    length (spacing at most one pixel); each sample carries equal mass and is
    splatted bilinearly.

    Raises
    ------
    ValueError
        If `side` is not a positive odd integer or the path leaves the support.
    """
    if side < 1 or side % 2 == 0:
        raise ValueError("kernel side must be a positive odd integer")
    half = (side - 1) / 2
    pts = traj.points
    if np.abs(pts).max() > half + 1e-9:
        raise ValueError(f"trajectory exceeds the {side}x{side} kernel support")
    seg = np.hypot(*np.diff(pts, axis=0).T) if len(pts) > 1 else np.zeros(0)
    total = float(seg.sum())
    kernel = np.zeros((side, side))
    if total == 0:
        samples = pts[:1]
    else:
        n = int(math.ceil(total - 1e-9)) + 1
        s = np.linspace(0.0, total, n)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        samples = np.column_stack([np.interp(s, cum, pts[:, 0]), np.interp(s, cum, pts[:, 1])])
    samples = np.clip(samples, -half, half)
    for x, y in samples:
        _splat(kernel, x, y, 1.0 / len(samples))
    return Psf(kernel / kernel.sum())


def blur(image, psf: Psf):
    """Convolve with `psf` using a reflective boundary."""
    return rewrap(image, convolve(pixels_of(image), psf.kernel))


@dataclass(frozen=True)
class MaskSpec:
    count: int
    sides: tuple = DEFAULT_MASK_SIDES

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("mask count must be >= 1")
        object.__setattr__(self, "sides", tuple(int(s) for s in self.sides))


@dataclass(frozen=True)
class DegradationSpec:
    psf: Psf | None = None
    gamma: float = 1.0
    noise_sigma: float = 0.0
    mask: MaskSpec | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "psf": self.psf.to_list() if self.psf is not None else None,
            "gamma": self.gamma,
            "noise_sigma": self.noise_sigma,
            "mask": None if self.mask is None else {"count": self.mask.count,
                                                     "sides": list(self.mask.sides)},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DegradationSpec":
        unknown = set(data) - {"psf", "gamma", "noise_sigma", "mask"}
        if unknown:
            raise ValueError(f"unknown degradation keys: {sorted(unknown)}")
        psf = data.get("psf")
        mask = data.get("mask")
        return cls(
            psf=Psf(np.array(psf)) if psf is not None else None,
            gamma=float(data.get("gamma", 1.0)),
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            mask=MaskSpec(**mask) if mask is not None else None,
        )


def random_masks(dims: Sequence[int], count: int, sides: Sequence[int] = DEFAULT_MASK_SIDES,
                 seed: int | np.random.Generator = 0) -> np.ndarray:
    """Union of `count` random squares, each fully inside the frame."""
    if count < 1:
        raise ValueError("mask count must be >= 1")
    sides = sorted(int(s) for s in set(sides))
    h, w = dims
    if not sides or min(sides) < 1:
        raise ValueError("mask sides must be positive")
    if max(sides) > min(h, w):
        raise ValueError(f"frame {h}x{w} is smaller than mask side {max(sides)}")
    rng = np.random.default_rng(seed)
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(count):
        s = int(rng.choice(sides))
        r = int(rng.integers(0, h - s + 1))
        c = int(rng.integers(0, w - s + 1))
        mask[r:r + s, c:c + s] = True
    return mask


def sides_for_fraction(dims: Sequence[int], fraction: float, count: int = 21,
                       spread: int = 4) -> tuple[int, ...]:
    """Odd side set whose mean square area covers `fraction` with `count` boxes."""
    h, w = dims
    side = math.sqrt(fraction * h * w / count)
    center = max(1, int(round(side)) | 1)
    return tuple(s for s in range(center - spread, center + spread + 1, 2) if s >= 1)


def mask_for_fraction(dims: Sequence[int], fraction: float, count: int = 21,
                      seed: int = 0, rounds: int = 6) -> np.ndarray:
    """`random_masks` with the side set tuned so coverage lands near `fraction`.

    Overlaps shrink coverage, so the nominal target is raised by the observed
    shortfall and redrawn a few times; the closest draw is returned.
    """
    h, w = dims
    target = fraction
    best, best_err = None, math.inf
    for _ in range(rounds):
        mask = random_masks(dims, count, sides_for_fraction(dims, target, count), seed)
        got = mask.mean()
        err = abs(got - fraction)
        if err < best_err:
            best, best_err = mask, err
        if err < 0.002 or got == 0:
            break
        target *= fraction / got
    return best


def corruption_mask(dims: Sequence[int], spec: DegradationSpec, seed: int) -> np.ndarray | None:
    if spec.mask is None:
        return None
    _, mask_seq = np.random.SeedSequence(seed).spawn(2)
    return random_masks(dims, spec.mask.count, spec.mask.sides, np.random.default_rng(mask_seq))


def corrupt(frame, spec: DegradationSpec, seed: int = 0):
    """Apply blur, noise, gamma and mask knockout in that order.

    Deterministic for a given `seed`. Values are clamped to ``[0, 1]`` before
    the power law and again at the end.
    """
    x = pixels_of(frame)
    noise_seq, _ = np.random.SeedSequence(seed).spawn(2)
    out = convolve(x, spec.psf.kernel) if spec.psf is not None else x.copy()
    if spec.noise_sigma > 0:
        out = out + np.random.default_rng(noise_seq).normal(0.0, spec.noise_sigma, out.shape)
    out = np.clip(out, 0.0, 1.0)
    if spec.gamma != 1.0:
        out = out ** spec.gamma
    mask = corruption_mask(x.shape[:2], spec, seed)
    if mask is not None:
        out[mask] = 1.0
    return rewrap(frame, np.clip(out, 0.0, 1.0))

