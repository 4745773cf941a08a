"""Synthetic vessel-like segmentation data."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import cKDTree

__all__ = ["generate_synthetic_vessels", "MASK_FRACTION_RANGE"]

MASK_FRACTION_RANGE = (0.02, 0.20)


def _curve(rng, size):
    """Smooth random path as dense ``(L, 2)`` points, roughly one pixel apart."""
    steps = int(rng.integers(size // 2, 2 * size))
    start = rng.uniform(0, size, size=2)
    heading = rng.uniform(0, 2 * np.pi)
    turn = gaussian_filter(rng.normal(0, 0.35, size=steps), sigma=6, mode="nearest")
    angles = heading + np.cumsum(turn)
    pts = start + np.cumsum(np.stack([np.cos(angles), np.sin(angles)], axis=1), axis=0)
    # dense resampling so the distance to the polyline is accurate
    fine = np.linspace(0, steps - 1, 4 * steps)
    return np.stack([np.interp(fine, np.arange(steps), pts[:, k]) for k in range(2)], axis=1)


def _distance(points, grid):
    return cKDTree(points).query(grid)[0]


def _sample(rng, size, n_curves):
    texture = gaussian_filter(rng.normal(size=(size, size)), sigma=3)
    img = 0.55 + 0.06 * texture / texture.std()
    gy, gx = np.meshgrid(np.linspace(-1, 1, size), np.linspace(-1, 1, size), indexing="ij")
    a, b = rng.uniform(-0.15, 0.15, size=2)
    img = img + a * gx + b * gy
    grid = np.stack(np.meshgrid(np.arange(size), np.arange(size), indexing="ij"), axis=-1).reshape(-1, 2)
    mask = np.zeros((size, size), dtype=bool)
    for _ in range(n_curves):
        width = rng.uniform(1.0, 4.0)
        d = _distance(_curve(rng, size), grid).reshape(size, size)
        contrast = rng.uniform(0.2, 0.35)
        half = width / 2
        img = img - contrast * np.exp(-0.5 * (d / max(half, 0.5)) ** 2)
        mask |= d <= half
    img = img + rng.normal(0, 0.05, size=img.shape)
    return np.clip(img, 0.0, 1.0), mask


def generate_synthetic_vessels(seed: int, count: int, size: int = 64, curves=(1, 4)):
    """Grayscale images of dark curves on a textured, unevenly lit background.

    Parameters
    ----------
    seed : int
    count : int
    size : int
    curves : int or (low, high)
        Number of curves per image, fixed or drawn uniformly from the
        inclusive range.  Zero gives blank masks.

    Returns
    -------
    images : (count, size, size) float array in [0, 1]
    masks : (count, size, size) uint8 array
        Pixels within half the curve width of a centre line.  With at
        least one curve, each mask covers between 2 % and 20 % of the
        image (samples outside the range are redrawn).
    """
    rng = np.random.default_rng(seed)
    images = np.empty((count, size, size))
    masks = np.empty((count, size, size), dtype=np.uint8)
    lo, hi = (curves, curves) if np.isscalar(curves) else curves
    for n in range(count):
        while True:
            k = int(rng.integers(lo, hi + 1))
            img, mask = _sample(rng, size, k)
            frac = mask.mean()
            if k == 0 or MASK_FRACTION_RANGE[0] <= frac <= MASK_FRACTION_RANGE[1]:
                break
        images[n], masks[n] = img, mask
    return images, masks
