"""Synthetic nighttime-style frames with uneven light distribution.

Stand-in corpus for desk-scale training runs: dark backgrounds, dim scene
content, and a few bright light pools so part of each frame is already well
lit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def _night_frame(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.meshgrid(
        np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij"
    )
    base = rng.uniform(0.03, 0.10)
    tilt = rng.uniform(-0.06, 0.06, size=2)
    img = np.full((size, size), base) + tilt[0] * yy + tilt[1] * xx

    # dim scene content: a handful of rectangles with low reflectance
    for _ in range(rng.integers(3, 8)):
        h = int(rng.integers(size // 16, size // 3))
        w = int(rng.integers(size // 16, size // 3))
        top = int(rng.integers(0, size - h))
        left = int(rng.integers(0, size - w))
        img[top : top + h, left : left + w] += rng.uniform(0.02, 0.18)

    # bright light pools make the light distribution uneven
    for _ in range(rng.integers(1, 5)):
        cy, cx = rng.uniform(0.1, 0.9, size=2) * size
        sigma = rng.uniform(0.04, 0.15) * size
        peak = rng.uniform(0.45, 0.9)
        img += peak * np.exp(-((yy * size - cy) ** 2 + (xx * size - cx) ** 2) / (2 * sigma**2))

    img = np.clip(img, 0.0, 1.0)
    img = np.clip(img + rng.normal(0.0, 0.015, img.shape), 0.0, 1.0)
    return np.repeat(img[..., None], 3, axis=2) * rng.uniform(0.85, 1.0, size=3)


def synthesize_uneven_corpus(out_dir, count: int = 200, size: int = 256, seed: int = 0):
    """Write ``count`` synthetic frames as PNGs and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        frame = _night_frame(rng, size)
        data = np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)
        path = out_dir / f"frame{i:04d}.png"
        Image.fromarray(data).save(path)
        paths.append(path)
    return paths


def quadrant_test_image(size: int = 256, seed: int = 0) -> np.ndarray:
    """Held-out probe image: one dark quadrant (mean 0.1), one bright quadrant
    (mean 0.9), and two mid-level quadrants."""
    rng = np.random.default_rng(seed)
    half = size // 2
    img = np.empty((size, size), dtype=np.float64)
    img[:half, :half] = 0.1 + rng.normal(0.0, 0.02, (half, half))
    img[:half, half:] = 0.9 + rng.normal(0.0, 0.02, (half, half))
    img[half:, :half] = 0.3 + rng.normal(0.0, 0.02, (half, half))
    img[half:, half:] = 0.55 + rng.normal(0.0, 0.02, (half, half))
    img = np.clip(img, 0.0, 1.0)
    return np.repeat(img[..., None], 3, axis=2).astype(np.float32)
