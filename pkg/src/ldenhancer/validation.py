"""Input validation helpers shared by the estimators, CLI, and pipeline."""

from __future__ import annotations

import numpy as np


def check_image(x, name: str = "image") -> np.ndarray:
    """Validate a single H x W x 3 image in [0, 1] and return it as float32."""
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_image_batch(x, name: str = "images") -> np.ndarray:
    """Validate a batch of images; a single image is promoted to a batch of 1."""
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise ValueError(f"{name} must have shape (N, H, W, 3), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_divisible(size: int, divisor: int, name: str = "size") -> None:
    if size % divisor != 0:
        raise ValueError(f"{name} {size} is not divisible by {divisor}")
