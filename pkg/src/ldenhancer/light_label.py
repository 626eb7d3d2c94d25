"""Illumination-prior decomposition of an image into a smooth light layer
and a content residual layer.

The light layer minimizes, per channel,

    || light - image ||^2 + lambda * || Laplacian(light - plane) ||^2

where ``plane`` is the least-squares affine fit of the channel. Removing the
affine trend first keeps constant and linear-ramp images exact fixed points;
the remaining curvature-penalized problem is solved in closed form in the
cosine-transform domain, where the mirrored-boundary Laplacian is diagonal
with eigenvalues (2 cos(pi k / H) - 2) + (2 cos(pi l / W) - 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from . import weights_io


@dataclass
class LightLabelPair:
    """Smooth light layer and content residual with ``light + residual = image``."""

    light: np.ndarray
    residual: np.ndarray
    lambda_smooth: float
    clipped: int = 0


@lru_cache(maxsize=32)
def _plane_basis(height: int, width: int) -> np.ndarray:
    yy, xx = np.meshgrid(
        np.arange(height, dtype=np.float64),
        np.arange(width, dtype=np.float64),
        indexing="ij",
    )
    return np.stack([np.ones(height * width), yy.ravel(), xx.ravel()], axis=1)


@lru_cache(maxsize=32)
def _laplacian_spectrum(height: int, width: int) -> np.ndarray:
    ky = 2.0 * np.cos(np.pi * np.arange(height) / height) - 2.0
    kx = 2.0 * np.cos(np.pi * np.arange(width) / width) - 2.0
    return ky[:, None] + kx[None, :]


def fit_plane(channel: np.ndarray) -> np.ndarray:
    """Least-squares affine fit a + b*row + c*col of a 2-D array."""
    h, w = channel.shape
    basis = _plane_basis(h, w)
    gram = basis.T @ basis
    coeffs = np.linalg.solve(gram, basis.T @ channel.ravel())
    return (basis @ coeffs).reshape(h, w)


def _smooth_channel(channel: np.ndarray, lambda_smooth: float) -> np.ndarray:
    plane = fit_plane(channel)
    residual = channel - plane
    spectrum = _laplacian_spectrum(*channel.shape)
    coeffs = fft.dctn(residual, type=2, norm="ortho")
    coeffs /= 1.0 + lambda_smooth * spectrum**2
    return plane + fft.idctn(coeffs, type=2, norm="ortho")


def light_label(image, lambda_smooth: float = 10.0) -> LightLabelPair:
    """Decompose an image into its smooth light layer and content residual.

    Accepts (H, W) or (H, W, C) arrays in [0, 1]; channels are processed
    independently. The light layer is clipped to [0, 1] after the solve and
    the residual is taken against the clipped layer, so the pair always sums
    back to the input exactly.
    """
    if lambda_smooth <= 0:
        raise ValueError(f"lambda_smooth must be positive, got {lambda_smooth}")
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")

    if arr.ndim == 2:
        raw = _smooth_channel(arr, lambda_smooth)
    else:
        raw = np.stack(
            [_smooth_channel(arr[..., c], lambda_smooth) for c in range(arr.shape[2])],
            axis=-1,
        )
    clipped = int(((raw < 0.0) | (raw > 1.0)).sum())
    light = np.clip(raw, 0.0, 1.0)
    return LightLabelPair(
        light=light,
        residual=arr - light,
        lambda_smooth=float(lambda_smooth),
        clipped=clipped,
    )


def save_label_pair(path, pair: LightLabelPair) -> None:
    """Write a label pair as a two-entry float32 array archive."""
    weights_io.save_arrays(path, {"light": pair.light, "residual": pair.residual})


def load_label_pair(path) -> LightLabelPair:
    arrays = weights_io.load_arrays(path)
    if "light" not in arrays or "residual" not in arrays:
        raise ValueError(f"{path} is not a light-label cache file")
    return LightLabelPair(
        light=arrays["light"], residual=arrays["residual"], lambda_smooth=float("nan")
    )
