"""Unsupervised training losses.

All functions take channel-first tensors, either (C, H, W) or (N, C, H, W),
and return a scalar tensor averaged over the batch. Gray projections use the
unweighted channel mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .config import LossWeights


@dataclass
class LossReport:
    """One evaluation of the five loss terms and their weighted total."""

    spa: float
    col: float
    tv: float
    ie: float
    light: float
    total: float


def _as_batch(x, name):
    if x.ndim == 3:
        return x[None]
    if x.ndim == 4:
        return x
    raise ValueError(f"{name} must be (C, H, W) or (N, C, H, W), got {tuple(x.shape)}")


def spatial_consistency_loss(enhanced, reference, region_size: int = 4):
    """Penalty on changed contrast between neighboring regions.

    Both inputs are averaged to gray over non-overlapping ``region_size``
    squares; for every region and each of its in-grid 4-neighbors the squared
    change of the absolute region difference is accumulated and averaged over
    regions. Adding one constant to either image leaves the loss unchanged.
    """
    enhanced = _as_batch(enhanced, "enhanced")
    reference = _as_batch(reference, "reference")
    if enhanced.shape != reference.shape:
        raise ValueError(
            f"shape mismatch: {tuple(enhanced.shape)} vs {tuple(reference.shape)}"
        )
    h, w = enhanced.shape[2], enhanced.shape[3]
    if h % region_size or w % region_size:
        raise ValueError(f"image {h}x{w} cannot be tiled by {region_size}x{region_size}")
    pooled_e = F.avg_pool2d(enhanced.mean(dim=1, keepdim=True), region_size)
    pooled_r = F.avg_pool2d(reference.mean(dim=1, keepdim=True), region_size)
    dh = (pooled_e[..., :, 1:] - pooled_e[..., :, :-1]).abs() - (
        pooled_r[..., :, 1:] - pooled_r[..., :, :-1]
    ).abs()
    dv = (pooled_e[..., 1:, :] - pooled_e[..., :-1, :]).abs() - (
        pooled_r[..., 1:, :] - pooled_r[..., :-1, :]
    ).abs()
    # every adjacent pair appears once per direction; the region-centric sum
    # counts each pair from both sides
    per_sample = 2.0 * (dh.pow(2).sum(dim=(1, 2, 3)) + dv.pow(2).sum(dim=(1, 2, 3)))
    regions = pooled_e.shape[2] * pooled_e.shape[3]
    return (per_sample / regions).mean()


def color_constancy_loss(image):
    """Squared pairwise differences of the per-channel means."""
    image = _as_batch(image, "image")
    if image.shape[1] != 3:
        raise ValueError(f"expected 3 channels, got {image.shape[1]}")
    means = image.mean(dim=(2, 3))
    r, g, b = means[:, 0], means[:, 1], means[:, 2]
    return ((r - g).pow(2) + (r - b).pow(2) + (g - b).pow(2)).mean()


def smoothness_loss(diff_map, n_maps: int = 1):
    """Smoothness penalty on a parameter-map difference.

    Per channel, the squared horizontal and vertical forward differences are
    each averaged over their positions and added; the result is averaged
    over channels and divided by the number of maps. Maps too small for a
    direction contribute nothing in that direction.
    """
    diff_map = _as_batch(diff_map, "diff_map")
    if n_maps < 1:
        raise ValueError("n_maps must be at least 1")
    dh = diff_map[..., :, 1:] - diff_map[..., :, :-1]
    dv = diff_map[..., 1:, :] - diff_map[..., :-1, :]
    per_channel = torch.zeros(
        diff_map.shape[:2], dtype=diff_map.dtype, device=diff_map.device
    )
    if dh.numel():
        per_channel = per_channel + dh.pow(2).mean(dim=(2, 3))
    if dv.numel():
        per_channel = per_channel + dv.pow(2).mean(dim=(2, 3))
    return per_channel.mean(dim=1).mean() / n_maps


def exposure_control_loss(image, level=0.6, alpha=1.0, region_size=16, beta=1.0):
    """Smooth-L1 distance between scaled region intensities and ``level``.

    Regions are non-overlapping ``region_size`` squares of the gray-projected
    image; the loss is averaged over regions.
    """
    image = _as_batch(image, "image")
    h, w = image.shape[2], image.shape[3]
    if h % region_size or w % region_size:
        raise ValueError(f"image {h}x{w} cannot be tiled by {region_size}x{region_size}")
    region_means = F.avg_pool2d(image.mean(dim=1, keepdim=True), region_size)
    target = torch.full_like(region_means, float(level))
    return F.smooth_l1_loss(alpha * region_means, target, beta=beta)


def light_distribution_loss(light_map, label, beta=1.0):
    """Mean smooth-L1 residual between the decoded light map and its label."""
    light_map = _as_batch(light_map, "light_map")
    label = _as_batch(label, "label")
    if light_map.shape != label.shape:
        raise ValueError(
            f"shape mismatch: {tuple(light_map.shape)} vs {tuple(label.shape)}"
        )
    return F.smooth_l1_loss(light_map, label, beta=beta)


def weighted_total(spa, col, tv, ie, light, weights: LossWeights):
    """Weighted sum of the five loss terms; works on tensors and floats."""
    return (
        weights.spatial * spa
        + weights.color * col
        + weights.smoothness * tv
        + weights.exposure * ie
        + weights.light * light
    )


def total_loss(spa, col, tv, ie, light, weights: LossWeights) -> LossReport:
    """Combine already-evaluated loss parts into a report.

    Raises on non-finite parts so a diverging run fails loudly instead of
    logging NaNs.
    """
    parts = {"spa": spa, "col": col, "tv": tv, "ie": ie, "light": light}
    values = {}
    for name, part in parts.items():
        value = float(part)
        if not math.isfinite(value):
            raise ValueError(f"loss part {name} is non-finite: {value}")
        values[name] = value
    total = weighted_total(values["spa"], values["col"], values["tv"],
                           values["ie"], values["light"], weights)
    return LossReport(total=float(total), **values)
