"""Interweave iteration adjustment.

Each iteration moves every pixel by ``(enhancement - suppression) * I * (1 - I)``,
which brightens dark pixels where the enhancement map dominates and darkens
bright pixels where the suppression map dominates. Pixels at exactly 0 or 1
are fixed points. Each iteration clamps back to [0, 1]; the clamp passes
gradients unchanged inside the range and zero outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import torch


@dataclass
class AdjustmentTrace:
    """All intermediate frames of one adjustment run.

    ``frames[0]`` is the input image and ``frames[-1]`` the final result;
    ``clamp_counts[n]`` is the number of entries iteration ``n + 1`` pushed
    outside [0, 1] before clamping.
    """

    frames: List[torch.Tensor]
    suppression: torch.Tensor
    enhancement: torch.Tensor
    iterations: int
    clamp_counts: List[int] = field(default_factory=list)

    @property
    def final(self) -> torch.Tensor:
        return self.frames[-1]


def interweave_adjust(image, suppression, enhancement, iterations) -> AdjustmentTrace:
    """Run the pixel-wise adjustment recurrence for ``iterations`` steps.

    All three tensors must share one shape; the image is expected in [0, 1]
    and the maps in [-1, 1].
    """
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")
    if image.shape != suppression.shape or image.shape != enhancement.shape:
        raise ValueError(
            f"shape mismatch: image {tuple(image.shape)}, suppression "
            f"{tuple(suppression.shape)}, enhancement {tuple(enhancement.shape)}"
        )
    gain = enhancement - suppression
    frames = [image]
    clamp_counts = []
    current = image
    for _ in range(iterations):
        raw = current + gain * current * (1.0 - current)
        with torch.no_grad():
            clamp_counts.append(int(((raw < 0.0) | (raw > 1.0)).sum()))
        current = raw.clamp(0.0, 1.0)
        frames.append(current)
    return AdjustmentTrace(frames, suppression, enhancement, iterations, clamp_counts)
