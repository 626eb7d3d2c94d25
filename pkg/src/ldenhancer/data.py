"""Dataset indexing, frame sampling, image loading, and the label cache."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from . import light_label as ll

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}


def sample_frames(sequence_dir, stride: int) -> List[Path]:
    """Every ``stride``-th frame of a sequence directory, in sorted name order."""
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    sequence_dir = Path(sequence_dir)
    frames = sorted(
        p for p in sequence_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not frames:
        raise ValueError(f"no image frames found in {sequence_dir}")
    return frames[::stride]


def load_and_resize(path, size: int = 256, non_rgb: str = "convert") -> np.ndarray:
    """Load an image file as float32 in [0, 1], bilinearly resized to size x size."""
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "RGB":
                if non_rgb == "reject":
                    raise ValueError(f"{path} is not RGB (mode {img.mode})")
                img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.float32) / 255.0
    except OSError as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if arr.shape[:2] == (size, size):
        return arr
    tensor = torch.from_numpy(arr).permute(2, 0, 1)[None]
    resized = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
    return resized[0].permute(1, 2, 0).contiguous().numpy()


@dataclass(frozen=True)
class IndexEntry:
    sequence: str
    frame: Path
    label: Path


@dataclass
class DatasetIndex:
    root: Path
    entries: List[IndexEntry]

    def __len__(self):
        return len(self.entries)


def _sequence_dirs(root: Path) -> List[Path]:
    subdirs = sorted(d for d in root.iterdir() if d.is_dir())
    return subdirs if subdirs else [root]


def build_dataset_index(root, stride: int, label_dir) -> DatasetIndex:
    """Index a dataset directory.

    The root either contains sequence subdirectories of frames or is itself a
    flat directory of frames. Entries are sorted by (sequence, frame name) so
    indexing is deterministic for fixed directory contents.
    """
    root = Path(root)
    label_dir = Path(label_dir)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    entries = []
    for seq_dir in _sequence_dirs(root):
        sequence = seq_dir.name if seq_dir != root else root.name
        for frame in sample_frames(seq_dir, stride):
            relative = frame.relative_to(root)
            label = label_dir / relative.with_suffix(".labels")
            entries.append(IndexEntry(sequence=sequence, frame=frame, label=label))
    return DatasetIndex(root=root, entries=entries)


def populate_label_cache(
    index: DatasetIndex,
    size: int = 256,
    lambda_smooth: float = 10.0,
    skip_existing: bool = True,
) -> int:
    """Compute and store the light-label pair for every indexed frame.

    Returns the number of labels written. Labels are computed on the resized
    image so they match what training sees.
    """
    written = 0
    for entry in index.entries:
        if skip_existing and entry.label.exists():
            continue
        image = load_and_resize(entry.frame, size=size)
        pair = ll.light_label(image, lambda_smooth=lambda_smooth)
        ll.save_label_pair(entry.label, pair)
        written += 1
    return written


def verify_label_cache(index: DatasetIndex) -> None:
    missing = [str(e.label) for e in index.entries if not e.label.exists()]
    if missing:
        preview = ", ".join(missing[:3])
        raise ValueError(
            f"{len(missing)} label cache entries missing (e.g. {preview}); "
            "run the label step first"
        )


def load_training_tensors(index: DatasetIndex, size: int = 256):
    """Load all frames and cached labels as channel-first float32 tensors.

    Returns (images, light, residual), each of shape (N, 3, size, size).
    """
    verify_label_cache(index)
    images, lights, residuals = [], [], []
    for entry in index.entries:
        images.append(load_and_resize(entry.frame, size=size))
        pair = ll.load_label_pair(entry.label)
        if pair.light.shape != (size, size, 3):
            raise ValueError(
                f"label {entry.label} has shape {pair.light.shape}, expected "
                f"{(size, size, 3)}; re-run the label step"
            )
        lights.append(pair.light)
        residuals.append(pair.residual)

    def stack(items):
        arr = np.stack(items).astype(np.float32)
        return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()

    return stack(images), stack(lights), stack(residuals)
