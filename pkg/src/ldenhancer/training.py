"""Optimization loop with checkpointing and exact resume."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch

from . import weights_io
from .config import Config, LossWeights, NetworkConfig, TrainConfig
from .data import DatasetIndex, load_training_tensors
from .iia import interweave_adjust
from .losses import (
    LossReport,
    color_constancy_loss,
    exposure_control_loss,
    light_distribution_loss,
    smoothness_loss,
    spatial_consistency_loss,
    total_loss,
    weighted_total,
)
from .network import EnhancerNet

LOG_HEADER = "epoch,spa,col,tv,ie,light,total"


class TrainingDiverged(RuntimeError):
    """Raised when a batch produces a non-finite loss."""


@dataclass
class TrainResult:
    log_path: Path
    checkpoints: List[Path]
    final_weights: Path
    epochs_run: int
    reports: List[LossReport]


def epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic shuffle for one epoch, independent of any global RNG
    state so resumed runs reproduce the original order."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def batch_losses(net, images, light, residual, weights: LossWeights):
    """Forward pass, adjustment, and all five loss terms for one batch."""
    maps = net(images)
    trace = interweave_adjust(
        images, maps.suppression, maps.enhancement, net.config.iterations
    )
    enhanced = trace.final
    spa = spatial_consistency_loss(enhanced, residual, region_size=weights.spatial_region)
    col = color_constancy_loss(enhanced)
    tv = smoothness_loss(maps.enhancement - maps.suppression)
    ie = exposure_control_loss(
        enhanced,
        level=weights.exposure_level,
        alpha=weights.exposure_alpha,
        region_size=weights.exposure_region,
        beta=weights.smoothl1_beta,
    )
    light_term = light_distribution_loss(maps.light_map, light, beta=weights.smoothl1_beta)
    return spa, col, tv, ie, light_term


def _checkpoint_paths(out_dir: Path, epoch: int):
    stem = out_dir / "checkpoints" / f"epoch_{epoch:04d}"
    return (
        stem.with_suffix(".weights"),
        stem.with_suffix(".optim"),
        stem.with_suffix(".meta.json"),
    )


def save_checkpoint(out_dir, net, optimizer, config: Config, epoch: int) -> Path:
    weights_path, optim_path, meta_path = _checkpoint_paths(Path(out_dir), epoch)
    weights_io.save_model_weights(net, weights_path)
    weights_io.save_arrays(optim_path, weights_io.optimizer_to_arrays(optimizer))
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"epoch": epoch, "config": config.to_dict()}
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return weights_path


def load_checkpoint(weights_path, net, optimizer) -> int:
    """Restore model and optimizer state; returns the epoch to resume after."""
    weights_path = Path(weights_path)
    weights_io.load_model_weights(net, weights_path)
    optim_path = weights_path.with_suffix(".optim")
    if optim_path.exists():
        weights_io.arrays_to_optimizer(optimizer, weights_io.load_arrays(optim_path))
    meta_path = weights_path.with_suffix(".meta.json")
    if not meta_path.exists():
        raise ValueError(f"checkpoint metadata {meta_path} not found")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return int(meta["epoch"])


def _dump_diagnostics(out_dir: Path, epoch, batch_indices, index, parts):
    info = {
        "epoch": epoch,
        "batch_entries": [str(index.entries[i].frame) for i in batch_indices],
        "loss_parts": {k: float(v.detach()) for k, v in parts.items()},
    }
    path = out_dir / "diverged_batch.json"
    path.write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    return path


def train(
    config: Config,
    index: DatasetIndex,
    out_dir,
    resume: Optional[str] = None,
) -> TrainResult:
    """Train the enhancer on an indexed, label-cached dataset.

    Writes a CSV loss log (one row of epoch means per epoch), periodic
    checkpoints, and a final weight archive under ``out_dir``. ``resume``
    points at a checkpoint ``.weights`` file; the run continues after the
    checkpointed epoch and reproduces an uninterrupted run exactly because
    all shuffling is derived from (seed, epoch) alone.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tc = config.train
    weights = config.loss

    net = EnhancerNet(config.network)
    net = net.to(memory_format=torch.channels_last)
    optimizer = torch.optim.AdamW(
        net.parameters(),
        lr=tc.learning_rate,
        weight_decay=tc.weight_decay,
        betas=(0.9, 0.999),
        eps=1e-8,
    )
    start_epoch = 0
    if resume is not None:
        start_epoch = load_checkpoint(resume, net, optimizer)
        if start_epoch >= tc.epochs:
            raise ValueError(
                f"checkpoint is at epoch {start_epoch}, nothing left of {tc.epochs}"
            )

    images, light, residual = load_training_tensors(index, size=tc.input_size)
    images = images.to(memory_format=torch.channels_last)
    n = images.shape[0]

    log_path = out_dir / "loss_log.csv"
    mode = "a" if resume is not None and log_path.exists() else "w"
    log_file = open(log_path, mode, encoding="utf-8")
    if mode == "w":
        log_file.write(LOG_HEADER + "\n")

    checkpoints = []
    reports = []
    try:
        for epoch in range(start_epoch + 1, tc.epochs + 1):
            net.train()
            order = epoch_permutation(tc.seed, epoch, n)
            sums = {"spa": 0.0, "col": 0.0, "tv": 0.0, "ie": 0.0, "light": 0.0}
            seen = 0
            for start in range(0, n, tc.batch_size):
                batch_idx = order[start : start + tc.batch_size]
                idx = torch.from_numpy(batch_idx.copy())
                spa, col, tv, ie, light_term = batch_losses(
                    net, images[idx], light[idx], residual[idx], weights
                )
                total = weighted_total(spa, col, tv, ie, light_term, weights)
                if not torch.isfinite(total):
                    parts = {"spa": spa, "col": col, "tv": tv, "ie": ie,
                             "light": light_term, "total": total}
                    dump = _dump_diagnostics(out_dir, epoch, batch_idx, index, parts)
                    raise TrainingDiverged(
                        f"non-finite loss in epoch {epoch}; batch dumped to {dump}"
                    )
                optimizer.zero_grad(set_to_none=True)
                total.backward()
                optimizer.step()
                bs = len(batch_idx)
                seen += bs
                for key, value in zip(sums, (spa, col, tv, ie, light_term)):
                    sums[key] += float(value.detach()) * bs
            means = {k: v / seen for k, v in sums.items()}
            report = total_loss(
                means["spa"], means["col"], means["tv"], means["ie"], means["light"],
                weights,
            )
            reports.append(report)
            log_file.write(
                f"{epoch},{report.spa!r},{report.col!r},{report.tv!r},"
                f"{report.ie!r},{report.light!r},{report.total!r}\n"
            )
            log_file.flush()
            if epoch % tc.checkpoint_every == 0 or epoch == tc.epochs:
                checkpoints.append(save_checkpoint(out_dir, net, optimizer, config, epoch))
    finally:
        log_file.close()

    final_weights = out_dir / "model.weights"
    weights_io.save_model_weights(net, final_weights)
    (out_dir / "model.meta.json").write_text(
        json.dumps({"epoch": tc.epochs, "config": config.to_dict()}, indent=2) + "\n",
        encoding="utf-8",
    )
    return TrainResult(
        log_path=log_path,
        checkpoints=checkpoints,
        final_weights=final_weights,
        epochs_run=tc.epochs - start_epoch,
        reports=reports,
    )


def evaluate_mean_loss(net, images, light, residual, weights: LossWeights) -> LossReport:
    """Loss report over a dataset without any weight or statistic updates."""
    was_training = net.training
    net.eval()
    with torch.no_grad():
        spa, col, tv, ie, light_term = batch_losses(net, images, light, residual, weights)
        report = total_loss(spa, col, tv, ie, light_term, weights)
    if was_training:
        net.train()
    return report
