"""Command-line interface: label, train, enhance, eval, plot."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import torch
from PIL import Image

from . import plots, tracking, weights_io
from .config import Config, apply_overrides, load_config, save_config
from .data import IMAGE_EXTENSIONS, build_dataset_index, load_and_resize, populate_label_cache
from .iia import interweave_adjust
from .network import EnhancerNet
from .config import NetworkConfig
from .training import train


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_config(path, overrides) -> Config:
    config = load_config(path) if path else Config()
    if overrides:
        config = apply_overrides(config, list(overrides))
    return config


@click.group()
def main():
    """Low-light enhancement with light-distribution suppression."""


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--set", "overrides", multiple=True, metavar="SECTION.FIELD=VALUE")
def label(data_dir, out_dir, config_path, overrides):
    """Populate the light-label cache for a dataset directory."""
    try:
        config = _load_config(config_path, overrides)
        tc = config.train
        index = build_dataset_index(data_dir, tc.sample_stride, out_dir)
        written = populate_label_cache(
            index, size=tc.input_size, lambda_smooth=tc.lambda_smooth
        )
        click.echo(f"labeled {written} frames ({len(index)} indexed) into {out_dir}")
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))


@main.command(name="train")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_dir", type=click.Path(exists=True), default=None)
@click.option("--labels", "label_dir", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--resume", type=click.Path(exists=True), default=None)
@click.option("--set", "overrides", multiple=True, metavar="SECTION.FIELD=VALUE")
def train_command(config_path, data_dir, label_dir, out_dir, resume, overrides):
    """Train the enhancer on a label-cached dataset."""
    try:
        config = _load_config(config_path, overrides)
        tc = config.train
        data_root = data_dir or tc.dataset_root
        if not data_root:
            raise ValueError("no dataset: pass --data or set train.dataset_root")
        labels_root = label_dir or tc.label_dir or str(Path(out_dir) / "labels")
        index = build_dataset_index(data_root, tc.sample_stride, labels_root)
        populate_label_cache(index, size=tc.input_size, lambda_smooth=tc.lambda_smooth)
        save_config(config, Path(out_dir) / "config.json")
        result = train(config, index, out_dir, resume=resume)
        final = result.reports[-1]
        click.echo(
            f"trained {result.epochs_run} epochs on {len(index)} frames; "
            f"final mean loss {final.total:.6g}; weights at {result.final_weights}"
        )
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))


def _load_net(weights_path, config_path, overrides) -> EnhancerNet:
    meta_path = Path(weights_path).with_suffix(".meta.json")
    if config_path or overrides:
        net_config = _load_config(config_path, overrides).network
    elif meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        section = meta["config"]["network"] if "network" in meta["config"] else meta["config"]
        net_config = NetworkConfig(**section)
    else:
        net_config = NetworkConfig()
    net = EnhancerNet(net_config)
    weights_io.load_model_weights(net, weights_path)
    net.eval()
    return net


def _save_image(array: np.ndarray, path: Path) -> None:
    data = np.clip(np.round(array * 255.0), 0, 255).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data).save(path)


@main.command()
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--iterations", type=int, default=None, help="override adjustment steps")
@click.option("--trace", is_flag=True, help="also dump every adjustment iteration")
@click.option("--set", "overrides", multiple=True, metavar="SECTION.FIELD=VALUE")
def enhance(weights_path, input_path, out_dir, config_path, iterations, trace, overrides):
    """Enhance one image or every image in a directory."""
    try:
        net = _load_net(weights_path, config_path, overrides)
        steps = iterations or net.config.iterations
        input_path = Path(input_path)
        out_dir = Path(out_dir)
        if input_path.is_dir():
            files = sorted(
                p for p in input_path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
            )
            if not files:
                raise ValueError(f"no images found in {input_path}")
        else:
            files = [input_path]
        for file in files:
            with Image.open(file) as img:
                arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
            if arr.shape[0] % 16 or arr.shape[1] % 16:
                arr = load_and_resize(file, size=net.config.input_size)
            tensor = torch.from_numpy(arr).permute(2, 0, 1)[None]
            with torch.no_grad():
                maps = net(tensor)
                run = interweave_adjust(tensor, maps.suppression, maps.enhancement, steps)
            _save_image(run.final[0].permute(1, 2, 0).numpy(), out_dir / file.name)
            if trace:
                stem = file.stem
                for n, frame in enumerate(run.frames):
                    _save_image(
                        frame[0].permute(1, 2, 0).numpy(),
                        out_dir / f"{stem}_iter{n:02d}.png",
                    )
        click.echo(f"enhanced {len(files)} image(s) into {out_dir}")
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))


@main.command(name="eval")
@click.option("--pred-dir", required=True, type=click.Path(exists=True))
@click.option("--gt-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--attributes", "attributes_path", type=click.Path(exists=True), default=None)
@click.option("--one-based", is_flag=True, help="box files use 1-based pixel coordinates")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--set", "overrides", multiple=True, metavar="SECTION.FIELD=VALUE")
def eval_command(pred_dir, gt_dir, out_dir, attributes_path, one_based, config_path, overrides):
    """Score tracker output against ground truth with OPE metrics."""
    try:
        options = _load_config(config_path, overrides).eval
        records = tracking.load_track_records(
            pred_dir, gt_dir,
            one_based=one_based or options.one_based,
            attributes_path=attributes_path or (options.attributes_path or None),
        )
        report = tracking.ope_metrics(records)
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "report.json"
        report_path.write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        plots.emit_plots(report, out_dir, labels=["tracker"])
        click.echo(
            f"precision {report.precision:.3f}, norm precision "
            f"{report.norm_precision:.3f}, success AUC {report.success_auc:.3f}; "
            f"report at {report_path}"
        )
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))


@main.command()
@click.option("--report", "report_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--label", "labels", multiple=True, help="one label per report")
@click.option("--out-dir", required=True, type=click.Path())
def plot(report_paths, labels, out_dir):
    """Render overlay curves from saved report JSON files."""
    try:
        reports = [
            tracking.MetricReport.from_dict(
                json.loads(Path(p).read_text(encoding="utf-8"))
            )
            for p in report_paths
        ]
        names = list(labels) if labels else [Path(p).stem for p in report_paths]
        written = plots.emit_plots(reports, out_dir, labels=names)
        click.echo(f"wrote {len(written)} files to {out_dir}")
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))


if __name__ == "__main__":
    main()
