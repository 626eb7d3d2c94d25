"""Curve plots and CSV tables for metric reports."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tracking import (  # noqa: E402
    NORM_PRECISION_THRESHOLDS,
    PRECISION_THRESHOLDS,
    SUCCESS_THRESHOLDS,
    MetricReport,
)

_CURVES = (
    ("precision", "precision_curve", PRECISION_THRESHOLDS,
     "Location error threshold (px)", "Precision"),
    ("norm_precision", "norm_precision_curve", NORM_PRECISION_THRESHOLDS,
     "Normalized location error threshold", "Normalized precision"),
    ("success", "success_curve", SUCCESS_THRESHOLDS,
     "Overlap threshold", "Success rate"),
)


def write_curve_csv(path, thresholds, columns: Dict[str, Sequence[float]]) -> None:
    """Write curve samples with full-precision floats so a read-back is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold"] + names)
        for i, t in enumerate(thresholds):
            writer.writerow([repr(float(t))] + [repr(float(columns[n][i])) for n in names])


def read_curve_csv(path):
    """Read a curve CSV back as (thresholds, {label: values})."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    thresholds = [float(r[0]) for r in body]
    columns = {
        name: [float(r[i + 1]) for r in body] for i, name in enumerate(header[1:])
    }
    return thresholds, columns


def emit_plots(reports, out_dir, labels: List[str] | None = None) -> List[Path]:
    """Render precision / normalized precision / success curves plus CSVs.

    ``reports`` is one report or a list (for base-vs-enhanced overlays);
    file names are fixed so repeated runs overwrite deterministically.
    """
    if isinstance(reports, MetricReport):
        reports = [reports]
    if labels is None:
        labels = [f"tracker{i + 1}" for i in range(len(reports))]
    if len(labels) != len(reports):
        raise ValueError("need exactly one label per report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for name, attr, thresholds, xlabel, ylabel in _CURVES:
        columns = {
            label: getattr(report, attr) for label, report in zip(labels, reports)
        }
        csv_path = out_dir / f"{name}_curve.csv"
        write_curve_csv(csv_path, thresholds, columns)
        written.append(csv_path)

        fig, ax = plt.subplots(figsize=(5, 4))
        for label, values in columns.items():
            ax.plot(thresholds, values, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        png_path = out_dir / f"{name}_plot.png"
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
        written.append(png_path)
    return written
