"""One-pass-evaluation scoring of tracker outputs.

Boxes are (x, y, w, h) with top-left pixel origin. Conventions:

* precision: fraction of frames whose center location error is strictly
  below the threshold, headline threshold 20 px, curve over 0..50 px.
* success: fraction of frames whose IoU is strictly above the threshold,
  curve over 0..1 in steps of 0.05, ranked by trapezoidal AUC.
* normalized precision: center error scaled per-axis by the ground-truth
  box size, curve over 0..0.5 in steps of 0.01, headline threshold 0.2.

Per-sequence curves are averaged with equal weight. Frames whose ground
truth is the all-zero box are treated as absent annotations and skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

PRECISION_THRESHOLDS = np.arange(0, 51, dtype=np.float64)
SUCCESS_THRESHOLDS = np.arange(21, dtype=np.float64) * 0.05
NORM_PRECISION_THRESHOLDS = np.arange(51, dtype=np.float64) * 0.01


@dataclass(frozen=True)
class Box:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box sides must be non-negative, got {self}")

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h


def cle(pred: Box, gt: Box) -> float:
    """Center location error in pixels."""
    (px, py), (gx, gy) = pred.center, gt.center
    return float(np.hypot(px - gx, py - gy))


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 by convention when the union is empty."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    inter = max(0.0, ix) * max(0.0, iy)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


@dataclass
class TrackRecord:
    """Predictions and ground truth for one sequence."""

    sequence: str
    pred: List[Box]
    gt: List[Box]
    attributes: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.pred) != len(self.gt):
            raise ValueError(
                f"sequence '{self.sequence}': {len(self.pred)} predictions vs "
                f"{len(self.gt)} ground-truth boxes"
            )
        if not self.pred:
            raise ValueError(f"sequence '{self.sequence}' is empty")


@dataclass
class MetricReport:
    precision: float
    precision_curve: List[float]
    success_auc: float
    success_curve: List[float]
    norm_precision: float
    norm_precision_auc: float
    norm_precision_curve: List[float]
    n_sequences: int
    n_frames: int
    per_attribute: Dict[str, "MetricReport"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "precision": self.precision,
            "precision_curve": list(self.precision_curve),
            "success_auc": self.success_auc,
            "success_curve": list(self.success_curve),
            "norm_precision": self.norm_precision,
            "norm_precision_auc": self.norm_precision_auc,
            "norm_precision_curve": list(self.norm_precision_curve),
            "n_sequences": self.n_sequences,
            "n_frames": self.n_frames,
        }
        if self.per_attribute:
            out["per_attribute"] = {
                name: report.to_dict() for name, report in self.per_attribute.items()
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        per_attribute = data.get("per_attribute", {})
        return cls(
            precision=data["precision"],
            precision_curve=list(data["precision_curve"]),
            success_auc=data["success_auc"],
            success_curve=list(data["success_curve"]),
            norm_precision=data["norm_precision"],
            norm_precision_auc=data["norm_precision_auc"],
            norm_precision_curve=list(data["norm_precision_curve"]),
            n_sequences=data["n_sequences"],
            n_frames=data["n_frames"],
            per_attribute={k: cls.from_dict(v) for k, v in per_attribute.items()},
        )


def _frame_errors(record: TrackRecord):
    """Per-frame CLE, IoU, and normalized CLE, skipping absent ground truth."""
    cles, ious, norms = [], [], []
    for pred, gt in zip(record.pred, record.gt):
        if gt.x == 0 and gt.y == 0 and gt.w == 0 and gt.h == 0:
            continue
        cles.append(cle(pred, gt))
        ious.append(iou(pred, gt))
        (px, py), (gx, gy) = pred.center, gt.center
        nx = (px - gx) / max(gt.w, 1e-12)
        ny = (py - gy) / max(gt.h, 1e-12)
        norms.append(float(np.hypot(nx, ny)))
    return np.asarray(cles), np.asarray(ious), np.asarray(norms)


def _curves(record: TrackRecord):
    cles, ious, norms = _frame_errors(record)
    if cles.size == 0:
        raise ValueError(f"sequence '{record.sequence}' has no annotated frames")
    precision = (cles[None, :] < PRECISION_THRESHOLDS[:, None]).mean(axis=1)
    success = (ious[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1)
    norm_prec = (norms[None, :] < NORM_PRECISION_THRESHOLDS[:, None]).mean(axis=1)
    return precision, success, norm_prec, cles.size


def _aggregate(records: Sequence[TrackRecord]) -> dict:
    precisions, successes, norm_precs = [], [], []
    frames = 0
    for record in records:
        p, s, np_, n = _curves(record)
        precisions.append(p)
        successes.append(s)
        norm_precs.append(np_)
        frames += n
    precision_curve = np.mean(precisions, axis=0)
    success_curve = np.mean(successes, axis=0)
    norm_curve = np.mean(norm_precs, axis=0)
    return {
        "precision": float(precision_curve[20]),
        "precision_curve": precision_curve.tolist(),
        "success_auc": float(np.trapezoid(success_curve, SUCCESS_THRESHOLDS)),
        "success_curve": success_curve.tolist(),
        "norm_precision": float(norm_curve[20]),
        "norm_precision_auc": float(
            np.trapezoid(norm_curve, NORM_PRECISION_THRESHOLDS) / 0.5
        ),
        "norm_precision_curve": norm_curve.tolist(),
        "n_sequences": len(records),
        "n_frames": frames,
    }


def ope_metrics(records: Sequence[TrackRecord]) -> MetricReport:
    """Score a set of sequences; also scores each attribute subset present."""
    records = list(records)
    if not records:
        raise ValueError("no track records given")
    report = MetricReport(**_aggregate(records))
    attributes = sorted({a for r in records for a in r.attributes})
    for attribute in attributes:
        subset = [r for r in records if attribute in r.attributes]
        report.per_attribute[attribute] = MetricReport(**_aggregate(subset))
    return report


def improvement_delta(base: float, enhanced: float) -> float:
    """Relative improvement in percent, reported to three decimals."""
    if base <= 0:
        raise ValueError(f"base score must be positive, got {base}")
    return round(100.0 * (enhanced - base) / base, 3)


def _parse_box_line(line: str, one_based: bool) -> Box:
    parts = [p for p in line.replace(",", " ").split() if p]
    if len(parts) != 4:
        raise ValueError(f"expected 'x,y,w,h', got {line.strip()!r}")
    x, y, w, h = (float(p) for p in parts)
    if one_based:
        x, y = x - 1.0, y - 1.0
    return Box(x, y, w, h)


def read_box_file(path, one_based: bool = False) -> List[Box]:
    boxes = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                boxes.append(_parse_box_line(line, one_based))
    return boxes


def load_track_records(
    pred_dir,
    gt_dir,
    one_based: bool = False,
    attributes_path: Optional[str] = None,
) -> List[TrackRecord]:
    """Pair up prediction and ground-truth box files by file stem.

    The optional attributes file is JSON mapping an attribute name to the
    list of sequence ids it applies to.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    gt_files = sorted(gt_dir.glob("*.txt"))
    if not gt_files:
        raise ValueError(f"no ground-truth .txt files in {gt_dir}")
    tags: Dict[str, List[str]] = {}
    if attributes_path:
        raw = json.loads(Path(attributes_path).read_text(encoding="utf-8"))
        for attribute, sequences in raw.items():
            for sequence in sequences:
                tags.setdefault(sequence, []).append(attribute)
    records = []
    for gt_file in gt_files:
        sequence = gt_file.stem
        pred_file = pred_dir / gt_file.name
        if not pred_file.exists():
            raise ValueError(f"no prediction file for sequence '{sequence}'")
        records.append(
            TrackRecord(
                sequence=sequence,
                pred=read_box_file(pred_file, one_based),
                gt=read_box_file(gt_file, one_based),
                attributes=tuple(sorted(tags.get(sequence, ()))),
            )
        )
    return records
