"""Scoring and export of detection maps."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import ArgumentError, DataError
from .labeling import UNLABELED, LabelMask, write_pgm

__all__ = [
    "DetectionMap",
    "SegReport",
    "rmse",
    "threshold_map",
    "segmentation_metrics",
    "export_map",
    "load_map_csv",
    "DEFAULT_THRESHOLD",
]

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class DetectionMap:
    """Unclamped per-pixel model response over the full frame."""

    values: np.ndarray
    source_model: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DataError(f"detection map must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("detection map contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_predictions(cls, predictions, dims, source_model=""):
        h, w = dims
        predictions = np.asarray(predictions, dtype=np.float64)
        if predictions.size != h * w:
            raise ArgumentError(f"{predictions.size} predictions cannot fill a {h}x{w} map")
        return cls(predictions.reshape(h, w), source_model)


@dataclass(frozen=True)
class SegReport:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    iou: float
    rmse_vs_truth: float

    FIELDS = ("threshold", "tp", "fp", "tn", "fn", "precision", "recall", "iou", "rmse_vs_truth")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.FIELDS)
            writer.writerow([repr(v) for v in asdict(self).values()])

    def to_text(self) -> str:
        return (
            f"threshold  {self.threshold:g}\n"
            f"tp/fp/tn/fn  {self.tp}/{self.fp}/{self.tn}/{self.fn}\n"
            f"precision  {self.precision:.4f}\n"
            f"recall     {self.recall:.4f}\n"
            f"iou        {self.iou:.4f}\n"
            f"rmse       {self.rmse_vs_truth:.4f}\n"
        )


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size == 0:
        raise ArgumentError("rmse of an empty sequence")
    if pred.shape != truth.shape:
        raise ArgumentError(f"length mismatch: {pred.size} vs {truth.size}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def threshold_map(detection, cutoff: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Binary mask, 1 where the response is at least ``cutoff``."""
    values = detection.values if isinstance(detection, DetectionMap) else np.asarray(detection)
    return (values >= cutoff).astype(np.uint8)


def segmentation_metrics(detection, truth: LabelMask, threshold: float = DEFAULT_THRESHOLD) -> SegReport:
    """Confusion counts, precision, recall, IoU and RMSE over labeled truth pixels.

    ``detection`` may be a :class:`DetectionMap` (thresholded here) or an
    already binary mask, in which case the RMSE is computed on that mask.
    """
    if isinstance(detection, DetectionMap):
        values = detection.values
    else:
        values = np.asarray(detection, dtype=np.float64)
    if values.shape != truth.labels.shape:
        raise ArgumentError(f"map {values.shape} and truth {truth.labels.shape} differ")
    labeled = truth.labels != UNLABELED
    if not np.any(labeled):
        raise ArgumentError("truth mask has no labeled pixels")

    pred = values[labeled] >= threshold
    actual = truth.labels[labeled] == 1
    tp = int(np.count_nonzero(pred & actual))
    fp = int(np.count_nonzero(pred & ~actual))
    fn = int(np.count_nonzero(~pred & actual))
    tn = int(np.count_nonzero(~pred & ~actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    union = tp + fp + fn
    iou = tp / union if union else 0.0
    err = rmse(values[labeled], truth.labels[labeled])
    return SegReport(float(threshold), tp, fp, tn, fn, precision, recall, iou, err)


def export_map(detection: DetectionMap, path, format: str | None = None) -> None:
    """Write a map as an 8-bit PGM (values clamped to [0, 1]) or a full-precision CSV."""
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower() or "csv"
    if format == "pgm":
        scaled = np.rint(np.clip(detection.values, 0.0, 1.0) * 255.0).astype(np.uint8)
        write_pgm(scaled, path)
    elif format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in detection.values:
                writer.writerow([repr(float(v)) for v in row])
    else:
        raise ArgumentError(f"unknown map format {format!r}")


def load_map_csv(path, source_model: str = "") -> DetectionMap:
    try:
        values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return DetectionMap(values, source_model)
