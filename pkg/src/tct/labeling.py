"""Rectangular regions of interest, label masks and training-pair extraction.

Masks are ternary: ``1`` void, ``0`` solid and :data:`UNLABELED` (-1) for
pixels that carry no supervision. ROIs are half-open rectangles
``[r0, r1) x [c0, c1)`` in binned-pixel coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ArgumentError, DataError, FormatError

__all__ = [
    "UNLABELED",
    "RoiRect",
    "LabelMask",
    "rasterize_rois",
    "extract_training_set",
    "load_rois",
    "save_rois",
    "save_mask_pgm",
    "load_mask_pgm",
    "read_pgm",
    "write_pgm",
]

UNLABELED = -1

_PGM_CODES = {0: 0, 1: 255, UNLABELED: 128}


@dataclass(frozen=True)
class RoiRect:
    label: int
    r0: int
    c0: int
    r1: int
    c1: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ArgumentError(f"ROI label must be 0 or 1, got {self.label!r}")
        if not (0 <= self.r0 < self.r1 and 0 <= self.c0 < self.c1):
            raise ArgumentError(f"degenerate ROI {self}")

    @property
    def area(self) -> int:
        return (self.r1 - self.r0) * (self.c1 - self.c0)

    def within(self, height: int, width: int) -> bool:
        return self.r1 <= height and self.c1 <= width

    def mirrored(self, width: int) -> "RoiRect":
        """Left-right mirror image on a grid of the given width."""
        return RoiRect(self.label, self.r0, width - self.c1, self.r1, width - self.c0)

    def to_dict(self) -> dict:
        return {"label": self.label, "r0": self.r0, "c0": self.c0, "r1": self.r1, "c1": self.c1}


@dataclass(frozen=True, eq=False)
class LabelMask:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8, copy=True)
        if labels.ndim != 2:
            raise DataError(f"label mask must be 2-D, got shape {labels.shape}")
        if not np.all(np.isin(labels, (0, 1, UNLABELED))):
            raise DataError("label mask values must be 0, 1 or UNLABELED")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def labeled(self) -> np.ndarray:
        return self.labels != UNLABELED

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labeled))

    def __eq__(self, other):
        return isinstance(other, LabelMask) and np.array_equal(self.labels, other.labels)

    def fliplr(self) -> "LabelMask":
        return LabelMask(self.labels[:, ::-1])


def rasterize_rois(rois, height: int, width: int) -> LabelMask:
    """Paint ROIs onto an otherwise unlabeled ``height x width`` grid.

    Overlap between ROIs of the same label is allowed; overlap between a
    void and a solid ROI is rejected.
    """
    labels = np.full((height, width), UNLABELED, dtype=np.int8)
    for roi in rois:
        if not roi.within(height, width):
            raise ArgumentError(f"{roi} lies outside the {height}x{width} grid")
        block = labels[roi.r0:roi.r1, roi.c0:roi.c1]
        if np.any((block != UNLABELED) & (block != roi.label)):
            raise ArgumentError(f"{roi} overlaps an ROI with a different label")
        block[...] = roi.label
    return LabelMask(labels)


def extract_training_set(features, mask: LabelMask):
    """Labeled rows of ``features`` with their 0/1 targets, in pixel order.

    ``features`` has one row per pixel in row-major order of ``mask``.
    """
    features = np.asarray(features, dtype=np.float64)
    flat = mask.labels.ravel()
    if features.shape[0] != flat.size:
        raise ArgumentError(
            f"{features.shape[0]} feature rows for a {mask.height}x{mask.width} mask"
        )
    keep = flat != UNLABELED
    y = flat[keep].astype(np.float64)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise DataError("training labels must contain both classes")
    return features[keep], y


# -------------------------------------------------------------------- files


def load_rois(path) -> list:
    try:
        doc = json.loads(Path(path).read_text())
        return [RoiRect(int(d["label"]), int(d["r0"]), int(d["c0"]), int(d["r1"]), int(d["c1"])) for d in doc]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed ROI file ({exc})") from exc


def save_rois(rois, path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in rois], indent=1) + "\n")


def write_pgm(pixels: np.ndarray, path) -> None:
    """Write an 8-bit binary (P5) greymap."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval separated by whitespace, '#' comments
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM is supported")
    body = raw[pos:pos + w * h]
    if len(body) != w * h:
        raise DataError(f"{path}: PGM payload shorter than {w}x{h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def save_mask_pgm(mask: LabelMask, path) -> None:
    codes = np.empty(mask.labels.shape, dtype=np.uint8)
    for label, code in _PGM_CODES.items():
        codes[mask.labels == label] = code
    write_pgm(codes, path)


def load_mask_pgm(path) -> LabelMask:
    codes = read_pgm(path)
    labels = np.full(codes.shape, UNLABELED, dtype=np.int8)
    labels[codes == 0] = 0
    labels[codes == 255] = 1
    bad = ~np.isin(codes, list(_PGM_CODES.values()))
    if np.any(bad):
        raise DataError(f"{path}: mask values must be 0, 128 or 255")
    return LabelMask(labels)
