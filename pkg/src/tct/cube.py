"""Thermal cubes: storage, spatial binning and the pixel-by-frame raster.

A cube holds ``H x W x T`` surface temperatures in degrees Celsius. Pixels
are linearised row-major (``p = row * W + col``) whenever the cube is
unfolded into a raster, and the raster is stored pixels-in-rows so that one
row is one learning sample.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ArgumentError, DataError, FormatError

__all__ = [
    "ThermalCube",
    "RasterMatrix",
    "bin_spatial",
    "to_raster",
    "to_cube",
    "mean_curve",
    "load_cube",
    "save_cube",
]

TCUB_MAGIC = b"TCUB"
TCUB_VERSION = 1
_HEADER = struct.Struct("<4sIIIIf")


def _frozen(array):
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ThermalCube:
    """Time series of thermal frames.

    Parameters
    ----------
    data : array_like of shape (height, width, frames)
        Surface temperature in degrees Celsius, indexed ``(row, col, t)``.
    sample_rate : float
        Frame rate in Hz.
    """

    data: np.ndarray
    sample_rate: float

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 3:
            raise DataError(f"cube data must be 3-D (H, W, T), got shape {data.shape}")
        h, w, t = data.shape
        if h < 1 or w < 1 or t < 2:
            raise DataError(f"cube needs H >= 1, W >= 1, T >= 2, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DataError("cube contains non-finite temperatures")
        rate = float(self.sample_rate)
        if not np.isfinite(rate) or rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate!r}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate", rate)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def equals(self, other: "ThermalCube") -> bool:
        """Bit-for-bit equality of data and sample rate."""
        return (
            self.sample_rate == other.sample_rate
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class RasterMatrix:
    """Cube unfolded to ``n_pixels x n_frames``; ``origin_dims`` is ``(H, W)``."""

    values: np.ndarray
    origin_dims: tuple

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DataError(f"raster must be 2-D, got shape {values.shape}")
        h, w = (int(d) for d in self.origin_dims)
        if h * w != values.shape[0]:
            raise DataError(
                f"origin_dims {h}x{w} do not match {values.shape[0]} pixel rows"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("raster contains non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin_dims", (h, w))

    @property
    def n_pixels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


def bin_spatial(cube: ThermalCube, window: int) -> ThermalCube:
    """Average non-overlapping ``window x window`` blocks of every frame.

    Rows and columns that do not fill a complete block are dropped, so the
    output is ``(H // window, W // window, T)``.
    """
    k = int(window)
    if k != window or k < 1:
        raise ArgumentError(f"window must be a positive integer, got {window!r}")
    h, w, t = cube.shape
    if k > h or k > w:
        raise ArgumentError(f"window {k} exceeds cube dims {h}x{w}")
    if k == 1:
        return cube
    hb, wb = h // k, w // k
    covered = cube.data[: hb * k, : wb * k, :]
    binned = covered.reshape(hb, k, wb, k, t).mean(axis=(1, 3))
    return ThermalCube(binned, cube.sample_rate)


def to_raster(cube: ThermalCube) -> RasterMatrix:
    h, w, t = cube.shape
    return RasterMatrix(cube.data.reshape(h * w, t), (h, w))


def to_cube(raster: RasterMatrix, sample_rate: float) -> ThermalCube:
    """Inverse of :func:`to_raster`."""
    h, w = raster.origin_dims
    return ThermalCube(raster.values.reshape(h, w, raster.n_frames), sample_rate)


def mean_curve(cube: ThermalCube) -> np.ndarray:
    """Spatially averaged temperature per frame.

    Returns
    -------
    ndarray of shape (frames, 2)
        Columns are time in seconds (``t / sample_rate``) and mean temperature.
    """
    t = np.arange(cube.frames, dtype=np.float64) / cube.sample_rate
    means = cube.data.mean(axis=(0, 1))
    return np.column_stack([t, means])


# --------------------------------------------------------------------- I/O


def save_cube(cube: ThermalCube, path, format: str = "tcub") -> None:
    """Write a cube as a TCUB binary file or a directory of per-frame CSVs.

    Values are stored as little-endian float32 in both cases (CSV with
    ``repr`` of the float32 value), so a round trip is exact for cubes whose
    data are already float32-representable.
    """
    path = Path(path)
    if format == "tcub":
        h, w, t = cube.shape
        header = _HEADER.pack(TCUB_MAGIC, TCUB_VERSION, h, w, t, cube.sample_rate)
        # frame-major: frame 0 row-major, then frame 1, ...
        payload = np.ascontiguousarray(np.moveaxis(cube.data, 2, 0), dtype="<f4")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
    elif format == "csv":
        path.mkdir(parents=True, exist_ok=True)
        (path / "sample_rate.txt").write_text(f"{cube.sample_rate!r}\n")
        data32 = cube.data.astype(np.float32)
        for t in range(cube.frames):
            frame = data32[:, :, t]
            lines = (",".join(repr(float(v)) for v in row) for row in frame)
            (path / f"frame_{t:05d}.csv").write_text("\n".join(lines) + "\n")
    else:
        raise ArgumentError(f"unknown cube format {format!r}")


def load_cube(path, format: str | None = None, sample_rate: float | None = None) -> ThermalCube:
    """Read a cube from a TCUB file or a CSV frame directory.

    ``format`` is inferred from the path when omitted (directory -> csv).
    For CSV directories the sample rate comes from ``sample_rate.txt`` when
    present, otherwise it must be passed explicitly.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such cube: {path}")
    if format is None:
        format = "csv" if path.is_dir() else "tcub"
    if format == "tcub":
        return _load_tcub(path)
    if format == "csv":
        return _load_csv_dir(path, sample_rate)
    raise ArgumentError(f"unknown cube format {format!r}")


def _load_tcub(path: Path) -> ThermalCube:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for TCUB header")
    magic, version, h, w, t, rate = _HEADER.unpack_from(raw, 0)
    if magic != TCUB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != TCUB_VERSION:
        raise FormatError(f"{path}: unsupported TCUB version {version}")
    expected = h * w * t * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise DataError(
            f"{path}: payload has {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(t, h, w)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite temperature in payload")
    # the header stores f32; recover the shortest decimal it stands for so
    # that 0.2 Hz reads back as the float64 0.2
    rate = float(str(np.float32(rate)))
    return ThermalCube(np.moveaxis(values, 0, 2).astype(np.float64), rate)


def _load_csv_dir(path: Path, sample_rate) -> ThermalCube:
    files = sorted(p for p in path.iterdir() if p.name.startswith("frame_") and p.suffix == ".csv")
    if not files:
        raise FormatError(f"{path}: no frame_*.csv files")
    expected_names = [f"frame_{i:05d}.csv" for i in range(len(files))]
    if [p.name for p in files] != expected_names:
        raise FormatError(f"{path}: frame files are not numbered contiguously from 0")
    if sample_rate is None:
        rate_file = path / "sample_rate.txt"
        if not rate_file.exists():
            raise FormatError(f"{path}: sample rate unknown (no sample_rate.txt)")
        sample_rate = float(rate_file.read_text().strip())
    frames = []
    for p in files:
        try:
            frame = np.loadtxt(p, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise FormatError(f"{p}: {exc}") from exc
        if frames and frame.shape != frames[0].shape:
            raise DataError(f"{p}: frame shape {frame.shape} != {frames[0].shape}")
        frames.append(frame)
    data = np.stack(frames, axis=2)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite temperature in frames")
    return ThermalCube(data, sample_rate)
