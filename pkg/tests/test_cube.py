import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tct.cube import (
    RasterMatrix,
    ThermalCube,
    bin_spatial,
    load_cube,
    mean_curve,
    save_cube,
    to_cube,
    to_raster,
)
from tct.exceptions import ArgumentError, DataError, FormatError
from tct.synth import SynthScene, generate_cube


def random_cube(shape=(3, 4, 5), seed=0, rate=0.2):
    rng = np.random.default_rng(seed)
    # float32-representable, matching what the file formats store
    return ThermalCube((20 + rng.standard_normal(shape)).astype(np.float32), rate)


def test_invariants():
    with pytest.raises(DataError):
        ThermalCube(np.zeros((2, 2, 1)), 1.0)
    with pytest.raises(DataError):
        ThermalCube(np.zeros((2, 2, 3)), 0.0)
    bad = np.zeros((2, 2, 3))
    bad[0, 0, 0] = np.inf
    with pytest.raises(DataError):
        ThermalCube(bad, 1.0)


def test_tcub_round_trip(tmp_path):
    data = np.arange(12, dtype=np.float32).reshape(2, 2, 3)
    cube = ThermalCube(data, 0.2)
    save_cube(cube, tmp_path / "c.tcub")
    back = load_cube(tmp_path / "c.tcub")
    assert back.data.size == 12
    assert back.equals(cube)
    assert back.sample_rate == 0.2


def test_tcub_layout_is_frame_major(tmp_path):
    data = np.arange(12, dtype=np.float32).reshape(2, 2, 3)
    save_cube(ThermalCube(data, 5.0), tmp_path / "c.tcub")
    raw = (tmp_path / "c.tcub").read_bytes()
    magic, version, h, w, t, rate = struct.unpack_from("<4sIIIIf", raw)
    assert (magic, version, h, w, t, rate) == (b"TCUB", 1, 2, 2, 3, 5.0)
    payload = np.frombuffer(raw[24:], dtype="<f4")
    # frame 0 holds pixels (0,0),(0,1),(1,0),(1,1) at t=0
    assert payload[:4].tolist() == [0, 3, 6, 9]


def test_bad_magic(tmp_path):
    path = tmp_path / "c.tcub"
    save_cube(random_cube(), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_cube(path)


def test_short_payload(tmp_path):
    path = tmp_path / "c.tcub"
    save_cube(random_cube(), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(DataError):
        load_cube(path)


def test_nan_payload(tmp_path):
    path = tmp_path / "c.tcub"
    header = struct.pack("<4sIIIIf", b"TCUB", 1, 1, 1, 2, 1.0)
    path.write_bytes(header + np.array([1.0, np.nan], dtype="<f4").tobytes())
    with pytest.raises(DataError):
        load_cube(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_cube(tmp_path / "absent.tcub")


def test_csv_directory_round_trip(tmp_path):
    cube = random_cube((3, 2, 4))
    save_cube(cube, tmp_path / "frames", format="csv")
    assert sorted(p.name for p in (tmp_path / "frames").glob("frame_*.csv")) == [
        f"frame_{i:05d}.csv" for i in range(4)
    ]
    back = load_cube(tmp_path / "frames")
    assert back.equals(cube)


def test_bin_examples():
    one = ThermalCube(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None].repeat(2, axis=2), 1.0)
    assert bin_spatial(one, 2).data[0, 0, 0] == 2.5
    cube = random_cube((5, 7, 3))
    assert bin_spatial(cube, 1) is cube
    assert bin_spatial(cube, 2).shape == (2, 3, 3)
    with pytest.raises(ArgumentError):
        bin_spatial(cube, 6)
    with pytest.raises(ArgumentError):
        bin_spatial(cube, 0)


def test_bin_full_camera_dims():
    cube = ThermalCube(np.zeros((360, 640, 2)), 0.2)
    assert bin_spatial(cube, 4).shape == (90, 160, 2)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9), st.integers(2, 4)),
           elements=st.floats(-50, 50)),
    st.integers(1, 4),
)
def test_bin_preserves_mean_over_covered_region(values, k):
    h, w, _ = values.shape
    if k > min(h, w):
        return
    cube = ThermalCube(values, 1.0)
    binned = bin_spatial(cube, k)
    covered = values[: (h // k) * k, : (w // k) * k]
    np.testing.assert_allclose(binned.data.mean(axis=(0, 1)), covered.mean(axis=(0, 1)),
                               rtol=1e-9, atol=1e-12)


def test_raster_examples():
    single = ThermalCube(np.array([[[5.0, 6.0, 7.0]]]), 1.0)
    raster = to_raster(single)
    assert raster.values.tolist() == [[5.0, 6.0, 7.0]]
    cube = random_cube((3, 4, 5))
    raster = to_raster(cube)
    assert (raster.n_pixels, raster.n_frames) == (12, 5)
    # row-major pixel index p = r*W + c
    np.testing.assert_array_equal(raster.values[1 * 4 + 2], cube.data[1, 2])
    assert to_cube(raster, cube.sample_rate).equals(cube)
    assert isinstance(raster, RasterMatrix)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(2, 5)),
              elements=st.floats(-100, 100, width=32)))
def test_save_load_bit_identical(tmp_path_factory, values):
    cube = ThermalCube(values, 0.1)
    path = tmp_path_factory.mktemp("cubes") / "c.tcub"
    save_cube(cube, path)
    assert load_cube(path).equals(cube)
    assert to_cube(to_raster(cube), 0.1).equals(cube)


def test_mean_curve_examples():
    const = ThermalCube(np.full((3, 3, 4), 20.0), 0.5)
    curve = mean_curve(const)
    assert curve[:, 1].tolist() == [20.0] * 4
    assert curve[:, 0].tolist() == [0.0, 2.0, 4.0, 6.0]
    two = ThermalCube(np.array([[[1.0, 2.0], [3.0, 4.0]]]), 1.0)
    assert mean_curve(two)[:, 1].tolist() == [2.0, 3.0]


def test_mean_curve_of_heating_scene_nondecreasing():
    scene = SynthScene(height=6, width=8, duration=300, noise_sigma=0.0, gain_amplitude=0.0)
    cube, _ = generate_cube(scene)
    assert np.all(np.diff(mean_curve(cube)[:, 1]) >= 0)
