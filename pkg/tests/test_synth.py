from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tct.cube import load_cube, save_cube
from tct.exceptions import ConfigurationError
from tct.labeling import RoiRect
from tct.synth import (
    CONCRETE,
    SynthScene,
    default_training_rois,
    gain_field,
    generate_cube,
    load_scene,
    preset_scene,
    save_scene,
    semi_infinite_rise,
    simulate_trace,
    stable_timestep,
)

SMALL = dict(height=8, width=10, void_rois=(RoiRect(1, 2, 2, 6, 5),))


def test_equilibrium_without_flux():
    scene = SynthScene(flux=0.0, duration=600, **SMALL)
    for kind in ("solid", "void"):
        assert np.all(simulate_trace(scene, kind).temperatures == scene.initial)


def test_semi_infinite_oracle():
    # thick slab, no surface loss, short time: the half-space solution applies
    scene = SynthScene(slab_thickness=0.3, cover_depth=0.1, h_conv=0.0, flux=300.0,
                       duration=120.0, sample_rate=1.0, **SMALL)
    trace = simulate_trace(scene, "solid").temperatures
    rise = trace[60] - scene.initial
    expected = semi_infinite_rise(300.0, CONCRETE, 60.0)
    assert abs(rise - expected) / expected <= 0.03


def test_void_never_cooler_than_solid():
    scene = preset_scene("A")
    solid = simulate_trace(scene, "solid").temperatures
    void = simulate_trace(scene, "void").temperatures
    t = scene.times
    assert np.all(void[t >= 30] >= solid[t >= 30])
    assert void[-1] > solid[-1]


def test_noiseless_two_profiles():
    scene = SynthScene(noise_sigma=0.0, gain_amplitude=0.0, duration=300, **SMALL)
    cube, truth = generate_cube(scene)
    voids = cube.data[truth.labels == 1]
    solids = cube.data[truth.labels == 0]
    assert np.all(voids == voids[0]) and np.all(solids == solids[0])
    assert voids[:, -1].min() > solids[:, -1].max()


def test_noiseless_separability_of_preset_a():
    scene = replace(preset_scene("A"), noise_sigma=0.0)
    cube, truth = generate_cube(scene)
    last = cube.data[:, :, -1]
    assert last[truth.labels == 1].min() > last[truth.labels == 0].max()


def test_preset_frame_counts_and_rates():
    assert [preset_scene(n).n_frames for n in "ABC"] == [360, 292, 200]
    assert [preset_scene(n).sample_rate for n in "ABC"] == [0.2, 0.1, 0.2]
    assert (preset_scene("A").height, preset_scene("A").width) == (90, 160)


def test_preset_c_is_mirror_of_a():
    assert preset_scene("C").void_mask() == preset_scene("A").void_mask().fliplr()
    assert preset_scene("C").void_mask() != preset_scene("A").void_mask()


def test_preset_mean_rises():
    rises = {}
    for name in "ABC":
        scene = preset_scene(name)
        trace = simulate_trace(scene, "solid").temperatures
        rises[name] = trace[-1] - trace[0]
    assert 6.0 < rises["A"] < 8.0
    assert 6.0 < rises["B"] < 8.0
    assert rises["C"] < rises["A"] / 2


def test_training_rois_sit_on_truth():
    mask = preset_scene("A").void_mask()
    for roi in default_training_rois():
        block = mask.labels[roi.r0:roi.r1, roi.c0:roi.c1]
        assert np.all(block == roi.label)


def test_determinism_and_seed_dependence():
    scene = SynthScene(duration=200, **SMALL)
    a, _ = generate_cube(scene)
    b, _ = generate_cube(scene)
    assert a.equals(b)
    c, _ = generate_cube(SynthScene(duration=200, seed=1, **SMALL))
    assert not a.equals(c)


def test_lossless_file_round_trip(tmp_path):
    cube, _ = generate_cube(SynthScene(duration=100, **SMALL))
    save_cube(cube, tmp_path / "c.tcub")
    assert load_cube(tmp_path / "c.tcub").equals(cube)


@settings(max_examples=15, deadline=None)
@given(st.floats(10, 600), st.floats(0.05, 1.0), st.floats(0, 30),
       st.sampled_from(["adiabatic", "fixed"]))
def test_stability_envelope(flux, rate, h_conv, back):
    scene = SynthScene(flux=flux, sample_rate=rate, h_conv=h_conv, duration=max(300, 2 / rate),
                       back_face=back, **SMALL)
    upper = scene.initial + flux * scene.duration / (
        CONCRETE.volumetric_heat * scene.slab_thickness) + 50
    for kind in ("solid", "void"):
        trace = simulate_trace(scene, kind).temperatures
        assert np.all(trace >= scene.initial - 5) and np.all(trace <= upper)


def test_energy_sanity_without_convection():
    scene = SynthScene(h_conv=0.0, duration=600, noise_sigma=0.0, **SMALL)
    cube, _ = generate_cube(scene)
    means = cube.data.mean(axis=(0, 1))
    assert np.all(np.diff(means) > 0)


def test_stable_timestep_bound():
    scene = SynthScene(**SMALL)
    alpha = max(scene.concrete.diffusivity, scene.air.diffusivity)
    assert stable_timestep(scene) <= scene.dx ** 2 / (2 * alpha)


def test_substep_cap():
    with pytest.raises(ConfigurationError):
        simulate_trace(SynthScene(dx=1e-6, slab_thickness=1e-4, cover_depth=5e-5,
                                  sample_rate=1e-3, duration=2e3, **SMALL), "solid")


def test_scene_validation():
    with pytest.raises(ConfigurationError):
        SynthScene(cover_depth=0.2)
    with pytest.raises(ConfigurationError):
        SynthScene(duration=-1)
    with pytest.raises(ConfigurationError):
        SynthScene(height=4, width=4, void_rois=(RoiRect(1, 0, 0, 5, 5),))
    with pytest.raises(ConfigurationError):
        preset_scene("Z")


def test_gain_field_span():
    g = gain_field(30, 40, 0.02, 5)
    assert g.max() == pytest.approx(1.02, abs=1e-12) or g.min() == pytest.approx(0.98, abs=1e-12)
    assert np.all(np.abs(g - 1) <= 0.02 + 1e-12)
    assert np.all(gain_field(3, 3, 0.0, 0) == 1)


def test_scene_file_round_trip(tmp_path):
    scene = preset_scene("C", seed=4)
    save_scene(scene, tmp_path / "s.json")
    assert load_scene(tmp_path / "s.json") == scene
