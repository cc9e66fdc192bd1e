"""Synthetic heating-phase thermography of a slab with subsurface voids.

Every pixel is an independent 1-D column: concrete all the way down for
solid pixels, a concrete cover over an air gap for void pixels. The column
is heated by a constant surface flux with convective loss and integrated
with an explicit finite-difference scheme. Lateral conduction is ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .cube import ThermalCube
from .exceptions import ConfigurationError
from .labeling import LabelMask, RoiRect, rasterize_rois

__all__ = [
    "Material",
    "CONCRETE",
    "AIR",
    "SynthScene",
    "TraceProfile",
    "simulate_trace",
    "generate_cube",
    "gain_field",
    "preset_scene",
    "default_training_rois",
    "load_scene",
    "save_scene",
    "semi_infinite_rise",
]

MAX_SUBSTEPS = 10_000_000


@dataclass(frozen=True)
class Material:
    conductivity: float  # W/(m K)
    density: float  # kg/m^3
    specific_heat: float  # J/(kg K)

    @property
    def diffusivity(self) -> float:
        return self.conductivity / (self.density * self.specific_heat)

    @property
    def volumetric_heat(self) -> float:
        return self.density * self.specific_heat


CONCRETE = Material(1.6, 2300.0, 880.0)
AIR = Material(0.026, 1.2, 1005.0)


@dataclass(frozen=True)
class SynthScene:
    """Geometry, materials and heating for one synthetic recording.

    ``height``/``width`` are in binned pixels. ``h_conv`` and ``flux`` may be
    zero (insulated surface, no heating); every other physical quantity
    must be positive.
    """

    height: int = 90
    width: int = 160
    void_rois: tuple = ()
    slab_thickness: float = 0.10
    cover_depth: float = 0.03
    concrete: Material = CONCRETE
    air: Material = AIR
    flux: float = 280.0
    h_conv: float = 8.0
    ambient: float = 28.0
    initial: float = 28.0
    duration: float = 1800.0
    sample_rate: float = 0.2
    noise_sigma: float = 0.05
    gain_amplitude: float = 0.02
    seed: int = 0
    dx: float = 1e-3
    back_face: str = "adiabatic"

    def __post_init__(self):
        object.__setattr__(self, "void_rois", tuple(self.void_rois))
        self.validate()

    def validate(self):
        positive = {
            "slab_thickness": self.slab_thickness,
            "cover_depth": self.cover_depth,
            "duration": self.duration,
            "sample_rate": self.sample_rate,
            "dx": self.dx,
        }
        for mat_name in ("concrete", "air"):
            for attr, value in asdict(getattr(self, mat_name)).items():
                positive[f"{mat_name}.{attr}"] = value
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        for name in ("flux", "h_conv", "noise_sigma", "gain_amplitude"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be non-negative, got {value!r}")
        if self.gain_amplitude >= 1:
            raise ConfigurationError("gain_amplitude must be below 1")
        if self.cover_depth >= self.slab_thickness:
            raise ConfigurationError("cover_depth must be smaller than slab_thickness")
        if self.height < 1 or self.width < 1:
            raise ConfigurationError("scene dims must be positive")
        if self.back_face not in ("adiabatic", "fixed"):
            raise ConfigurationError(f"unknown back_face {self.back_face!r}")
        for roi in self.void_rois:
            if roi.label != 1:
                raise ConfigurationError(f"void ROI must carry label 1: {roi}")
            if not roi.within(self.height, self.width):
                raise ConfigurationError(f"void ROI {roi} outside {self.height}x{self.width}")
        if self.n_frames < 2:
            raise ConfigurationError("scene must produce at least two frames")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames, dtype=np.float64) / self.sample_rate

    def mirrored(self) -> "SynthScene":
        return replace(self, void_rois=tuple(r.mirrored(self.width) for r in self.void_rois))

    def void_mask(self) -> LabelMask:
        labels = rasterize_rois(self.void_rois, self.height, self.width).labels.copy()
        labels[labels < 0] = 0
        return LabelMask(labels)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["void_rois"] = [r.to_dict() for r in self.void_rois]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthScene":
        doc = dict(doc)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown scene fields: {sorted(unknown)}")
        if "void_rois" in doc:
            doc["void_rois"] = tuple(
                RoiRect(int(d.get("label", 1)), int(d["r0"]), int(d["c0"]), int(d["r1"]), int(d["c1"]))
                for d in doc["void_rois"]
            )
        for mat_name in ("concrete", "air"):
            if mat_name in doc and isinstance(doc[mat_name], dict):
                doc[mat_name] = Material(**doc[mat_name])
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class TraceProfile:
    kind: str
    temperatures: np.ndarray = field(repr=False)


def semi_infinite_rise(flux, material: Material, t):
    """Surface temperature rise of a half-space under constant flux."""
    t = np.asarray(t, dtype=np.float64)
    return 2.0 * flux * np.sqrt(material.diffusivity * t / np.pi) / material.conductivity


def _column(scene: SynthScene, kind: str):
    """Node capacities (J/m^2 K per node) and segment conductances (W/m^2 K)."""
    n_seg = int(round(scene.slab_thickness / scene.dx))
    cover_seg = int(round(scene.cover_depth / scene.dx))
    if n_seg < 2 or cover_seg < 1 or (kind == "void" and cover_seg >= n_seg):
        raise ConfigurationError(
            f"dx={scene.dx} too coarse for slab {scene.slab_thickness} / cover {scene.cover_depth}"
        )
    seg_k = np.full(n_seg, scene.concrete.conductivity)
    seg_rc = np.full(n_seg, scene.concrete.volumetric_heat)
    if kind == "void":
        seg_k[cover_seg:] = scene.air.conductivity
        seg_rc[cover_seg:] = scene.air.volumetric_heat
    elif kind != "solid":
        raise ConfigurationError(f"unknown trace kind {kind!r}")
    conductance = seg_k / scene.dx
    half = seg_rc * scene.dx / 2.0
    capacity = np.zeros(n_seg + 1)
    capacity[:-1] += half
    capacity[1:] += half
    return capacity, conductance


def _step_operator(scene: SynthScene, kind: str, dt: float):
    """Affine one-step map ``u <- A u + b`` of the explicit scheme, as an
    augmented ``(n+1) x (n+1)`` matrix acting on ``[u; 1]``.

    ``u`` is the departure from the initial temperature, so a scene at
    equilibrium stays exactly at zero.
    """
    capacity, conductance = _column(scene, kind)
    n = capacity.size
    lap = np.zeros((n, n))
    idx = np.arange(n - 1)
    lap[idx, idx + 1] += conductance
    lap[idx + 1, idx] += conductance
    lap[idx, idx] -= conductance
    lap[idx + 1, idx + 1] -= conductance
    source = np.zeros(n)
    lap[0, 0] -= scene.h_conv
    source[0] = scene.flux + scene.h_conv * (scene.ambient - scene.initial)

    step = np.zeros((n + 1, n + 1))
    step[:n, :n] = np.eye(n) + dt * lap / capacity[:, None]
    step[:n, n] = dt * source / capacity
    step[n, n] = 1.0
    if scene.back_face == "fixed":
        step[n - 1, :] = 0.0
        step[n - 1, n - 1] = 1.0
    return step


def stable_timestep(scene: SynthScene) -> float:
    """Largest explicit step for which every node update is a convex
    combination, capped by ``dx^2 / (2 alpha_max)``."""
    limits = []
    for kind in ("solid", "void"):
        capacity, conductance = _column(scene, kind)
        outflow = np.zeros(capacity.size)
        outflow[:-1] += conductance
        outflow[1:] += conductance
        outflow[0] += scene.h_conv
        limits.append(np.min(capacity / outflow))
    alpha_max = max(scene.concrete.diffusivity, scene.air.diffusivity)
    limits.append(scene.dx ** 2 / (2.0 * alpha_max))
    return float(min(limits))


def simulate_trace(scene: SynthScene, kind: str) -> TraceProfile:
    """Noise-free surface temperature of a solid or void column.

    Each frame interval is split into the fewest equal sub-steps that keep
    the explicit scheme stable; the sub-steps are composed exactly into one
    propagator per frame.
    """
    period = 1.0 / scene.sample_rate
    n_sub = math.ceil(period / stable_timestep(scene) - 1e-12)
    if n_sub > MAX_SUBSTEPS:
        raise ConfigurationError(
            f"{n_sub} sub-steps per frame needed for stability; refine dx or raise sample_rate"
        )
    dt = period / n_sub
    propagator = np.linalg.matrix_power(_step_operator(scene, kind, dt), n_sub)

    n_nodes = propagator.shape[0] - 1
    state = np.zeros(n_nodes + 1)
    state[n_nodes] = 1.0
    rise = np.empty(scene.n_frames)
    for i in range(scene.n_frames):
        rise[i] = state[0]
        state = propagator @ state
    surface = scene.initial + rise
    if not np.all(np.isfinite(surface)):
        raise ConfigurationError("simulation diverged")
    return TraceProfile(kind, surface)


def gain_field(height: int, width: int, amplitude: float, seed: int) -> np.ndarray:
    """Smooth multiplicative field spanning exactly ``1 +- amplitude``."""
    if amplitude == 0:
        return np.ones((height, width))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6A1]))
    rows = np.linspace(0.0, 1.0, height)[:, None]
    cols = np.linspace(0.0, 1.0, width)[None, :]
    field_ = np.zeros((height, width))
    for _ in range(3):
        fr, fc = rng.uniform(0.2, 1.2, size=2)
        pr, pc = rng.uniform(0.0, 2 * np.pi, size=2)
        field_ += np.cos(2 * np.pi * fr * rows + pr) * np.cos(2 * np.pi * fc * cols + pc)
    field_ -= field_.mean()
    peak = np.max(np.abs(field_))
    if peak == 0:
        return np.ones((height, width))
    return 1.0 + amplitude * field_ / peak


def generate_cube(scene: SynthScene):
    """Render a scene into a noisy cube and its ground-truth void mask.

    Pixel ``p`` draws its noise from a generator seeded by ``(seed, p)``,
    so the result does not depend on generation order. Temperatures are
    rounded to float32 so that a TCUB round trip is lossless.
    """
    solid = simulate_trace(scene, "solid").temperatures
    void = simulate_trace(scene, "void").temperatures
    truth = scene.void_mask()
    is_void = truth.labels.astype(bool)

    profiles = np.where(is_void[:, :, None], void, solid) - scene.initial
    gain = gain_field(scene.height, scene.width, scene.gain_amplitude, scene.seed)
    data = scene.initial + gain[:, :, None] * profiles

    if scene.noise_sigma > 0:
        t = scene.n_frames
        noise = np.empty((scene.height * scene.width, t))
        for p in range(noise.shape[0]):
            rng = np.random.default_rng(np.random.SeedSequence([scene.seed, p]))
            noise[p] = rng.normal(0.0, scene.noise_sigma, size=t)
        data = data + noise.reshape(scene.height, scene.width, t)

    data = data.astype(np.float32).astype(np.float64)
    return ThermalCube(data, scene.sample_rate), truth


# ------------------------------------------------------------------ presets

# Two hollow cores of unequal width so that a left-right mirror moves them.
_CORES = (RoiRect(1, 20, 22, 70, 62), RoiRect(1, 20, 92, 70, 140))

_PRESETS = {
    # 360 frames at 0.2 Hz, ~28 -> 35 C
    "A": dict(ambient=28.0, initial=28.0, duration=1800.0, sample_rate=0.2, flux=280.0),
    # 292 frames at 0.1 Hz, ~26 -> 33 C
    "B": dict(ambient=26.0, initial=26.0, duration=2920.0, sample_rate=0.1, flux=217.0),
    # 200 frames at 0.2 Hz, ~25 -> 27 C, cores mirrored
    "C": dict(ambient=25.0, initial=25.0, duration=1000.0, sample_rate=0.2, flux=109.0),
}


def preset_scene(name: str, seed: int = 0) -> SynthScene:
    """Desk-scale stand-ins for the three laboratory recordings."""
    try:
        params = _PRESETS[name.upper()]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None
    scene = SynthScene(void_rois=_CORES, seed=seed, **params)
    return scene.mirrored() if name.upper() == "C" else scene


def default_training_rois() -> list:
    """Two void and three solid rectangles on the preset-A layout."""
    return [
        RoiRect(1, 30, 32, 50, 52),
        RoiRect(1, 30, 106, 50, 126),
        RoiRect(0, 25, 5, 65, 13),
        RoiRect(0, 25, 72, 65, 80),
        RoiRect(0, 25, 147, 65, 155),
    ]


def load_scene(path) -> SynthScene:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid scene JSON ({exc})") from exc
    return SynthScene.from_dict(doc)


def save_scene(scene: SynthScene, path) -> None:
    Path(path).write_text(json.dumps(scene.to_dict(), indent=1) + "\n")
