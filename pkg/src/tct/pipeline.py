"""End-to-end replay: ingest -> bin -> PCA -> standardise -> label -> train
-> per-dataset PCA + predict -> maps and reports.

Everything lands under one output directory together with
``manifest.json``, which records inputs, derived seeds, library versions,
the SHA-256 of every artifact and the run status.
"""

from __future__ import annotations

import hashlib
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .crossval import cross_validate
from .cube import bin_spatial, load_cube, mean_curve, save_cube, to_raster
from .evaluation import DEFAULT_THRESHOLD, DetectionMap, export_map, segmentation_metrics
from .exceptions import ConfigurationError, TCTError
from .labeling import (
    LabelMask,
    extract_training_set,
    load_mask_pgm,
    load_rois,
    rasterize_rois,
    save_mask_pgm,
)
from .mlp import TrainConfig, write_error_histogram
from .parallel import ordered_map, serial_blas
from .pct import PrincipalComponentThermography, ScoreScaler, save_features_csv, save_pca_json
from .regressors import CLASSICAL_KINDS, KINDS, make_regressor, save_regressor
from .synth import default_training_rois, generate_cube, load_scene, preset_scene

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def derive_seed(master: int, label: str) -> int:
    """Stable 32-bit seed for one pipeline stage."""
    state = np.random.SeedSequence([int(master), zlib.crc32(label.encode())]).generate_state(1)
    return int(state[0])


@dataclass
class DatasetSpec:
    """One input recording: a synthetic preset, a scene file, or a cube file."""

    name: str
    preset: str | None = None
    scene: str | None = None
    cube: str | None = None
    truth: str | None = None
    bin: int = 1

    @classmethod
    def from_value(cls, value, default_name):
        if isinstance(value, str):
            value = {"preset": value} if value.upper() in ("A", "B", "C") else {"cube": value}
        if not isinstance(value, dict):
            raise ConfigurationError(f"dataset entry must be an object or string, got {value!r}")
        value = dict(value)
        sources = [k for k in ("preset", "scene", "cube") if value.get(k)]
        if len(sources) != 1:
            raise ConfigurationError(f"dataset needs exactly one of preset/scene/cube: {value}")
        name = value.pop("name", None) or (value.get("preset") and f"scene_{value['preset'].upper()}") or default_name
        unknown = set(value) - {"preset", "scene", "cube", "truth", "bin"}
        if unknown:
            raise ConfigurationError(f"unknown dataset keys {sorted(unknown)}")
        return cls(name=name, **value)

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class PipelineConfig:
    train: DatasetSpec
    predict: list = field(default_factory=list)
    roi: str | None = None
    k: int = 10
    variance_threshold: float = 0.95
    models: list = field(default_factory=lambda: ["mlp"])
    hyperparameters: dict = field(default_factory=dict)
    train_config: dict = field(default_factory=dict)
    cv: bool = True
    threshold: float = DEFAULT_THRESHOLD
    output_dir: str = "tct_out"
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        doc = dict(doc)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        if "train" not in doc:
            raise ConfigurationError("config needs a 'train' dataset")
        if isinstance(doc["train"], list):
            raise ConfigurationError("exactly one train dataset is allowed")
        doc["train"] = DatasetSpec.from_value(doc["train"], "train")
        doc["predict"] = [DatasetSpec.from_value(v, f"predict_{i + 1}") for i, v in enumerate(doc.get("predict", []))]
        config = cls(**doc)
        config.validate()
        return config

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def validate(self):
        if isinstance(self.models, str):
            self.models = [self.models]
        for kind in self.models:
            if kind not in KINDS:
                raise ConfigurationError(f"unknown model kind {kind!r}; choose from {KINDS}")
        if not self.models:
            raise ConfigurationError("no model kinds requested")
        if int(self.k) < 1:
            raise ConfigurationError("k must be positive")
        if "mlp" in self.models and int(self.k) != 10:
            raise ConfigurationError("the 10-10-4-1 perceptron needs k = 10")
        names = [self.train.name] + [d.name for d in self.predict]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"dataset names must be unique: {names}")
        TrainConfig.from_dict(dict(self.train_config))

    def to_dict(self):
        return {
            "train": self.train.to_dict(),
            "predict": [d.to_dict() for d in self.predict],
            "roi": self.roi,
            "k": self.k,
            "variance_threshold": self.variance_threshold,
            "models": list(self.models),
            "hyperparameters": self.hyperparameters,
            "train_config": self.train_config,
            "cv": self.cv,
            "threshold": self.threshold,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }


def demo_config(output_dir="tct_out", seed=0, models=None) -> PipelineConfig:
    """Train on preset A, predict presets B and C."""
    return PipelineConfig(
        train=DatasetSpec("scene_A", preset="A"),
        predict=[DatasetSpec("scene_B", preset="B"), DatasetSpec("scene_C", preset="C")],
        models=list(models or KINDS),
        output_dir=str(output_dir),
        seed=seed,
    )


class PipelineError(TCTError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class _Dataset:
    spec: DatasetSpec
    cube: object = None
    truth: LabelMask | None = None
    features: np.ndarray | None = None


class _Run:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.artifacts = []
        self.seeds = {}
        self.results = {"datasets": {}, "models": {}}
        self.stage = "setup"

    def path(self, *parts) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(p)
        return p

    def seed(self, label: str) -> int:
        if label not in self.seeds:
            self.seeds[label] = derive_seed(self.config.seed, label)
        return self.seeds[label]

    # ------------------------------------------------------------- stages

    def ingest(self, spec: DatasetSpec) -> _Dataset:
        ds = _Dataset(spec)
        if spec.preset:
            scene = preset_scene(spec.preset, seed=self.seed(f"scene:{spec.name}"))
            ds.cube, ds.truth = generate_cube(scene)
        elif spec.scene:
            ds.cube, ds.truth = generate_cube(load_scene(spec.scene))
        else:
            ds.cube = load_cube(spec.cube)
            if spec.truth:
                ds.truth = load_mask_pgm(spec.truth)
        if spec.bin > 1:
            ds.cube = bin_spatial(ds.cube, spec.bin)
        if ds.truth is not None and ds.truth.labels.shape != ds.cube.shape[:2]:
            raise ConfigurationError(
                f"{spec.name}: truth mask {ds.truth.labels.shape} does not match cube {ds.cube.shape[:2]}"
            )
        save_cube(ds.cube, self.path(spec.name, "cube.tcub"))
        if ds.truth is not None:
            save_mask_pgm(ds.truth, self.path(spec.name, "truth.pgm"))
        np.savetxt(self.path(spec.name, "mean_curve.csv"), mean_curve(ds.cube), delimiter=",",
                   header="time_s,mean_temperature_c", comments="", fmt="%.17g")
        return ds

    def reduce(self, ds: _Dataset) -> None:
        raster = to_raster(ds.cube)
        pca = PrincipalComponentThermography(self.config.k, self.config.variance_threshold).fit(raster)
        scaler = ScoreScaler().fit(pca.transform(raster))
        ds.features = scaler.transform(pca.transform(raster))
        save_pca_json(pca, self.path(ds.spec.name, "pca.json"))
        self.path(ds.spec.name, "scaler.json").write_text(json.dumps(scaler.to_dict(), indent=1) + "\n")
        save_features_csv(ds.features, self.path(ds.spec.name, "features.csv"))
        self.results["datasets"][ds.spec.name] = {
            "dims": list(ds.cube.shape),
            "sample_rate": ds.cube.sample_rate,
            "explained_ratio_k": float(pca.explained_variance_ratio_.sum()),
            "k_for_threshold": pca.suggested_k(),
        }

    def label(self, ds: _Dataset):
        h, w = ds.cube.shape[:2]
        rois = load_rois(self.config.roi) if self.config.roi else default_training_rois()
        mask = rasterize_rois(rois, h, w)
        save_mask_pgm(mask, self.path(ds.spec.name, "roi_mask.pgm"))
        X, y = extract_training_set(ds.features, mask)
        self.results["training_samples"] = int(len(y))
        return X, y

    def fit_models(self, X, y) -> dict:
        models = {}
        for kind in self.config.models:
            params = dict(self.config.hyperparameters.get(kind, {}))
            if kind == "bagged_trees":
                params.setdefault("seed", self.seed("bootstrap"))
            if kind == "mlp":
                params = {**self.config.train_config, **params}
                params.setdefault("seed", self.seed("mlp"))
            model = make_regressor(kind, **params).fit(X, y)
            models[kind] = model
            save_regressor(model, self.path("models", f"{kind}.json"))
            entry = {"train_rmse": model.train_rmse_}
            if kind == "mlp":
                model.report_.to_csv(self.path("models", "mlp_train_report.csv"))
                write_error_histogram(model.network_, X, y, model.report_.split_indices,
                                      self.path("models", "mlp_error_histogram.csv"))
                entry.update(model.report_.summary())
            if self.config.cv and kind in CLASSICAL_KINDS:
                report = cross_validate(X, y, make_regressor(kind, **params), seed=self.seed("cv"))
                report.to_csv(self.path("models", f"{kind}_cv.csv"))
                entry["cv_mean_rmse"] = report.mean_rmse
            self.results["models"][kind] = entry
        return models

    def predict(self, ds: _Dataset, models: dict, score: bool) -> None:
        h, w = ds.cube.shape[:2]
        per_model = self.results["datasets"][ds.spec.name].setdefault("models", {})
        for kind, model in models.items():
            detection = DetectionMap.from_predictions(model.predict(ds.features), (h, w), kind)
            export_map(detection, self.path(ds.spec.name, f"map_{kind}.csv"), "csv")
            export_map(detection, self.path(ds.spec.name, f"map_{kind}.pgm"), "pgm")
            entry = {"min": float(detection.values.min()), "max": float(detection.values.max())}
            if score and ds.truth is not None:
                report = segmentation_metrics(detection, ds.truth, self.config.threshold)
                report.to_csv(self.path(ds.spec.name, f"seg_{kind}.csv"))
                self.path(ds.spec.name, f"seg_{kind}.txt").write_text(report.to_text())
                entry.update(iou=report.iou, precision=report.precision, recall=report.recall,
                             rmse_vs_truth=report.rmse_vs_truth)
            per_model[kind] = entry

    # -------------------------------------------------------------- driver

    def execute(self):
        cfg = self.config
        self.stage = "ingest"
        train = self.ingest(cfg.train)
        others = [self.ingest(spec) for spec in cfg.predict]
        self.stage = "pca"
        ordered_map(self.reduce, [train] + others)
        self.stage = "label"
        X, y = self.label(train)
        self.stage = "train"
        models = self.fit_models(X, y)
        self.stage = "predict"
        self.predict(train, models, score=False)
        for ds in others:
            self.predict(ds, models, score=True)
        self.stage = "done"

    def write_manifest(self, status: str, error: str | None = None) -> Path:
        import scipy
        import sklearn

        artifacts = []
        for p in sorted(set(self.artifacts)):
            if p.exists():
                artifacts.append({
                    "path": p.relative_to(self.out).as_posix(),
                    "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
                })
        manifest = {
            "status": status,
            "stage": self.stage,
            "error": error,
            # output_dir is left out so that reruns elsewhere compare equal
            "config": {k: v for k, v in self.config.to_dict().items() if k != "output_dir"},
            "master_seed": self.config.seed,
            "stage_seeds": dict(sorted(self.seeds.items())),
            "versions": {
                "tct": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "scikit-learn": sklearn.__version__,
            },
            "results": self.results,
            "artifacts": artifacts,
        }
        path = self.out / MANIFEST
        path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        return path


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage and return the manifest as a dict.

    Raises :class:`PipelineError` naming the failed stage; the manifest
    (status ``failed``) and any outputs written so far are kept.
    """
    run = _Run(config)
    run.out.mkdir(parents=True, exist_ok=True)
    try:
        with serial_blas():
            run.execute()
    except (TCTError, OSError) as exc:
        run.write_manifest("failed", f"{type(exc).__name__}: {exc}")
        raise PipelineError(run.stage, exc) from exc
    path = run.write_manifest("ok")
    return json.loads(path.read_text())
