"""Command-line entry point: ``tct <subcommand> ...``.

Exit codes: 0 success, 2 configuration/argument error, 3 data error,
4 numeric failure, 5 I/O error. ``TCT_THREADS`` sets the worker count
(0 or unset: one per CPU); outputs are identical for any value.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .crossval import cross_validate
from .cube import bin_spatial, load_cube, mean_curve, save_cube, to_raster
from .evaluation import DEFAULT_THRESHOLD, DetectionMap, export_map, load_map_csv, segmentation_metrics
from .exceptions import ArgumentError, ConfigurationError, DataError, NumericError, TCTError
from .labeling import extract_training_set, load_mask_pgm, load_rois, rasterize_rois, save_mask_pgm
from .mlp import write_error_histogram
from .parallel import serial_blas, worker_count
from .pct import (
    PrincipalComponentThermography,
    ScoreScaler,
    load_features_csv,
    save_features_csv,
    save_pca_json,
)
from .pipeline import PipelineConfig, PipelineError, demo_config, run_pipeline
from .regressors import CLASSICAL_KINDS, KINDS, load_regressor, make_regressor, save_regressor
from .synth import generate_cube, load_scene, preset_scene, save_scene

log = logging.getLogger("tct")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, (ConfigurationError, ArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_DATA


def _json_arg(value):
    """Inline JSON or ``@path`` to a JSON file."""
    if value is None:
        return {}
    text = Path(value[1:]).read_text() if value.startswith("@") else value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON argument: {exc}") from exc


# ------------------------------------------------------------ subcommands


def cmd_synth(args):
    if bool(args.preset) == bool(args.scene):
        raise ConfigurationError("give exactly one of --preset or --scene")
    scene = preset_scene(args.preset, seed=args.seed or 0) if args.preset else load_scene(args.scene)
    if args.scene and args.seed is not None:
        from dataclasses import replace

        scene = replace(scene, seed=args.seed)
    cube, truth = generate_cube(scene)
    save_cube(cube, args.out_cube, args.format)
    if args.out_mask:
        save_mask_pgm(truth, args.out_mask)
    if args.dump_scene:
        save_scene(scene, args.dump_scene)
    print(f"cube {cube.shape} @ {cube.sample_rate:g} Hz -> {args.out_cube}")


def cmd_ingest(args):
    cube = load_cube(args.input, args.format, args.sample_rate)
    if args.bin > 1:
        cube = bin_spatial(cube, args.bin)
    save_cube(cube, args.out)
    if args.mean_curve:
        np.savetxt(args.mean_curve, mean_curve(cube), delimiter=",",
                   header="time_s,mean_temperature_c", comments="", fmt="%.17g")
    print(f"cube {cube.shape} @ {cube.sample_rate:g} Hz -> {args.out}")


def cmd_pca(args):
    cube = load_cube(args.cube)
    if args.bin > 1:
        cube = bin_spatial(cube, args.bin)
    raster = to_raster(cube)
    k = None if args.k == 0 else args.k
    pca = PrincipalComponentThermography(k, args.threshold).fit(raster)
    scores = pca.transform(raster)
    if args.out_model:
        save_pca_json(pca, args.out_model)
    if not args.raw:
        scaler = ScoreScaler().fit(scores)
        scores = scaler.transform(scores)
        if args.out_scaler:
            Path(args.out_scaler).write_text(json.dumps(scaler.to_dict(), indent=1) + "\n")
    save_features_csv(scores, args.out_features)
    print(f"k={pca.n_components_} explains {pca.explained_variance_ratio_.sum():.4f}; "
          f"{pca.suggested_k()} components reach {args.threshold:g}")


def _load_mask(args, n_rows):
    if args.mask:
        return load_mask_pgm(args.mask)
    if not args.roi:
        raise ConfigurationError("give --mask or --roi")
    if args.dims:
        h, w = args.dims
    elif args.cube:
        h, w = load_cube(args.cube).shape[:2]
    else:
        raise ConfigurationError("--roi needs --dims H W or --cube")
    if h * w != n_rows:
        raise ConfigurationError(f"dims {h}x{w} do not match {n_rows} feature rows")
    return rasterize_rois(load_rois(args.roi), h, w)


def cmd_train(args):
    features = load_features_csv(args.features)
    mask = _load_mask(args, features.shape[0])
    X, y = extract_training_set(features, mask)
    hyper = _json_arg(args.hyper)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in args.model:
        params = dict(hyper.get(kind, {}))
        if kind in ("bagged_trees", "mlp"):
            params.setdefault("seed", args.seed)
        model = make_regressor(kind, **params).fit(X, y)
        save_regressor(model, out / f"{kind}.json")
        line = f"{kind}: train RMSE {model.train_rmse_:.4f}"
        if kind == "mlp":
            model.report_.to_csv(out / "mlp_train_report.csv")
            write_error_histogram(model.network_, X, y, model.report_.split_indices,
                                  out / "mlp_error_histogram.csv")
            line += f", stopped after {model.report_.epochs_run} epochs ({model.report_.stop_reason})"
        if args.cv and kind in CLASSICAL_KINDS:
            report = cross_validate(X, y, make_regressor(kind, **params), seed=args.seed)
            report.to_csv(out / f"{kind}_cv.csv")
            line += f", 10-fold RMSE {report.mean_rmse:.4f}"
        print(line)


def cmd_predict(args):
    model = load_regressor(args.model)
    features = load_features_csv(args.features)
    detection = DetectionMap.from_predictions(model.predict(features), tuple(args.dims), model.kind)
    export_map(detection, args.out)
    if args.out_pgm:
        export_map(detection, args.out_pgm, "pgm")
    print(f"map {detection.height}x{detection.width} in [{detection.values.min():.3f}, "
          f"{detection.values.max():.3f}] -> {args.out}")


def cmd_eval(args):
    detection = load_map_csv(args.map)
    report = segmentation_metrics(detection, load_mask_pgm(args.truth), args.threshold)
    if args.out:
        report.to_csv(args.out)
    print(report.to_text(), end="")


def cmd_pipeline(args):
    if args.config:
        doc = _json_arg("@" + args.config)
    else:
        doc = demo_config().to_dict()
    # flags override the config file
    overrides = {
        "output_dir": args.out,
        "seed": args.seed,
        "k": args.k,
        "threshold": args.threshold,
        "models": args.model,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_cv:
        doc["cv"] = False
    config = PipelineConfig.from_dict(doc)
    try:
        manifest = run_pipeline(config)
    except PipelineError as exc:
        print(f"pipeline failed at stage {exc.stage}: {exc.cause}", file=sys.stderr)
        raise
    for name, entry in manifest["results"]["datasets"].items():
        for kind, m in entry.get("models", {}).items():
            if "iou" in m:
                print(f"{name:10s} {kind:17s} IoU {m['iou']:.3f}  range [{m['min']:.2f}, {m['max']:.2f}]")
    print(f"artifacts in {config.output_dir}")


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tct", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic heating scene")
    p.add_argument("--preset", choices=["A", "B", "C"])
    p.add_argument("--scene", help="scene JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-mask", help="ground-truth PGM")
    p.add_argument("--dump-scene", help="write the scene parameters as JSON")
    p.add_argument("--format", choices=["tcub", "csv"], default="tcub")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="load, bin and re-save a cube")
    p.add_argument("input", help="TCUB file or CSV frame directory")
    p.add_argument("--format", choices=["tcub", "csv"])
    p.add_argument("--sample-rate", type=float)
    p.add_argument("--bin", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--mean-curve", help="write (time, mean temperature) CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pca", help="fit PCA on a cube and export scores")
    p.add_argument("--cube", required=True)
    p.add_argument("--bin", type=int, default=1)
    p.add_argument("--k", type=int, default=10, help="components (0 = choose by --threshold)")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--raw", action="store_true", help="skip standardisation")
    p.add_argument("--out-model")
    p.add_argument("--out-scaler")
    p.add_argument("--out-features", required=True)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("train", help="fit regressors on labeled pixels")
    p.add_argument("--features", required=True)
    p.add_argument("--mask", help="label PGM (0 solid, 255 void, 128 unlabeled)")
    p.add_argument("--roi", help="ROI JSON")
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--cube", help="cube whose dims the ROIs refer to")
    p.add_argument("--model", nargs="+", choices=KINDS, default=["mlp"])
    p.add_argument("--hyper", help="per-kind hyperparameters, JSON or @file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cv", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="full-frame detection map from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"), required=True)
    p.add_argument("--out", required=True, help=".csv or .pgm")
    p.add_argument("--out-pgm")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a map against a ground-truth mask")
    p.add_argument("--map", required=True, help="map CSV")
    p.add_argument("--truth", required=True, help="truth PGM")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", help="single-line CSV report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run the full train/predict experiment")
    p.add_argument("--config", help="pipeline JSON (default: presets A -> B, C, all models)")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--model", nargs="+", choices=KINDS)
    p.add_argument("--no-cv", action="store_true")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        worker_count()
        with serial_blas():
            args.func(args)
    except PipelineError as exc:
        return exit_code_for(exc)
    except (TCTError, OSError) as exc:
        print(f"tct {args.command}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
