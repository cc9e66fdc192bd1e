"""Void detection in concrete from time-series thermal imagery.

Per-pixel temperature traces are reduced by principal component
thermography, standardised, and regressed onto 0/1 void labels with
classical learners or a small perceptron. A 1-D heat-conduction simulator
provides synthetic recordings with known ground truth.
"""

__version__ = "0.1.0"

from .cube import RasterMatrix, ThermalCube, bin_spatial, load_cube, mean_curve, save_cube, to_cube, to_raster
from .evaluation import DetectionMap, SegReport, export_map, rmse, segmentation_metrics, threshold_map
from .labeling import LabelMask, RoiRect, extract_training_set, rasterize_rois
from .pct import PrincipalComponentThermography, ScoreScaler, select_k

__all__ = [
    "ThermalCube",
    "RasterMatrix",
    "bin_spatial",
    "to_raster",
    "to_cube",
    "mean_curve",
    "load_cube",
    "save_cube",
    "PrincipalComponentThermography",
    "ScoreScaler",
    "select_k",
    "RoiRect",
    "LabelMask",
    "rasterize_rois",
    "extract_training_set",
    "DetectionMap",
    "SegReport",
    "rmse",
    "threshold_map",
    "segmentation_metrics",
    "export_map",
]
