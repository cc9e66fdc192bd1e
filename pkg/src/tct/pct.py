"""Principal component thermography.

Each pixel's temperature trace is one sample and each frame one feature.
The traces are centred per frame and decomposed by SVD; a pixel is then
described by its projections on the leading time-basis vectors (loadings).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cube import RasterMatrix
from .exceptions import ArgumentError, DataError

__all__ = [
    "PrincipalComponentThermography",
    "ScoreScaler",
    "select_k",
    "fix_signs",
    "save_pca_json",
    "load_pca_json",
    "save_features_csv",
    "load_features_csv",
]

PCA_JSON_VERSION = 1


def _values(X) -> np.ndarray:
    if isinstance(X, RasterMatrix):
        return X.values
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ArgumentError(f"expected a 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("input contains non-finite values")
    return X


def fix_signs(loadings: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    Ties go to the lowest row index (``argmax`` returns the first maximum).
    """
    loadings = np.array(loadings, dtype=np.float64, copy=True)
    pivots = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[pivots, np.arange(loadings.shape[1])])
    signs[signs == 0] = 1.0
    return loadings * signs


def select_k(explained_ratio, threshold: float = 0.95) -> int:
    """Smallest number of components whose cumulative ratio reaches ``threshold``.

    Returns the full length when the threshold is never reached.
    """
    ratios = np.asarray(explained_ratio, dtype=np.float64).ravel()
    if ratios.size == 0:
        raise ArgumentError("explained_ratio is empty")
    cumulative = np.cumsum(ratios)
    hits = np.nonzero(cumulative >= threshold - 1e-12)[0]
    return int(hits[0]) + 1 if hits.size else int(ratios.size)


class PrincipalComponentThermography(TransformerMixin, BaseEstimator):
    """PCA of per-pixel temperature traces computed by SVD.

    Parameters
    ----------
    n_components : int or None, default=10
        Number of loadings kept. ``None`` selects the count from
        ``variance_threshold``.
    variance_threshold : float, default=0.95
        Cumulative explained-variance target used when ``n_components`` is
        ``None``; always available afterwards through :meth:`suggested_k`.

    Attributes
    ----------
    mean_ : ndarray of shape (n_frames,)
        Per-frame mean over pixels.
    loadings_ : ndarray of shape (n_frames, n_components)
        Orthonormal time-basis vectors, sign-normalised by :func:`fix_signs`.
    singular_values_ : ndarray of shape (n_components,)
    explained_variance_ratio_ : ndarray of shape (n_components,)
    explained_variance_ratio_all_ : ndarray of shape (min(n_pixels, n_frames),)
        Ratios for every component; sums to one.
    """

    def __init__(self, n_components=10, variance_threshold=0.95):
        self.n_components = n_components
        self.variance_threshold = variance_threshold

    def fit(self, X, y=None):
        X = _values(X)
        n_pixels, n_frames = X.shape
        if n_pixels < 2:
            raise ArgumentError("PCA needs at least two pixels")

        mean = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
        power = s ** 2
        total = power.sum()
        if total <= 0:
            raise DataError("raster has zero variance; no principal direction exists")
        ratio_all = power / total

        k = self.n_components
        if k is None:
            k = select_k(ratio_all, self.variance_threshold)
        k = int(k)
        if not 1 <= k <= min(n_pixels, n_frames):
            raise ArgumentError(
                f"n_components={k} outside [1, {min(n_pixels, n_frames)}]"
            )

        self.mean_ = mean
        self.loadings_ = fix_signs(vt[:k].T)
        self.singular_values_ = s[:k]
        self.explained_variance_ratio_ = ratio_all[:k]
        self.explained_variance_ratio_all_ = ratio_all
        self.n_components_ = k
        self.n_features_in_ = n_frames
        return self

    def transform(self, X):
        check_is_fitted(self, "loadings_")
        X = _values(X)
        if X.shape[1] != self.n_features_in_:
            raise ArgumentError(
                f"raster has {X.shape[1]} frames but the model was fitted on "
                f"{self.n_features_in_}; fit a separate model per dataset"
            )
        return (X - self.mean_) @ self.loadings_

    def inverse_transform(self, scores):
        check_is_fitted(self, "loadings_")
        return self.mean_ + np.asarray(scores, dtype=np.float64) @ self.loadings_.T

    def suggested_k(self, threshold=None) -> int:
        check_is_fitted(self, "loadings_")
        threshold = self.variance_threshold if threshold is None else threshold
        return select_k(self.explained_variance_ratio_all_, threshold)

    # ------------------------------------------------------------ serialise

    def to_dict(self) -> dict:
        check_is_fitted(self, "loadings_")
        return {
            "version": PCA_JSON_VERSION,
            "n_frames": int(self.n_features_in_),
            "k": int(self.n_components_),
            "mean": self.mean_.tolist(),
            "loadings": self.loadings_.tolist(),
            "singular_values": self.singular_values_.tolist(),
            "explained_ratio": self.explained_variance_ratio_.tolist(),
            "explained_ratio_all": self.explained_variance_ratio_all_.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PrincipalComponentThermography":
        if doc.get("version") != PCA_JSON_VERSION:
            raise DataError(f"unsupported PCA model version {doc.get('version')!r}")
        model = cls(n_components=int(doc["k"]))
        model.mean_ = np.asarray(doc["mean"], dtype=np.float64)
        model.loadings_ = np.asarray(doc["loadings"], dtype=np.float64).reshape(
            int(doc["n_frames"]), int(doc["k"])
        )
        model.singular_values_ = np.asarray(doc["singular_values"], dtype=np.float64)
        model.explained_variance_ratio_ = np.asarray(doc["explained_ratio"], dtype=np.float64)
        model.explained_variance_ratio_all_ = np.asarray(
            doc.get("explained_ratio_all", doc["explained_ratio"]), dtype=np.float64
        )
        model.n_components_ = int(doc["k"])
        model.n_features_in_ = int(doc["n_frames"])
        return model


class ScoreScaler(TransformerMixin, BaseEstimator):
    """Z-score each column with its mean and sample (``ddof=1``) std.

    Constant columns get a recorded scale of 1 and therefore map to zeros.
    """

    def fit(self, X, y=None):
        X = _values(X)
        if X.shape[0] < 2:
            raise ArgumentError("standardisation needs at least two rows")
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0, ddof=1)
        # constant up to rounding of the mean
        constant = scale <= 1e-12 * np.maximum(1.0, np.abs(self.mean_))
        scale[constant] = 1.0
        self.scale_ = scale
        self.constant_ = constant
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = _values(X)
        if X.shape[1] != self.n_features_in_:
            raise ArgumentError(
                f"expected {self.n_features_in_} columns, got {X.shape[1]}"
            )
        Z = (X - self.mean_) / self.scale_
        Z[:, self.constant_] = 0.0
        return Z

    def inverse_transform(self, Z):
        check_is_fitted(self, "scale_")
        return np.asarray(Z, dtype=np.float64) * self.scale_ + self.mean_

    def to_dict(self) -> dict:
        check_is_fitted(self, "scale_")
        return {"scale_mean": self.mean_.tolist(), "scale_std": self.scale_.tolist()}


# ------------------------------------------------------------------ files


def save_pca_json(model: PrincipalComponentThermography, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_pca_json(path) -> PrincipalComponentThermography:
    return PrincipalComponentThermography.from_dict(json.loads(Path(path).read_text()))


def save_features_csv(scores, path) -> None:
    """One row per pixel (row-major pixel order), header ``pc1..pck``."""
    scores = np.asarray(scores, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"pc{i + 1}" for i in range(scores.shape[1])])
        for row in scores:
            writer.writerow([repr(float(v)) for v in row])


def load_features_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or any(h != f"pc{i + 1}" for i, h in enumerate(header)):
            raise DataError(f"{path}: expected header pc1..pck")
        rows = [[float(v) for v in row] for row in reader if row]
    scores = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    if not np.all(np.isfinite(scores)):
        raise DataError(f"{path}: non-finite feature value")
    return scores
