"""Seeded k-fold cross-validation reporting per-fold RMSE."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .evaluation import rmse
from .exceptions import ArgumentError
from .parallel import ordered_map
from .regressors import make_regressor

N_FOLDS = 10


@dataclass(frozen=True)
class CvReport:
    folds: tuple
    mean_rmse: float
    seed: int
    fold_sizes: tuple

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["fold", "rmse"])
            for i, value in enumerate(self.folds):
                writer.writerow([i + 1, repr(float(value))])
            writer.writerow(["mean", repr(float(self.mean_rmse))])


def kfold_indices(m: int, n_folds: int = N_FOLDS, seed: int = 0) -> list:
    """Shuffle ``range(m)`` with ``seed`` and cut it into near-equal folds
    (sizes differ by at most one)."""
    if m < n_folds:
        raise ArgumentError(f"{m} samples cannot fill {n_folds} folds")
    order = np.random.default_rng(seed).permutation(m)
    return np.array_split(order, n_folds)


def cross_validate(X, y, model="linear", hyperparams=None, seed=0, n_folds=N_FOLDS) -> CvReport:
    """Hold out each fold in turn and score the model trained on the rest.

    ``model`` is a kind name (see :data:`tct.regressors.KINDS`) or an
    unfitted estimator, which is cloned for every fold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ArgumentError("X and y lengths differ")
    if isinstance(model, str):
        template = make_regressor(model, **(hyperparams or {}))
    else:
        template = clone(model).set_params(**(hyperparams or {}))

    folds = kfold_indices(X.shape[0], n_folds, seed)

    def score(held_out):
        train = np.ones(X.shape[0], dtype=bool)
        train[held_out] = False
        fitted = clone(template).fit(X[train], y[train])
        return rmse(fitted.predict(X[held_out]), y[held_out])

    scores = ordered_map(score, folds)
    return CvReport(
        folds=tuple(scores),
        mean_rmse=float(np.mean(scores)),
        seed=int(seed),
        fold_sizes=tuple(len(f) for f in folds),
    )
