"""Scheme 1 learners (plus the perceptron) behind one ``kind`` registry."""

from __future__ import annotations

import json
from pathlib import Path

from ..exceptions import ArgumentError, DataError
from .kernel import KernelRidgeRegressor
from .linear import LinearRegressor, RobustLinearRegressor
from .trees import BaggedTreesRegressor, RegressionTree

__all__ = [
    "KINDS",
    "CLASSICAL_KINDS",
    "LinearRegressor",
    "RobustLinearRegressor",
    "KernelRidgeRegressor",
    "RegressionTree",
    "BaggedTreesRegressor",
    "make_regressor",
    "regressor_from_dict",
    "save_regressor",
    "load_regressor",
]

CLASSICAL_KINDS = ("linear", "robust_linear", "kernel_quadratic", "kernel_rbf", "bagged_trees")
KINDS = CLASSICAL_KINDS + ("mlp",)


def _mlp_class():
    from ..mlp import MLPRegressor

    return MLPRegressor


def make_regressor(kind: str, **params):
    """Construct an unfitted estimator for ``kind`` with its default settings."""
    if kind == "linear":
        return LinearRegressor(**params)
    if kind == "robust_linear":
        return RobustLinearRegressor(**params)
    if kind in ("kernel_quadratic", "kernel_rbf"):
        params.setdefault("kernel", kind.split("_", 1)[1])
        return KernelRidgeRegressor(**params)
    if kind == "bagged_trees":
        return BaggedTreesRegressor(**params)
    if kind == "mlp":
        return _mlp_class()(**params)
    raise ArgumentError(f"unknown model kind {kind!r}; choose from {KINDS}")


def regressor_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind in ("kernel_quadratic", "kernel_rbf"):
        cls = KernelRidgeRegressor
    elif kind == "mlp":
        cls = _mlp_class()
    else:
        cls = {
            "linear": LinearRegressor,
            "robust_linear": RobustLinearRegressor,
            "bagged_trees": BaggedTreesRegressor,
            "tree": RegressionTree,
        }.get(kind)
    if cls is None:
        raise DataError(f"unknown model kind {kind!r} in serialised model")
    return cls.from_dict(doc)


def save_regressor(model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_regressor(path):
    return regressor_from_dict(json.loads(Path(path).read_text()))
