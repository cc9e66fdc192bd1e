from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..evaluation import rmse
from ..exceptions import ArgumentError, DataError


class PixelRegressor(RegressorMixin, BaseEstimator):
    """Shared validation and bookkeeping for the score-to-label regressors.

    Subclasses implement ``_fit(X, y)`` and ``_predict(X)`` and list their
    learned attributes in ``_state`` for serialisation.
    """

    kind = None
    _state = ()

    def fit(self, X, y):
        X, y = self._check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        self._fit(X, y)
        self.train_rmse_ = rmse(self._predict(X), y)
        return self

    def predict(self, X):
        check_is_fitted(self, "n_features_in_")
        X = self._check_x(X)
        if X.shape[1] != self.n_features_in_:
            raise ArgumentError(
                f"model expects {self.n_features_in_} features, got {X.shape[1]}"
            )
        return self._predict(X)

    @staticmethod
    def _check_x(X):
        try:
            return check_array(X, dtype=np.float64)
        except ValueError as exc:
            raise DataError(str(exc)) from exc

    def _check_xy(self, X, y):
        X = self._check_x(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise ArgumentError(f"{X.shape[0]} rows in X but {y.shape[0]} targets")
        if not np.all(np.isfinite(y)):
            raise DataError("targets contain non-finite values")
        if X.shape[0] < 2:
            raise ArgumentError("need at least two training samples")
        return X, y

    # serialisation -----------------------------------------------------

    def _state_to_json(self) -> dict:
        out = {}
        for name in self._state:
            value = getattr(self, name)
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out

    def _state_from_json(self, doc: dict) -> None:
        for name in self._state:
            value = doc[name]
            setattr(self, name, np.asarray(value, dtype=np.float64) if isinstance(value, list) else value)

    def to_dict(self) -> dict:
        check_is_fitted(self, "n_features_in_")
        return {
            "kind": self.kind,
            "hyperparameters": self.get_params(),
            "n_features": int(self.n_features_in_),
            "train_rmse": float(self.train_rmse_),
            "parameters": self._state_to_json(),
        }

    @classmethod
    def from_dict(cls, doc: dict):
        model = cls(**doc["hyperparameters"])
        model.n_features_in_ = int(doc["n_features"])
        model.train_rmse_ = float(doc["train_rmse"])
        model._state_from_json(doc["parameters"])
        return model
