"""Ordinary and Huber-robust linear regression with an intercept."""

from __future__ import annotations

import numpy as np

from ..exceptions import ArgumentError
from ._base import PixelRegressor

_MAD_TO_SIGMA = 0.6744897501960817  # Phi^-1(0.75)


def _design(X):
    return np.column_stack([np.ones(X.shape[0]), X])


def _lstsq(A, y):
    # SVD-based: minimum-norm solution when A is rank deficient
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    return coef, int(rank)


class LinearRegressor(PixelRegressor):
    """Least-squares linear fit solved by an orthogonal (SVD) factorisation.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    rank_deficient_ : bool
        True when the design matrix (with intercept column) is rank
        deficient and the minimum-norm solution was returned.
    """

    kind = "linear"
    _state = ("coef_", "intercept_", "rank_deficient_")

    def _fit(self, X, y):
        if X.shape[0] <= X.shape[1]:
            raise ArgumentError(f"need more samples than features ({X.shape[0]} <= {X.shape[1]})")
        A = _design(X)
        beta, rank = _lstsq(A, y)
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.rank_deficient_ = rank < A.shape[1]

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_


def huber_loss(residuals, delta):
    a = np.abs(residuals)
    return np.where(a <= delta, 0.5 * a ** 2, delta * (a - 0.5 * delta))


class RobustLinearRegressor(PixelRegressor):
    """Linear fit under Huber loss by iteratively reweighted least squares.

    Residuals are scaled by a MAD estimate of their spread (re-estimated on
    every iteration) before the Huber threshold is applied, so ``delta`` is
    in units of residual standard deviations.

    Parameters
    ----------
    delta : float, default=1.345
        Huber threshold.
    max_iter : int, default=100
    tol : float, default=1e-8
        Convergence when the largest change of any IRLS weight drops below it.
    """

    kind = "robust_linear"
    _state = ("coef_", "intercept_", "scale_", "n_iter_", "converged_")

    def __init__(self, delta=1.345, max_iter=100, tol=1e-8):
        self.delta = delta
        self.max_iter = max_iter
        self.tol = tol

    def _fit(self, X, y):
        if self.delta <= 0:
            raise ArgumentError("delta must be positive")
        if X.shape[0] <= X.shape[1]:
            raise ArgumentError(f"need more samples than features ({X.shape[0]} <= {X.shape[1]})")
        A = _design(X)
        beta, _ = _lstsq(A, y)
        scale_floor = 1e-6 * np.std(y)
        weights = np.ones_like(y)

        best = (np.inf, beta, 0.0)
        self.converged_ = False
        self.n_iter_ = 0
        for it in range(1, self.max_iter + 1):
            r = y - A @ beta
            scale = max(np.median(np.abs(r - np.median(r))) / _MAD_TO_SIGMA, scale_floor)
            if scale == 0.0:
                # exact fit (e.g. constant target): every weight stays 1
                best = (0.0, beta, 0.0)
                self.converged_ = True
                break
            objective = scale ** 2 * np.mean(huber_loss(r / scale, self.delta))
            if objective < best[0]:
                best = (objective, beta, scale)

            u = np.abs(r) / scale
            new_weights = np.where(u <= self.delta, 1.0, self.delta / np.maximum(u, self.delta))
            sw = np.sqrt(new_weights)
            beta, _ = _lstsq(A * sw[:, None], y * sw)
            change = np.max(np.abs(new_weights - weights))
            weights = new_weights
            self.n_iter_ = it
            if change < self.tol:
                self.converged_ = True
                break

        if self.converged_:
            r = y - A @ beta
            scale = max(np.median(np.abs(r - np.median(r))) / _MAD_TO_SIGMA, scale_floor)
        else:
            _, beta, scale = best
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.scale_ = float(scale)
        self.weights_ = weights

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_
