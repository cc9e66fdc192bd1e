"""Kernel ridge regression with quadratic and Gaussian (RBF) kernels.

Stands in for quadratic- and Gaussian-kernel support vector regression:
same kernel family, but a closed-form dual solve instead of an
epsilon-insensitive QP.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from ..exceptions import ArgumentError, NumericError
from ._base import PixelRegressor

log = logging.getLogger(__name__)

KERNELS = ("quadratic", "rbf")
_RIDGE_RETRIES = 3
_PREDICT_CHUNK = 2048


def quadratic_kernel(A, B):
    return (1.0 + A @ B.T) ** 2


def rbf_kernel(A, B, gamma):
    # direct differences, so identical rows give exactly k = 1
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


class KernelRidgeRegressor(PixelRegressor):
    """Dual-form ridge regression ``(K + ridge * I) alpha = y``.

    Parameters
    ----------
    kernel : {"quadratic", "rbf"}
        ``(1 + x.x')^2`` or ``exp(-gamma * |x - x'|^2)``.
    ridge : float, default=1e-3
        Regularisation added to the kernel diagonal; must be positive.
    gamma : float or None, default=None
        RBF width; ``None`` means ``1 / n_features``.

    If the Cholesky factorisation of ``K + ridge * I`` fails, the ridge is
    multiplied by 10 (at most three times) and ``ridge_increased_`` is set.
    """

    _state = ("support_", "dual_coef_", "ridge_used_", "gamma_", "ridge_increased_")

    def __init__(self, kernel="rbf", ridge=1e-3, gamma=None):
        self.kernel = kernel
        self.ridge = ridge
        self.gamma = gamma

    @property
    def kind(self):
        return f"kernel_{self.kernel}"

    def _kernel(self, A, B):
        if self.kernel == "quadratic":
            return quadratic_kernel(A, B)
        return rbf_kernel(A, B, self.gamma_)

    def _fit(self, X, y):
        if self.kernel not in KERNELS:
            raise ArgumentError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not self.ridge > 0:
            raise ArgumentError(f"ridge must be positive, got {self.ridge!r}")
        self.gamma_ = float(1.0 / X.shape[1] if self.gamma is None else self.gamma)
        if self.kernel == "rbf" and not self.gamma_ > 0:
            raise ArgumentError("gamma must be positive")

        K = self._kernel(X, X)
        ridge = float(self.ridge)
        self.ridge_increased_ = False
        for attempt in range(_RIDGE_RETRIES + 1):
            try:
                factor = linalg.cho_factor(K + ridge * np.eye(K.shape[0]), lower=True)
                break
            except linalg.LinAlgError:
                if attempt == _RIDGE_RETRIES:
                    raise NumericError(
                        f"kernel matrix not positive definite even with ridge {ridge:g}"
                    ) from None
                ridge *= 10.0
                self.ridge_increased_ = True
                log.warning("Cholesky failed; retrying with ridge %g", ridge)
        self.dual_coef_ = linalg.cho_solve(factor, y)
        self.support_ = X.copy()
        self.ridge_used_ = ridge

    def _predict(self, X):
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], _PREDICT_CHUNK):
            block = X[start:start + _PREDICT_CHUNK]
            out[start:start + _PREDICT_CHUNK] = self._kernel(block, self.support_) @ self.dual_coef_
        return out
