"""scikit-learn style wrappers around the solvers.

``X`` is the measurement matrix (rows are measurements, columns atoms) and
``y`` the measurement vector, so ``fit(X, y)`` recovers the sparse ``coef_``
with ``X @ coef_ ~= y``. Columns must have unit l2 norm unless
``normalize=True``, in which case the solver runs on the rescaled matrix and
``coef_`` is mapped back to the original column scale.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dictionaries import Dictionary
from .solvers import (
    SolverConfig,
    geometric_schedule,
    iht_solve,
    ist_fixed,
    ist_solve,
    ita_schedule_solve,
    omp_solve,
)

__all__ = [
    "IterativeHardThresholding",
    "IterativeSoftThresholding",
    "FixedThresholdIST",
    "ScheduledThresholding",
    "OrthogonalMatchingPursuit",
]


class _SparseRecoveryBase(RegressorMixin, BaseEstimator):

    def _solve(self, d, y, truth):
        raise NotImplementedError

    def fit(self, X, y, truth=None):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.normalize:
            norms = np.linalg.norm(X, axis=0)
            d = Dictionary.normalized(X)
        else:
            norms = np.ones(X.shape[1])
            d = Dictionary(X)
        result = self._solve(d, y, truth)
        self.result_ = result
        self.coef_ = result.x_hat / norms
        self.support_ = np.flatnonzero(self.coef_)
        self.n_iter_ = result.iterations_run
        self.status_ = result.status
        self.trace_ = result.trace
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class IterativeHardThresholding(_SparseRecoveryBase):
    """Keep the ``n_nonzero_coefs`` largest entries after each gradient step."""

    def __init__(self, n_nonzero_coefs=1, max_iter=1000, tol=1e-12,
                 record_gamma=False, normalize=False):
        self.n_nonzero_coefs = n_nonzero_coefs
        self.max_iter = max_iter
        self.tol = tol
        self.record_gamma = record_gamma
        self.normalize = normalize

    def _config(self):
        return SolverConfig(k=self.n_nonzero_coefs, max_iters=self.max_iter,
                            conv_tol=self.tol, record_gamma=self.record_gamma)

    def _solve(self, d, y, truth):
        return iht_solve(d, y, self._config(), truth)


class IterativeSoftThresholding(IterativeHardThresholding):
    """Soft-threshold at the (k+1)-th largest magnitude after each gradient step."""

    def _solve(self, d, y, truth):
        return ist_solve(d, y, self._config(), truth)


class FixedThresholdIST(_SparseRecoveryBase):
    """Iterative soft thresholding with constant threshold ``alpha``.

    Minimises ``||y - X w||^2 + 2 alpha ||w||_1`` when it converges; use
    ``step < 2 / ||X||_2^2`` for overcomplete matrices.
    """

    def __init__(self, alpha=1.0, step=1.0, max_iter=1000, tol=1e-12, normalize=False):
        self.alpha = alpha
        self.step = step
        self.max_iter = max_iter
        self.tol = tol
        self.normalize = normalize

    def _solve(self, d, y, truth):
        cfg = SolverConfig(max_iters=self.max_iter, conv_tol=self.tol)
        return ist_fixed(d, y, self.alpha, cfg, truth, step=self.step)


class ScheduledThresholding(_SparseRecoveryBase):
    """Hard or soft thresholding with a decreasing threshold schedule.

    ``schedule`` is a nonincreasing sequence of thresholds. If it is None a
    geometric schedule from ``||X^T y||_inf`` down to ``floor`` with factor
    ``ratio`` is used.
    """

    def __init__(self, mode="hard", schedule=None, ratio=0.9, floor=1e-8,
                 max_iter=1000, tol=1e-12, record_gamma=False, normalize=False):
        self.mode = mode
        self.schedule = schedule
        self.ratio = ratio
        self.floor = floor
        self.max_iter = max_iter
        self.tol = tol
        self.record_gamma = record_gamma
        self.normalize = normalize

    def _solve(self, d, y, truth):
        schedule = self.schedule
        if schedule is None:
            l0 = float(np.max(np.abs(d.matrix.T @ y)))
            schedule = geometric_schedule(max(l0, self.floor), self.ratio, self.floor)
        cfg = SolverConfig(max_iters=self.max_iter, conv_tol=self.tol,
                           record_gamma=self.record_gamma)
        return ita_schedule_solve(d, y, self.mode, schedule, cfg, truth)


class OrthogonalMatchingPursuit(_SparseRecoveryBase):
    def __init__(self, n_nonzero_coefs=1, tol=1e-12, normalize=False):
        self.n_nonzero_coefs = n_nonzero_coefs
        self.tol = tol
        self.normalize = normalize

    def _solve(self, d, y, truth):
        return omp_solve(d, y, self.n_nonzero_coefs, truth=truth, tol=self.tol)
