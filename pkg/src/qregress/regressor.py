"""Scikit-learn front end for the robust slope solvers.

Wraps the functional estimators in a ``fit``/``predict`` estimator so
the slope model composes with pipelines, grid search, and
cross-validation. The model has exactly one feature and no intercept:
``y ~ coef_[0] * x``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .losses import LossFunction
from .solvers import DEFAULT_MAX_ITER, DEFAULT_TOL, RegressionData, estimate


class RobustSlopeRegressor(RegressorMixin, BaseEstimator):
    """Slope-through-the-origin M-estimator over five convex loss families.

    Parameters
    ----------
    loss : {"square", "absolute", "huber", "lq", "quantile"}
        Loss family applied to the residuals ``y - coef * x``.
    huber_c : float
        Huber threshold; used only when ``loss="huber"``.
    lq_q : float
        Exponent in [1, 2]; used only when ``loss="lq"``.
    quantile_alpha : float
        Level in (0, 1); used only when ``loss="quantile"``.
    tol, max_iter :
        Convergence controls for the golden-section solver; exact
        solvers (square, absolute, quantile) ignore them.

    Attributes
    ----------
    coef_ : ndarray of shape (1,)
        Fitted slope.
    intercept_ : float
        Always 0.0; the model goes through the origin.
    result_ : EstimatorResult
        Solver provenance: objective value, iterations, and the
        minimizing interval when the optimum is flat.
    """

    def __init__(
        self,
        loss: str = "square",
        huber_c: float = 1.345,
        lq_q: float = 1.5,
        quantile_alpha: float = 0.5,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ):
        self.loss = loss
        self.huber_c = huber_c
        self.lq_q = lq_q
        self.quantile_alpha = quantile_alpha
        self.tol = tol
        self.max_iter = max_iter

    def _build_loss(self) -> LossFunction:
        if self.loss == "huber":
            return LossFunction("huber", c=self.huber_c)
        if self.loss == "lq":
            return LossFunction("lq", q=self.lq_q)
        if self.loss == "quantile":
            return LossFunction("quantile", alpha=self.quantile_alpha)
        return LossFunction(self.loss)

    def fit(self, X, y):
        """Fit the slope on a single feature column."""
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(
                f"this model regresses on exactly one feature, got {X.shape[1]}"
            )
        loss = self._build_loss()
        data = RegressionData(X[:, 0], y)
        result = estimate(loss, data, tol=self.tol, max_iter=self.max_iter)
        self.n_features_in_ = 1
        self.coef_ = np.array([result.beta_hat])
        self.intercept_ = 0.0
        self.result_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError(
                f"this model regresses on exactly one feature, got {X.shape[1]}"
            )
        return X[:, 0] * self.coef_[0]
