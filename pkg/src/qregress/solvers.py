"""Slope estimation through the origin by convex loss minimization.

The fitted model is ``mu ~ beta * lambda`` with no intercept. Closed
forms cover the square loss (normal equation) and the absolute and
quantile losses (weighted-quantile characterization of the piecewise
linear objective); every family also runs through a guarded
bracket-plus-golden-section scalar minimizer, and a brute-force grid
oracle exists solely so tests can cross-check the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BracketFailure, DegenerateDesign, ValidationError
from .losses import LossFunction, rho_eval

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class RegressionData:
    """Observed predictor/response pairs, validated for slope fitting."""

    lambdas: np.ndarray
    mus: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        mus = np.asarray(self.mus, dtype=float)
        if lambdas.ndim != 1 or lambdas.shape != mus.shape:
            raise ValidationError("lambdas and mus must be 1-d and the same length")
        if lambdas.size < 1:
            raise ValidationError("need at least one observation")
        if not (np.all(np.isfinite(lambdas)) and np.all(np.isfinite(mus))):
            raise ValidationError("observations must be finite")
        s_n = float(lambdas @ lambdas)
        if s_n <= 0.0:
            raise DegenerateDesign("all predictor values are zero")
        lambdas.setflags(write=False)
        mus.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "_s_n", s_n)

    @property
    def n(self) -> int:
        return self.lambdas.size

    @property
    def s_n(self) -> float:
        """Sum of squared predictors."""
        return self._s_n


@dataclass(frozen=True)
class EstimatorResult:
    """Fitted slope plus solver provenance."""

    beta_hat: float
    objective_value: float
    solver: str
    iterations: int
    minimizer_interval: tuple[float, float] | None = None

    def to_json_dict(self) -> dict:
        return {
            "beta_hat": self.beta_hat,
            "objective_value": self.objective_value,
            "solver": self.solver,
            "iterations": self.iterations,
            "minimizer_interval": (
                None
                if self.minimizer_interval is None
                else [self.minimizer_interval[0], self.minimizer_interval[1]]
            ),
        }


def objective(loss: LossFunction, data: RegressionData, beta: float) -> float:
    """Total loss of the residuals ``mu - beta * lambda``."""
    return float(np.sum(rho_eval(loss, data.mus - beta * data.lambdas)))


def estimate_ls(data: RegressionData) -> EstimatorResult:
    """Exact square-loss minimizer ``sum(lambda*mu) / sum(lambda**2)``."""
    beta = float(data.lambdas @ data.mus) / data.s_n
    value = objective(LossFunction("square"), data, beta)
    return EstimatorResult(beta, value, "least_squares", 0)


def estimate_weighted_quantile(data: RegressionData, alpha: float) -> EstimatorResult:
    """Exact minimizer of the quantile loss (``alpha=0.5`` is absolute loss).

    The objective is piecewise linear in ``beta`` with knots at the
    ratios ``mu/lambda``; each knot carries weight ``|lambda|`` tilted
    by ``1 + (2*alpha - 1)`` on one side and ``1 - (2*alpha - 1)`` on
    the other, the side depending on the sign of ``lambda``. The
    minimizer is where the walked derivative crosses zero; a flat
    minimizing segment yields its midpoint plus the segment itself.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    loss = LossFunction("quantile", alpha=alpha) if alpha != 0.5 else LossFunction("absolute")
    active = data.lambdas != 0.0
    if not np.any(active):
        raise DegenerateDesign("all predictor values are zero")
    lam = data.lambdas[active]
    ratios = data.mus[active] / lam
    weights = np.abs(lam)
    tilt = 2.0 * alpha - 1.0
    # Derivative contribution of each knot while beta sits below it.
    below = np.where(lam > 0, -(1.0 + tilt) * weights, -(1.0 - tilt) * weights)

    order = np.argsort(ratios, kind="stable")
    ratios = ratios[order]
    # Crossing a knot raises the derivative by 2*|lambda| regardless of sign.
    cumulative = float(below.sum()) + np.cumsum(2.0 * weights[order])
    k = int(np.argmax(cumulative >= 0.0))
    if cumulative[k] > 0.0:
        beta = float(ratios[k])
        interval = None
    else:
        lo, hi = float(ratios[k]), float(ratios[k + 1])
        beta = (lo + hi) / 2.0
        interval = (lo, hi) if hi > lo else None
        if interval is None:
            beta = lo
    return EstimatorResult(beta, objective(loss, data, beta), "weighted_quantile", 0, interval)


def _expand_bracket(f, center: float, f_center: float) -> tuple[float, float]:
    """Grow [center-h, center+h] until f is at least f(center) on both ends."""
    lo = hi = None
    h = 1.0
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        if lo is None:
            cand = center - h
            if f(cand) >= f_center:
                lo = cand
        if hi is None:
            cand = center + h
            if f(cand) >= f_center:
                hi = cand
        if lo is not None and hi is not None:
            return lo, hi
        h *= 2.0
    raise BracketFailure(
        "objective kept decreasing during bracket expansion; "
        "the loss implementation is not convex-coercive"
    )


def estimate_general(
    loss: LossFunction,
    data: RegressionData,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EstimatorResult:
    """Golden-section minimizer for any convex loss family.

    Starts from the square-loss estimate, doubles a bracket outward
    until the objective rises on both sides, then contracts the bracket
    to relative width ``tol``.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    center = estimate_ls(data).beta_hat

    def f(beta: float) -> float:
        return objective(loss, data, beta)

    a, b = _expand_bracket(f, center, f(center))
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while (b - a) > tol * (1.0 + abs(a + b) / 2.0) and iterations < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        iterations += 1
    candidates = [(fc, c), (fd, d)]
    mid = (a + b) / 2.0
    candidates.append((f(mid), mid))
    value, beta = min(candidates)
    return EstimatorResult(float(beta), float(value), "golden_section", iterations)


def grid_oracle(
    loss: LossFunction,
    data: RegressionData,
    lo: float,
    hi: float,
    step: float,
    chunk: int = 4096,
) -> float:
    """Brute-force grid argmin of the objective; ties go to the smallest beta.

    Deliberately independent of the solvers above so tests can use it
    as an oracle.
    """
    if not lo < hi:
        raise ValidationError("grid needs lo < hi")
    if not step > 0:
        raise ValidationError("grid step must be positive")
    count = int(math.floor((hi - lo) / step)) + 1
    best_value = math.inf
    best_beta = lo
    for start in range(0, count, chunk):
        betas = lo + step * np.arange(start, min(start + chunk, count))
        residuals = data.mus[None, :] - betas[:, None] * data.lambdas[None, :]
        values = rho_eval(loss, residuals).sum(axis=1)
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value = float(values[k])
            best_beta = float(betas[k])
    return best_beta


def estimate(
    loss: LossFunction,
    data: RegressionData,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EstimatorResult:
    """Fit with the exact solver where one exists, golden section otherwise."""
    if loss.family == "square":
        return estimate_ls(data)
    if loss.family == "absolute":
        return estimate_weighted_quantile(data, 0.5)
    if loss.family == "quantile":
        return estimate_weighted_quantile(data, loss.alpha)
    if loss.family == "lq" and loss.q == 1.0:
        return estimate_weighted_quantile(data, 0.5)
    return estimate_general(loss, data, tol=tol, max_iter=max_iter)
