"""Design statistics, moment constants, and normality diagnostics.

The large-sample behaviour of the slope estimator is governed by three
quantities: the design magnitude ``s_n`` (sum of squared predictors)
with its leverage ratio ``d_n_sq``, the slope at zero of
``c -> E[rho'(e + c)]``, and the second moment ``E[rho'(e)**2]``.
With those, ``slope * sqrt(s_n / second_moment) * (beta_hat - beta)``
should behave like a standard normal draw for large samples; the
Kolmogorov-Smirnov machinery here checks exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import (
    DegenerateDesign,
    DegenerateNormalization,
    NonFiniteMoment,
    TooFewReplications,
    ValidationError,
)
from .losses import LossFunction, rho_prime
from .rng import RngSeed
from .sampling import ErrorModel, draw_errors

DEFAULT_SLOPE_STEP = 1e-3
DEFAULT_MOMENT_DRAWS = 10**6
MIN_MOMENT_DRAWS = 10**5
DEFAULT_CURVE_DELTA = 0.5
DEFAULT_CURVE_POINTS = 21
_SERIES_CUTOFF = 1e-12
# Largest-term share of a nonnegative Monte Carlo sum above which the
# underlying moment is treated as non-existent (heavy-tail misuse).
_DOMINANCE_SHARE = 0.5


@dataclass(frozen=True)
class DesignStats:
    """Magnitude and leverage of an observed predictor vector."""

    n: int
    s_n: float
    d_n_sq: float

    def to_json_dict(self) -> dict:
        return {"n": self.n, "s_n": self.s_n, "d_n_sq": self.d_n_sq}


def design_stats(lambdas) -> DesignStats:
    """``s_n`` and the maximal leverage share ``max(lambda**2) / s_n``."""
    arr = np.asarray(lambdas, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError("need a nonempty 1-d predictor vector")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("predictors must be finite")
    squares = arr * arr
    s_n = float(squares.sum())
    if s_n <= 0.0:
        raise DegenerateDesign("all predictor values are zero")
    return DesignStats(arr.size, s_n, float(squares.max() / s_n))


def design_stats_prefixes(lambdas, ns) -> list[DesignStats]:
    """Design statistics along nested prefixes, for leverage-decay checks."""
    arr = np.asarray(lambdas, dtype=float)
    out = []
    previous = 0
    for n in ns:
        if not previous < n <= arr.size:
            raise ValidationError("prefix lengths must be increasing and within range")
        out.append(design_stats(arr[:n]))
        previous = n
    return out


def _moment_mean(terms: np.ndarray, what: str) -> float:
    """Mean of nonnegative Monte Carlo terms, guarding against fat tails."""
    total = float(terms.sum())
    if not math.isfinite(total):
        raise NonFiniteMoment(f"{what} produced non-finite terms")
    if terms.size >= 1000 and total > 0.0:
        if float(terms.max()) > _DOMINANCE_SHARE * total:
            raise NonFiniteMoment(
                f"{what} is dominated by a single draw; the moment looks infinite"
            )
    return total / terms.size


def estimate_score_slope(
    loss: LossFunction,
    model: ErrorModel,
    h: float = DEFAULT_SLOPE_STEP,
    draws: int = DEFAULT_MOMENT_DRAWS,
    seed: RngSeed = RngSeed(0),
) -> float:
    """Central-difference slope at zero of ``c -> E[rho'(e + c)]``.

    Common random numbers across the two shifts: convexity makes every
    difference term nonnegative, so the estimate is a mean of
    nonnegative terms.
    """
    if not h > 0:
        raise ValidationError("h must be positive")
    if draws < MIN_MOMENT_DRAWS:
        raise ValidationError(f"need at least {MIN_MOMENT_DRAWS} draws")
    e = draw_errors(model, seed.generator(), draws)
    terms = (rho_prime(loss, e + h) - rho_prime(loss, e - h)) / (2.0 * h)
    return _moment_mean(terms, "score slope estimate")


def estimate_score_second_moment(
    loss: LossFunction,
    model: ErrorModel,
    draws: int = DEFAULT_MOMENT_DRAWS,
    seed: RngSeed = RngSeed(0),
) -> float:
    """Monte Carlo mean of ``rho'(e)**2``."""
    if draws < MIN_MOMENT_DRAWS:
        raise ValidationError(f"need at least {MIN_MOMENT_DRAWS} draws")
    e = draw_errors(model, seed.generator(), draws)
    score = rho_prime(loss, e)
    return _moment_mean(score * score, "score second moment estimate")


@dataclass(frozen=True)
class ShiftCurve:
    """Sampled curve ``c -> E[rho'(e + c) - rho'(e)]`` on a symmetric grid."""

    offsets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if offsets.shape != values.shape or offsets.ndim != 1:
            raise ValidationError("offsets and values must be 1-d and the same length")
        offsets.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "values", values)


def score_shift_curve(
    loss: LossFunction,
    model: ErrorModel,
    delta: float = DEFAULT_CURVE_DELTA,
    grid_points: int = DEFAULT_CURVE_POINTS,
    draws: int = MIN_MOMENT_DRAWS,
    seed: RngSeed = RngSeed(0),
) -> ShiftCurve:
    """Diagnostic curve over ``[-delta, delta]`` with common random numbers.

    The value at offset zero is identically zero; continuity of the
    sampled curve near zero is what the diagnostic is for.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if grid_points < 3:
        raise ValidationError("need at least 3 grid points")
    e = draw_errors(model, seed.generator(), draws)
    base = rho_prime(loss, e)
    offsets = np.linspace(-delta, delta, grid_points)
    values = np.array(
        [float(np.mean(rho_prime(loss, e + c) - base)) for c in offsets]
    )
    return ShiftCurve(offsets, values)


@dataclass(frozen=True)
class AsymptoticConstants:
    """Moment constants used to normalize the estimation error."""

    score_slope: float
    score_second_moment: float
    step: float
    draws: int
    shift_curve: ShiftCurve | None = None

    def __post_init__(self):
        if not math.isfinite(self.score_slope):
            raise ValidationError("score slope must be finite")
        if not self.score_second_moment > 0:
            raise ValidationError("score second moment must be positive")

    def to_json_dict(self) -> dict:
        return {
            "a": self.score_slope,
            "D": self.score_second_moment,
            "h": self.step,
            "draws": self.draws,
        }


def estimate_constants(
    loss: LossFunction,
    model: ErrorModel,
    h: float = DEFAULT_SLOPE_STEP,
    draws: int = DEFAULT_MOMENT_DRAWS,
    seed: RngSeed = RngSeed(0),
    with_curve: bool = False,
) -> AsymptoticConstants:
    """Estimate both moment constants on consecutive streams of ``seed``."""
    slope = estimate_score_slope(loss, model, h=h, draws=draws, seed=seed)
    second = estimate_score_second_moment(
        loss, model, draws=draws, seed=seed.stream(seed.stream_index + 1)
    )
    curve = None
    if with_curve:
        curve = score_shift_curve(
            loss, model, seed=seed.stream(seed.stream_index + 2)
        )
    return AsymptoticConstants(slope, second, h, draws, curve)


def normalized_statistic(
    beta_hat: float,
    beta_true: float,
    score_slope: float,
    score_second_moment: float,
    s_n: float,
) -> float:
    """Estimation error scaled to a standard normal yardstick.

    Equals ``score_slope * sqrt(s_n / score_second_moment) *
    (beta_hat - beta_true)``.
    """
    if not score_second_moment > 0:
        raise ValidationError("score second moment must be positive")
    if not s_n > 0:
        raise ValidationError("s_n must be positive")
    if score_slope == 0.0 or not math.isfinite(score_slope):
        raise DegenerateNormalization("score slope of zero cannot normalize anything")
    return score_slope * math.sqrt(s_n / score_second_moment) * (beta_hat - beta_true)


def _kolmogorov_sf(t: float) -> float:
    """Asymptotic survival function of the scaled KS statistic.

    Two complementary series; both truncated once terms drop below
    1e-12. The theta-function form takes over for small ``t`` where the
    alternating form cancels badly.
    """
    if t <= 0.0:
        return 1.0
    if t < 1.18:
        factor = math.sqrt(2.0 * math.pi) / t
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * t * t))
            total += term
            if term < _SERIES_CUTOFF:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - factor * total))
    total = 0.0
    k = 1
    while True:
        term = 2.0 * math.exp(-2.0 * k * k * t * t)
        total += term if k % 2 else -term
        if term < _SERIES_CUTOFF:
            break
        k += 1
    return min(1.0, max(0.0, total))


@dataclass(frozen=True)
class NormalityReport:
    """One-sample KS comparison of normalized statistics to N(0, 1)."""

    z_values: np.ndarray
    ks_statistic: float
    ks_p_value: float
    mean: float
    variance: float

    def to_json_dict(self) -> dict:
        return {
            "replications": int(self.z_values.size),
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
            "mean": self.mean,
            "variance": self.variance,
        }


def ks_test(z_values) -> NormalityReport:
    """Kolmogorov-Smirnov test of the values against the standard normal."""
    arr = np.sort(np.asarray(z_values, dtype=float))
    m = arr.size
    if m < 20:
        raise TooFewReplications(f"need at least 20 values, got {m}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("normalized statistics must be finite")
    cdf = ndtr(arr)
    steps = np.arange(1, m + 1) / m
    d_plus = float(np.max(steps - cdf))
    d_minus = float(np.max(cdf - (steps - 1.0 / m)))
    statistic = max(d_plus, d_minus, 0.0)
    p_value = _kolmogorov_sf(math.sqrt(m) * statistic)
    return NormalityReport(
        arr,
        statistic,
        p_value,
        float(np.mean(arr)),
        float(np.var(arr, ddof=1)),
    )


def consistency_check(abs_errors_by_n: dict, delta: float) -> dict[int, float]:
    """Exceedance probability ``P(|beta_hat - beta| > delta)`` per sample size.

    Reports the empirical fractions; whether they decrease is for the
    caller to judge.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if len(abs_errors_by_n) < 2:
        raise ValidationError("need absolute errors for at least two sample sizes")
    out = {}
    for n in sorted(abs_errors_by_n):
        errors = np.asarray(abs_errors_by_n[n], dtype=float)
        if errors.size < 1:
            raise ValidationError(f"no replications recorded for n={n}")
        out[int(n)] = float(np.mean(errors > delta))
    return out


def diagnostics_json(
    design: DesignStats,
    constants: AsymptoticConstants,
    normality: NormalityReport | None = None,
    exceedance: dict[int, float] | None = None,
) -> dict:
    """Assemble the diagnostic document emitted by the harness."""
    return {
        "s_n": design.s_n,
        "d_n_sq": design.d_n_sq,
        "a": constants.score_slope,
        "D": constants.score_second_moment,
        "ks_statistic": None if normality is None else normality.ks_statistic,
        "ks_p_value": None if normality is None else normality.ks_p_value,
        "exceedance": {} if exceedance is None else {str(k): v for k, v in exceedance.items()},
    }
