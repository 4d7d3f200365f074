"""Data generation: eigenvalue pairs from a state, plus error laws.

A true pair couples an observable ``X`` with its exact scalar multiple
``Y = beta0 * X``; the two share every eigenvector, so one draw from
the spectrum of ``X`` yields the pair ``(lambda, beta0 * lambda)``.
Eigenvalues are drawn i.i.d. with replacement by inverse CDF over the
ascending support; noise is injected afterwards as i.i.d. scalar error
terms, one per observation, because only those scalars enter the
fitted model ``mu = beta * lambda + error``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import EmptySupport, ValidationError, ZeroBeta
from .operators import (
    EigenPMF,
    SpectralDecomposition,
    SymmetricOperator,
    spectral_decompose,
)
from .rng import RngSeed

ERROR_FAMILIES = ("gaussian", "laplace", "student_t", "contaminated")
SAMPLES_CSV_HEADER = ("lambda", "mu", "eigenvector_index", "error")

_PAIR_MATCH_TOL = 1e-8


class Sample(NamedTuple):
    """One observed eigenvalue pair with its generation bookkeeping."""

    lambda_: float
    mu: float
    eigenvector_index: int
    error: float


@dataclass(frozen=True)
class TruePair:
    """Observable and its exact scalar multiple, sharing all eigenvectors."""

    X: SymmetricOperator
    Y: SymmetricOperator
    beta0: float
    decomposition: SpectralDecomposition = field(repr=False)


def build_true_pair(X: SymmetricOperator, beta0: float) -> TruePair:
    """Scale ``X`` by a nonzero slope and verify the shared eigenstructure."""
    if beta0 == 0.0 or not np.isfinite(beta0):
        raise ZeroBeta("the true slope must be finite and nonzero")
    beta0 = float(beta0)
    Y = SymmetricOperator(X.dim, beta0 * X.entries)
    decomp_x = spectral_decompose(X)
    decomp_y = spectral_decompose(Y)
    scale = 1.0 + float(np.max(np.abs(decomp_y.eigenvalues)))
    for value, projection in zip(decomp_x.eigenvalues, decomp_x.projections):
        target = beta0 * value
        j = int(np.argmin(np.abs(decomp_y.eigenvalues - target)))
        if abs(decomp_y.eigenvalues[j] - target) > _PAIR_MATCH_TOL * scale:
            raise ValidationError(
                f"no eigenvalue of the scaled observable matches {target!r}"
            )
        if np.max(np.abs(decomp_y.projections[j] - projection)) > _PAIR_MATCH_TOL:
            raise ValidationError(
                f"eigenspaces of the pair disagree at eigenvalue {value!r}"
            )
    return TruePair(X, Y, beta0, decomp_x)


@dataclass(frozen=True)
class ErrorModel:
    """Distribution of the i.i.d. scalar error terms.

    Families: ``gaussian(sigma)``, ``laplace(scale)``,
    ``student_t(df, scale)`` and ``contaminated(sigma, outlier_sigma,
    outlier_prob)``, all continuous and centered at zero, so loss
    derivative kinks are hit with probability zero.
    """

    family: str
    sigma: float | None = None
    scale: float | None = None
    df: float | None = None
    outlier_sigma: float | None = None
    outlier_prob: float | None = None

    def __post_init__(self):
        if self.family not in ERROR_FAMILIES:
            raise ValidationError(f"unknown error family {self.family!r}")
        required = {
            "gaussian": ("sigma",),
            "laplace": ("scale",),
            "student_t": ("df", "scale"),
            "contaminated": ("sigma", "outlier_sigma", "outlier_prob"),
        }[self.family]
        for name in ("sigma", "scale", "df", "outlier_sigma", "outlier_prob"):
            value = getattr(self, name)
            if name in required:
                if value is None:
                    raise ValidationError(f"{self.family} error model needs {name!r}")
                if not np.isfinite(value):
                    raise ValidationError(f"{name} must be finite")
            elif value is not None:
                raise ValidationError(f"{self.family} error model takes no {name!r}")
        for name in ("sigma", "scale", "df", "outlier_sigma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"{name} must be positive")
        if self.family == "contaminated" and not 0.0 <= self.outlier_prob < 1.0:
            raise ValidationError("outlier_prob must lie in [0, 1)")

    def label(self) -> str:
        if self.family == "gaussian":
            return f"gaussian:{self.sigma:g}"
        if self.family == "laplace":
            return f"laplace:{self.scale:g}"
        if self.family == "student_t":
            return f"student_t:{self.df:g}:{self.scale:g}"
        return f"contaminated:{self.sigma:g}:{self.outlier_sigma:g}:{self.outlier_prob:g}"

    def to_json_dict(self) -> dict:
        doc = {"family": self.family}
        for name in ("sigma", "scale", "df", "outlier_sigma", "outlier_prob"):
            value = getattr(self, name)
            if value is not None:
                doc[name] = value
        return doc


def gaussian(sigma: float) -> ErrorModel:
    return ErrorModel("gaussian", sigma=float(sigma))


def laplace(scale: float) -> ErrorModel:
    return ErrorModel("laplace", scale=float(scale))


def student_t(df: float, scale: float = 1.0) -> ErrorModel:
    return ErrorModel("student_t", df=float(df), scale=float(scale))


def contaminated(sigma: float, outlier_sigma: float, outlier_prob: float) -> ErrorModel:
    return ErrorModel(
        "contaminated",
        sigma=float(sigma),
        outlier_sigma=float(outlier_sigma),
        outlier_prob=float(outlier_prob),
    )


def error_model_from_spec(spec) -> ErrorModel:
    """Build a model from ``"family:param[:param...]"`` text or a dict."""
    if isinstance(spec, ErrorModel):
        return spec
    if isinstance(spec, dict):
        doc = dict(spec)
        family = doc.pop("family", None)
        if family is None:
            raise ValidationError("error model spec dict needs a 'family' key")
        try:
            return ErrorModel(family, **{k: float(v) for k, v in doc.items()})
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad error model spec {spec!r}: {exc}") from exc
    if not isinstance(spec, str):
        raise ValidationError(f"cannot parse error model spec {spec!r}")
    parts = [p.strip() for p in spec.split(":")]
    try:
        family, params = parts[0].lower(), [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ValidationError(f"bad error model spec {spec!r}: {exc}") from exc
    builders = {
        "gaussian": (gaussian, 1),
        "laplace": (laplace, 1),
        "student_t": (student_t, 2),
        "contaminated": (contaminated, 3),
    }
    if family not in builders:
        raise ValidationError(f"unknown error family {family!r}")
    builder, arity = builders[family]
    if family == "student_t" and len(params) == 1:
        params.append(1.0)
    if len(params) != arity:
        raise ValidationError(
            f"{family} error model takes {arity} parameter(s), got {len(params)}"
        )
    return builder(*params)


def _open_unit_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1), safe for inverse CDFs."""
    return rng.integers(1, 2**53, size=size) / float(2**53)


def draw_errors(model: ErrorModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector of i.i.d. draws from the error law, consuming ``rng``."""
    if model.family == "gaussian":
        return model.sigma * rng.standard_normal(size)
    if model.family == "laplace":
        centered = _open_unit_uniform(rng, size) - 0.5
        return -model.scale * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))
    if model.family == "student_t":
        numerator = rng.standard_normal(size)
        chi_sq = 2.0 * rng.standard_gamma(model.df / 2.0, size)
        return model.scale * numerator / np.sqrt(chi_sq / model.df)
    flags = rng.random(size) < model.outlier_prob
    spread = np.where(flags, model.outlier_sigma, model.sigma)
    return spread * rng.standard_normal(size)


def error_draw(model: ErrorModel, rng: np.random.Generator) -> float:
    """One variate from the error law."""
    return float(draw_errors(model, rng, 1)[0])


def sample_eigen_pairs(
    pmf: EigenPMF, pair: TruePair, n: int, seed: RngSeed
) -> list[Sample]:
    """Noiseless draws: ``n`` i.i.d. eigenvalues with ``mu = beta0 * lambda``.

    Inverse CDF over the ascending support; ``eigenvector_index``
    records which eigenspace produced each pair.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"sample count must be a positive integer, got {n!r}")
    if pmf.support.size == 0:
        raise EmptySupport("probability mass function has no support")
    eigenvalues = pair.decomposition.eigenvalues
    scale = 1.0 + float(np.max(np.abs(eigenvalues)))
    if pmf.support.size != eigenvalues.size or np.max(
        np.abs(pmf.support - eigenvalues)
    ) > 1e-8 * scale:
        raise ValidationError(
            "pmf support does not match the spectrum of the pair's observable"
        )
    cdf = np.cumsum(pmf.masses)
    u = _open_unit_uniform(seed.generator(), n)
    indices = np.minimum(np.searchsorted(cdf, u, side="left"), pmf.support.size - 1)
    lambdas = pmf.support[indices]
    mus = pair.beta0 * lambdas
    return [
        Sample(lam, mu, int(idx), 0.0)
        for lam, mu, idx in zip(lambdas.tolist(), mus.tolist(), indices.tolist())
    ]


def apply_error(
    samples: list[Sample], model: ErrorModel, beta: float, seed: RngSeed
) -> list[Sample]:
    """Replace each response by ``beta * lambda + e`` with fresh i.i.d. errors."""
    errors = draw_errors(model, seed.generator(), len(samples))
    return [
        Sample(s.lambda_, beta * s.lambda_ + e, s.eigenvector_index, e)
        for s, e in zip(samples, errors.tolist())
    ]


def samples_to_arrays(samples: list[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Predictor and response vectors, in sample order."""
    lambdas = np.array([s.lambda_ for s in samples])
    mus = np.array([s.mu for s in samples])
    return lambdas, mus


def write_samples_csv(samples: list[Sample], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SAMPLES_CSV_HEADER)
    for s in samples:
        writer.writerow([repr(s.lambda_), repr(s.mu), s.eigenvector_index, repr(s.error)])


def samples_to_csv_text(samples: list[Sample]) -> str:
    buffer = io.StringIO()
    write_samples_csv(samples, buffer)
    return buffer.getvalue()


def read_samples_csv(stream) -> list[Sample]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SAMPLES_CSV_HEADER:
        raise ValidationError(
            f"sample CSV must start with header {','.join(SAMPLES_CSV_HEADER)!r}"
        )
    samples = []
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"sample CSV row has {len(row)} fields, expected 4")
        samples.append(Sample(float(row[0]), float(row[1]), int(row[2]), float(row[3])))
    return samples


def samples_to_json(samples: list[Sample]) -> list[dict]:
    return [
        {
            "lambda": s.lambda_,
            "mu": s.mu,
            "eigenvector_index": s.eigenvector_index,
            "error": s.error,
        }
        for s in samples
    ]


def samples_from_json(docs: list[dict]) -> list[Sample]:
    return [
        Sample(float(d["lambda"]), float(d["mu"]), int(d["eigenvector_index"]), float(d["error"]))
        for d in docs
    ]
