"""Finite-dimensional observables, density operators, and spectra.

An observable is a real symmetric matrix; a state is a positive
semi-definite unit-trace symmetric matrix. A state assigns each
observable the expectation ``tr(state @ observable)`` and induces a
discrete probability distribution on the observable's spectrum with
mass ``tr(state @ P)`` on each eigenprojection ``P``. Everything here
is immutable after construction and safe to share between tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AsymmetryTooLarge,
    DimensionMismatch,
    EigensolverFailure,
    NotPositiveSemiDefinite,
    NotUnitTrace,
    ValidationError,
)
from .rng import RngSeed

SYMMETRY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
PROJECTION_IDEMPOTENT_TOL = 1e-8
PROJECTION_SYMMETRY_TOL = 1e-10
PROJECTION_ORTHOGONALITY_TOL = 1e-8
COMPLETENESS_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-8
PMF_SUM_TOL = 1e-10
PMF_MASS_FLOOR = -1e-12
# Clamping negative rounding noise may shift the total mass; renormalize
# only when the shift exceeds this.
PMF_RENORM_TRIGGER = 1e-12


def _as_square_matrix(dim: int, entries, what: str) -> np.ndarray:
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < 1:
        raise ValidationError(f"{what} dimension must be a positive integer, got {dim!r}")
    arr = np.asarray(entries, dtype=float)
    if arr.shape != (dim, dim):
        raise DimensionMismatch(
            f"{what} entries must be {dim}x{dim}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} entries must be finite")
    return arr


def _symmetrize(arr: np.ndarray, what: str) -> np.ndarray:
    asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
    if asym > SYMMETRY_TOL:
        raise AsymmetryTooLarge(
            f"{what} deviates from symmetry by {asym:.3e} (gate {SYMMETRY_TOL:.0e})"
        )
    sym = (arr + arr.T) / 2.0
    sym.setflags(write=False)
    return sym


@dataclass(frozen=True)
class SymmetricOperator:
    """Real symmetric matrix standing in for a compact self-adjoint observable."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        arr = _as_square_matrix(self.dim, self.entries, "operator")
        object.__setattr__(self, "entries", _symmetrize(arr, "operator"))

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "entries": self.entries.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SymmetricOperator":
        return cls(int(doc["dim"]), doc["entries"])


def make_symmetric(dim: int, entries) -> SymmetricOperator:
    """Validate and build an observable, symmetrizing rounding-level noise."""
    return SymmetricOperator(dim, entries)


@dataclass(frozen=True)
class QuantumState:
    """Density operator: symmetric, positive semi-definite, unit trace."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        arr = _as_square_matrix(self.dim, self.entries, "state")
        sym = _symmetrize(arr, "state")
        trace = float(np.trace(sym))
        if abs(trace - 1.0) > TRACE_TOL:
            raise NotUnitTrace(f"state trace is {trace!r}, expected 1 within {TRACE_TOL:.0e}")
        try:
            smallest = float(np.linalg.eigvalsh(sym)[0])
        except np.linalg.LinAlgError as exc:
            raise EigensolverFailure(f"state eigenvalue check failed: {exc}") from exc
        if smallest < -PSD_TOL:
            raise NotPositiveSemiDefinite(
                f"state has eigenvalue {smallest:.3e} below -{PSD_TOL:.0e}"
            )
        object.__setattr__(self, "entries", sym)

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "entries": self.entries.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "QuantumState":
        return cls(int(doc["dim"]), doc["entries"])


def make_state(dim: int, entries) -> QuantumState:
    """Validate and build a density operator."""
    return QuantumState(dim, entries)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues of an observable with their eigenprojections.

    ``bases[k]`` holds orthonormal eigenvector columns spanning the k-th
    eigenspace, in the eigensolver's column order; ``bases[k][:, 0]`` is
    the deterministic representative eigenvector used for sampling.
    """

    eigenvalues: np.ndarray
    projections: tuple
    cluster_tol: float
    bases: tuple = field(repr=False)

    def __post_init__(self):
        eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        eigenvalues.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        projections = tuple(np.asarray(p, dtype=float) for p in self.projections)
        for p in projections:
            p.setflags(write=False)
        object.__setattr__(self, "projections", projections)
        object.__setattr__(self, "bases", tuple(self.bases))
        self._validate()

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def _validate(self):
        if self.cluster_tol < 0:
            raise ValidationError("cluster_tol must be nonnegative")
        if len(self.eigenvalues) != len(self.projections) or not len(self.eigenvalues):
            raise ValidationError("need one projection per eigenvalue")
        if np.any(np.diff(self.eigenvalues) <= 0):
            raise ValidationError("eigenvalues must be strictly ascending")
        dim = self.dim
        for value, p in zip(self.eigenvalues, self.projections):
            if p.shape != (dim, dim):
                raise DimensionMismatch("projections must share one square shape")
            if np.max(np.abs(p - p.T)) > PROJECTION_SYMMETRY_TOL:
                raise ValidationError(f"projection for {value} is not symmetric")
            if np.max(np.abs(p @ p - p)) > PROJECTION_IDEMPOTENT_TOL:
                raise ValidationError(f"projection for {value} is not idempotent")
        for i in range(len(self.projections)):
            for j in range(i + 1, len(self.projections)):
                cross = self.projections[i] @ self.projections[j]
                if np.max(np.abs(cross)) > PROJECTION_ORTHOGONALITY_TOL:
                    raise ValidationError("projections are not mutually orthogonal")
        total = sum(self.projections)
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
            raise ValidationError("projections do not sum to the identity")

    def eigenvector(self, index: int) -> np.ndarray:
        """Unit-norm representative of the ``index``-th eigenspace."""
        return self.bases[index][:, 0]

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "projections": [p.tolist() for p in self.projections],
            "cluster_tol": self.cluster_tol,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SpectralDecomposition":
        projections = [np.asarray(p, dtype=float) for p in doc["projections"]]
        bases = tuple(_projection_basis(p) for p in projections)
        return cls(
            np.asarray(doc["eigenvalues"], dtype=float),
            tuple(projections),
            float(doc["cluster_tol"]),
            bases,
        )


def _projection_basis(projection: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the range of an orthogonal projection."""
    values, vectors = np.linalg.eigh(projection)
    return vectors[:, values > 0.5]


def default_cluster_tol(op: SymmetricOperator) -> float:
    """Relative merge window: floating point eigensolvers split exact ties."""
    scale = float(np.max(np.abs(op.entries))) if op.dim else 0.0
    return 1e-8 * scale * op.dim


def spectral_decompose(
    op: SymmetricOperator, cluster_tol: float | None = None
) -> SpectralDecomposition:
    """Eigenvalues and eigenprojections of an observable.

    Raw eigenvalues closer than ``cluster_tol`` are merged into one
    eigenspace; each cluster's projection is assembled from its
    orthonormal eigenvectors.
    """
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(op)
    if cluster_tol < 0:
        raise ValidationError("cluster_tol must be nonnegative")
    try:
        raw_values, vectors = np.linalg.eigh(op.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"eigensolver did not converge: {exc}") from exc

    # Greedy gap-based clustering over the ascending raw spectrum.
    boundaries = [0]
    for k in range(1, len(raw_values)):
        if raw_values[k] - raw_values[k - 1] > cluster_tol:
            boundaries.append(k)
    boundaries.append(len(raw_values))

    eigenvalues = []
    projections = []
    bases = []
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        block = vectors[:, start:stop]
        eigenvalues.append(float(np.mean(raw_values[start:stop])))
        projections.append(block @ block.T)
        bases.append(block)
    return SpectralDecomposition(
        np.asarray(eigenvalues), tuple(projections), float(cluster_tol), tuple(bases)
    )


def reconstruct(decomp: SpectralDecomposition) -> SymmetricOperator:
    """Rebuild the observable as the eigenvalue-weighted sum of projections."""
    total = np.zeros((decomp.dim, decomp.dim))
    for value, p in zip(decomp.eigenvalues, decomp.projections):
        total += value * p
    return SymmetricOperator(decomp.dim, total)


def _check_dims(state: QuantumState, dim: int):
    if state.dim != dim:
        raise DimensionMismatch(f"state dim {state.dim} does not match operator dim {dim}")


def quantum_expectation(state: QuantumState, op: SymmetricOperator) -> float:
    """Expectation ``tr(state @ op)`` of an observable in a state."""
    _check_dims(state, op.dim)
    return float(np.trace(state.entries @ op.entries))


@dataclass(frozen=True)
class EigenPMF:
    """Probability mass function a state induces on an observable's spectrum."""

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if support.shape != masses.shape or support.ndim != 1:
            raise ValidationError("support and masses must be 1-d and the same length")
        if np.any(np.diff(support) <= 0):
            raise ValidationError("support must be strictly ascending")
        if np.any(masses < PMF_MASS_FLOOR):
            raise NotPositiveSemiDefinite(
                f"projection mass below {PMF_MASS_FLOOR:.0e}; state is not a density operator"
            )
        masses = np.clip(masses, 0.0, None)
        total = float(masses.sum())
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise ValidationError(f"masses sum to {total!r}, expected 1 within {PMF_SUM_TOL:.0e}")
        support.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)


def eigen_pmf(state: QuantumState, decomp: SpectralDecomposition) -> EigenPMF:
    """Masses ``tr(state @ P)`` over the decomposition's eigenvalues."""
    _check_dims(state, decomp.dim)
    raw = np.array(
        [float(np.trace(state.entries @ p)) for p in decomp.projections]
    )
    if np.any(raw < PMF_MASS_FLOOR):
        raise NotPositiveSemiDefinite(
            f"tr(state @ P) = {raw.min():.3e} below {PMF_MASS_FLOOR:.0e}"
        )
    clamped = np.clip(raw, 0.0, None)
    if abs(float(clamped.sum()) - float(raw.sum())) > PMF_RENORM_TRIGGER:
        clamped = clamped / clamped.sum()
    return EigenPMF(decomp.eigenvalues, clamped)


def commutator_norm(state: QuantumState, op: SymmetricOperator) -> float:
    """Max-entry norm of ``state @ op - op @ state``.

    Zero means the state and observable share an eigenbasis, so joint
    eigenvalue sampling is physically exact; reported as a diagnostic.
    """
    _check_dims(state, op.dim)
    cross = state.entries @ op.entries
    return float(np.max(np.abs(cross - cross.T)))


def diagonal_operator(values) -> SymmetricOperator:
    """Observable with the given diagonal entries."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or not values.size:
        raise ValidationError("diagonal needs a nonempty 1-d sequence")
    return SymmetricOperator(values.size, np.diag(values))


def random_symmetric(dim: int, seed: RngSeed) -> SymmetricOperator:
    """Observable with i.i.d. standard normal entries, symmetrized."""
    raw = seed.generator().standard_normal((dim, dim))
    return SymmetricOperator(dim, (raw + raw.T) / 2.0)


def maximally_mixed(dim: int) -> QuantumState:
    """State ``I/dim``: every eigenprojection weighted by its rank."""
    return QuantumState(dim, np.eye(dim) / dim)


def gibbs_state(op: SymmetricOperator, temperature: float) -> QuantumState:
    """Thermal state ``exp(-op/temperature)`` normalized to unit trace."""
    if not temperature > 0:
        raise ValidationError("temperature must be positive")
    try:
        values, vectors = np.linalg.eigh(op.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"eigensolver did not converge: {exc}") from exc
    weights = np.exp(-(values - values.min()) / temperature)
    weights /= weights.sum()
    return QuantumState(op.dim, (vectors * weights) @ vectors.T)
