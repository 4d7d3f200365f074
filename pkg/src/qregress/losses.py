"""Convex loss families for robust slope estimation.

Five families: ``square``, ``absolute``, ``huber`` (quadratic core,
linear tails past ``c``), ``lq`` (``|x|**q`` with ``q`` in [1, 2]) and
``quantile`` (``|x| + (2*alpha - 1)*x``). Each is convex with its
unique minimum at zero. Derivatives at a kink return the subgradient
midpoint and emit an :class:`AtDiscontinuity` warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import AtDiscontinuity, ValidationError

FAMILIES = ("square", "absolute", "huber", "lq", "quantile")
DEFAULT_HUBER_C = 1.345  # 95% Gaussian-efficiency convention


@dataclass(frozen=True)
class LossFunction:
    """One parameterized loss family.

    Exactly the parameter relevant to ``family`` may be set: ``c`` for
    huber, ``q`` for lq, ``alpha`` for quantile.
    """

    family: str
    c: float | None = None
    q: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown loss family {self.family!r}")
        relevant = {"huber": "c", "lq": "q", "quantile": "alpha"}.get(self.family)
        for name in ("c", "q", "alpha"):
            value = getattr(self, name)
            if name != relevant and value is not None:
                raise ValidationError(f"{self.family} loss takes no parameter {name!r}")
        if self.family == "huber":
            if self.c is None:
                object.__setattr__(self, "c", DEFAULT_HUBER_C)
            elif not self.c > 0:
                raise ValidationError("huber threshold c must be positive")
        elif self.family == "lq":
            if self.q is None or not 1.0 <= self.q <= 2.0:
                raise ValidationError("lq exponent q must lie in [1, 2]")
        elif self.family == "quantile":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValidationError("quantile level alpha must lie in (0, 1)")

    def label(self) -> str:
        if self.family == "huber":
            return f"huber:{self.c:g}"
        if self.family == "lq":
            return f"lq:{self.q:g}"
        if self.family == "quantile":
            return f"quantile:{self.alpha:g}"
        return self.family

    def to_json_dict(self) -> dict:
        doc = {"family": self.family}
        for name in ("c", "q", "alpha"):
            value = getattr(self, name)
            if value is not None:
                doc[name] = value
        return doc


def square_loss() -> LossFunction:
    return LossFunction("square")


def absolute_loss() -> LossFunction:
    return LossFunction("absolute")


def huber_loss(c: float = DEFAULT_HUBER_C) -> LossFunction:
    return LossFunction("huber", c=float(c))


def lq_loss(q: float) -> LossFunction:
    return LossFunction("lq", q=float(q))


def quantile_loss(alpha: float) -> LossFunction:
    return LossFunction("quantile", alpha=float(alpha))


def loss_from_spec(spec) -> LossFunction:
    """Build a loss from ``"family[:param]"`` text or a JSON-style dict."""
    if isinstance(spec, LossFunction):
        return spec
    if isinstance(spec, dict):
        doc = dict(spec)
        family = doc.pop("family", None)
        if family is None:
            raise ValidationError("loss spec dict needs a 'family' key")
        try:
            return LossFunction(family, **{k: float(v) for k, v in doc.items()})
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad loss spec {spec!r}: {exc}") from exc
    if not isinstance(spec, str):
        raise ValidationError(f"cannot parse loss spec {spec!r}")
    name, _, param = spec.partition(":")
    name = name.strip().lower()
    try:
        value = float(param) if param else None
    except ValueError as exc:
        raise ValidationError(f"bad loss spec {spec!r}: {exc}") from exc
    if name == "square" or name == "absolute":
        if value is not None:
            raise ValidationError(f"{name} loss takes no parameter")
        return LossFunction(name)
    if name == "huber":
        return huber_loss(DEFAULT_HUBER_C if value is None else value)
    if name == "lq":
        if value is None:
            raise ValidationError("lq loss needs an exponent, e.g. 'lq:1.5'")
        return lq_loss(value)
    if name == "quantile":
        if value is None:
            raise ValidationError("quantile loss needs a level, e.g. 'quantile:0.25'")
        return quantile_loss(value)
    raise ValidationError(f"unknown loss family {name!r}")


def discontinuities(loss: LossFunction) -> tuple[float, ...]:
    """Points where the loss derivative jumps (empty for smooth families)."""
    if loss.family in ("absolute", "quantile"):
        return (0.0,)
    if loss.family == "lq" and loss.q == 1.0:
        return (0.0,)
    return ()


def rho_eval(loss: LossFunction, x):
    """Loss value; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if loss.family == "square":
        out = arr * arr
    elif loss.family == "absolute":
        out = np.abs(arr)
    elif loss.family == "huber":
        c = loss.c
        a = np.abs(arr)
        out = np.where(a <= c, 0.5 * arr * arr, c * a - 0.5 * c * c)
    elif loss.family == "lq":
        out = np.abs(arr) ** loss.q
    else:  # quantile
        out = np.abs(arr) + (2.0 * loss.alpha - 1.0) * arr
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def rho_prime(loss: LossFunction, x):
    """Loss derivative; subgradient midpoint (with a warning) at kinks."""
    arr = np.asarray(x, dtype=float)
    kinks = discontinuities(loss)
    if kinks and np.any(arr == kinks[0]):
        warnings.warn(
            f"derivative of {loss.label()} evaluated at a kink; "
            "returning the subgradient midpoint",
            AtDiscontinuity,
            stacklevel=2,
        )
    if loss.family == "square":
        out = 2.0 * arr
    elif loss.family == "absolute":
        out = np.sign(arr)
    elif loss.family == "huber":
        out = np.clip(arr, -loss.c, loss.c)
    elif loss.family == "lq":
        q = loss.q
        if q == 1.0:
            out = np.sign(arr)
        else:
            out = q * np.abs(arr) ** (q - 1.0) * np.sign(arr)
    else:  # quantile
        out = np.sign(arr) + (2.0 * loss.alpha - 1.0)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out
