"""Joint law of (argmax, supremum) for drifted Brownian motion, plus the
3-dimensional Bessel-bridge marginal.

For Y(t) = B(t) - a*t on [0, T] the pair (tau, sup Y) has density

    p(t, y; T, a) = y * exp(-(y + t a)^2 / (2t)) / (sqrt(pi) t^{3/2})
                    * ( exp(-a^2 (T-t)/2) / sqrt(pi (T-t))
                        + a/sqrt(2) * erfc(-a sqrt((T-t)/2)) ),

valid on (0, T) x (0, inf).  With a > 0 the all-time pair is well defined and

    p(t, y; inf, a) = sqrt(2) a y exp(-(y + t a)^2 / (2t)) / (sqrt(pi) t^{3/2}).

Conditionally on (tau = t, sup = y) the decrement process Y(t) - Y(t - s) is a
3-dimensional Bessel bridge from (0, 0) to (t, y); its marginal density
g(x, s; t, y) is implemented below and vanishes outside 0 < x < y.

Exponents are assembled in log space and exponentiated once; the finite-T
bracket uses the scaled complementary error function for negative drift where
the two terms nearly cancel.  Domain violations raise DomainError rather than
returning silent zeros (the indicator cut-offs of the bridge density are the
one documented exception).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .specfun import DomainError

__all__ = [
    "Horizon",
    "DriftedSpec",
    "joint_density_finite",
    "joint_density_infinite",
    "bridge_density",
    "log_joint_density_finite",
    "log_joint_density_infinite",
    "finite_bracket",
]

_SQRT_PI = math.sqrt(math.pi)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class Horizon:
    """Time horizon: a finite positive value or infinity."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if math.isnan(v) or v <= 0.0:
            raise DomainError(f"horizon must be positive (or inf), got {self.value!r}")
        object.__setattr__(self, "value", v)

    @classmethod
    def finite(cls, t: float) -> "Horizon":
        if math.isinf(t):
            raise DomainError("finite horizon cannot be inf")
        return cls(t)

    @classmethod
    def infinite(cls) -> "Horizon":
        return cls(math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def __str__(self) -> str:
        return "inf" if not self.is_finite else repr(self.value)


@dataclass(frozen=True)
class DriftedSpec:
    """Horizon plus drift intensity, with the infinite-horizon admissibility rule."""

    horizon: Horizon
    a: float

    def __post_init__(self) -> None:
        if not self.horizon.is_finite and not self.a > 0.0:
            raise DomainError(
                "infinite horizon requires positive drift a > 0 for the "
                "supremum law to be proper"
            )


def _validate_ty(t, y, T: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= T):
        raise DomainError(f"argmax time must lie in (0, {T}), got {t!r}")
    if np.any(y <= 0.0):
        raise DomainError("supremum value must be positive")
    return t, y


def finite_bracket(t, T: float, a: float, gap=None):
    """The (T - t)-dependent factor of p(t, y; T, a); positive on (0, T).

    Callers sitting near t = T can pass the gap T - t directly (``gap``),
    avoiding the subtraction's rounding when the gap is below eps*T.  For
    a < 0 the two terms nearly cancel as the gap grows, so that branch is
    evaluated through erfcx with the common Gaussian factored out.
    """
    t = np.asarray(t, dtype=float)
    u = (T - t) if gap is None else np.asarray(gap, dtype=float)
    z = a * np.sqrt(0.5 * u)
    first = np.exp(-0.5 * a * a * u) / np.sqrt(math.pi * u)
    if a >= 0.0:
        return first + (a / math.sqrt(2.0)) * _sp.erfc(-z)
    common = np.exp(-0.5 * a * a * u)
    return common * (1.0 / np.sqrt(math.pi * u) + (a / math.sqrt(2.0)) * _sp.erfcx(-z))


def log_joint_density_finite(t, y, T: float, a: float):
    """log p(t, y; T, a) for 0 < t < T, y > 0 (vectorized)."""
    if not (math.isfinite(T) and T > 0.0):
        raise DomainError(f"finite horizon required, got T={T!r}")
    t, y = _validate_ty(t, y, T)
    with np.errstate(over="ignore"):
        log_gauss = np.log(y) - (y + t * a) ** 2 / (2.0 * t) - 1.5 * np.log(t) - _LOG_SQRT_PI
    return log_gauss + np.log(finite_bracket(t, T, a))


def joint_density_finite(t, y, T: float, a: float):
    """Joint density of (argmax, supremum) of B(s) - a*s on [0, T]."""
    out = np.exp(log_joint_density_finite(t, y, T, a))
    return float(out) if np.ndim(out) == 0 else out


def log_joint_density_infinite(t, y, a: float):
    """log p(t, y; inf, a) for t, y > 0 and a > 0 (vectorized)."""
    if not a > 0.0:
        raise DomainError(f"infinite-horizon density requires a > 0, got a={a!r}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("argmax time must be positive")
    if np.any(y <= 0.0):
        raise DomainError("supremum value must be positive")
    with np.errstate(over="ignore"):
        return (
            0.5 * math.log(2.0)
            + math.log(a)
            + np.log(y)
            - (y + t * a) ** 2 / (2.0 * t)
            - 1.5 * np.log(t)
            - _LOG_SQRT_PI
        )


def joint_density_infinite(t, y, a: float):
    """Joint density of (argmax, supremum) of B(s) - a*s on [0, inf), a > 0."""
    out = np.exp(log_joint_density_infinite(t, y, a))
    return float(out) if np.ndim(out) == 0 else out


def bridge_density(x, s: float, t: float, y: float):
    """Marginal density g(x, s; t, y) of the 3-d Bessel bridge decrement.

    Zero for x <= 0; supported on the whole half-line x > 0 (the decrement
    from the running maximum exceeds the maximum itself whenever the path at
    time t - s sits below zero, so no upper cut-off at y applies; this is
    what makes the density integrate to one).  Raises for s outside (0, t)
    or nonpositive (t, y).
    """
    if not (t > 0.0 and y > 0.0):
        raise DomainError(f"bridge endpoint requires t > 0 and y > 0, got ({t}, {y})")
    if not (0.0 < s < t):
        raise DomainError(f"bridge time must lie in (0, {t}), got s={s!r}")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = x > 0.0
    xv = x[inside]
    # Ratio of the x- and y-pinning factors, assembled in log space.
    log_ratio = (
        np.log(xv)
        - 1.5 * math.log(s)
        - xv**2 / (2.0 * s)
        - (math.log(y) - 1.5 * math.log(t) - y * y / (2.0 * t))
    )
    u = t - s
    diff = np.exp(-((xv - y) ** 2) / (2.0 * u)) * (-np.expm1(-2.0 * xv * y / u))
    out[inside] = np.exp(log_ratio) * diff / math.sqrt(2.0 * math.pi * u)
    return float(out) if np.ndim(out) == 0 else out
