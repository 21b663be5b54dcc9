"""Special functions and normalization constants for the fractional field.

The variance factor ``V(H)`` of the two-sided moving-average construction of
fractional Brownian motion,

    V(H) = int_0^inf ((1+s)^(H-1/2) - s^(H-1/2))^2 ds + int_0^1 s^(2H-1) ds
         = Gamma(1/2+H) * Gamma(2-2H) / (2H * Gamma(3/2-H)),

and its inverse square root ``D(H) = V(H)^(-1/2)`` normalize the field so that
``D(H) * X_H`` has the standard fBm covariance.  This module evaluates V, D,
the table of derivatives of D at H=1/2, and the small set of classical special
functions the rest of the package needs (erf/erfc, acoth, log-Gamma based
evaluation, Euler-Mascheroni, zeta(3)).

All functions are pure and stateless; they are safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

__all__ = [
    "EULER_GAMMA",
    "ZETA_3",
    "HurstParam",
    "NormalizationPair",
    "DomainError",
    "as_hurst",
    "erf",
    "erfc",
    "v_of_h",
    "d_of_h",
    "normalization_pair",
    "d_derivatives_at_half",
    "acoth",
]

# Universal constants, 20 significant digits.
EULER_GAMMA = 0.57721566490153286061
ZETA_3 = 1.2020569031595942854


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the function."""


@dataclass(frozen=True)
class HurstParam:
    """Hurst parameter restricted to the open interval (0, 1)."""

    h: float

    def __post_init__(self) -> None:
        h = float(self.h)
        if not (0.0 < h < 1.0) or not math.isfinite(h):
            raise DomainError(f"Hurst parameter must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)


def as_hurst(h: HurstParam | float) -> HurstParam:
    """Coerce a float to a validated HurstParam (no-op for HurstParam input)."""
    if isinstance(h, HurstParam):
        return h
    return HurstParam(float(h))


@dataclass(frozen=True)
class NormalizationPair:
    """Variance factor v = V(H) and scale d = V(H)^(-1/2) for one H."""

    v: float
    d: float

    def __post_init__(self) -> None:
        if not (self.v > 0.0 and self.d > 0.0):
            raise DomainError("normalization factors must be positive")
        if abs(self.d * math.sqrt(self.v) - 1.0) > 1e-12:
            raise DomainError("d must equal v**-0.5")


def erf(x):
    """Error function; accepts scalars or arrays, odd, |erf| <= 1."""
    out = _sp.erf(x)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def erfc(x):
    """Complementary error function, erfc(x) = 1 - erf(x)."""
    out = _sp.erfc(x)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def v_of_h(h: HurstParam | float) -> float:
    """Variance factor V(H) of the unnormalized fractional field.

    Evaluated through log-Gamma so the Gamma(2-2H) blow-up near H -> 1 cannot
    overflow intermediate terms.
    """
    hh = as_hurst(h).h
    logv = (
        math.lgamma(0.5 + hh)
        + math.lgamma(2.0 - 2.0 * hh)
        - math.log(2.0 * hh)
        - math.lgamma(1.5 - hh)
    )
    return math.exp(logv)


def d_of_h(h: HurstParam | float) -> float:
    """Normalization scale D(H) = V(H)^(-1/2)."""
    return v_of_h(h) ** -0.5


def normalization_pair(h: HurstParam | float) -> NormalizationPair:
    v = v_of_h(h)
    return NormalizationPair(v=v, d=v**-0.5)


# Derivatives of D(H) at H = 1/2, by direct calculation:
#   D(1/2) = 1, D'(1/2) = 1, D''(1/2) = -1 - pi^2/3, D'''(1/2) = 3 - pi^2 - 6 zeta(3)
_D_TABLE = (
    1.0,
    1.0,
    -1.0 - math.pi**2 / 3.0,
    3.0 - math.pi**2 - 6.0 * ZETA_3,
)


def d_derivatives_at_half(n: int) -> float:
    """n-th derivative of D(H) = V(H)^(-1/2) evaluated at H = 1/2, n in 0..3."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise DomainError(f"derivative order must be an integer, got {n!r}")
    if n < 0 or n > 3:
        raise DomainError(f"derivative order {n} unsupported (table covers 0..3)")
    return _D_TABLE[n]


def acoth(z: float) -> float:
    """Inverse hyperbolic cotangent, acoth(z) = log((z+1)/(z-1)) / 2 for |z| > 1."""
    z = float(z)
    if not abs(z) > 1.0:
        raise DomainError(f"acoth requires |z| > 1, got {z!r}")
    return 0.5 * math.log((z + 1.0) / (z - 1.0))
