"""Expected-supremum and exponential sup-functionals of drifted fBm at H=1/2,
and their derivatives in the Hurst parameter.

Both derivative formulas are iterated integrals of elementary terms against
the (argmax, supremum) density of the H=1/2 process:

    dM/dH|_{1/2}(T, a) = int_0^T int_0^inf
        (y (1 + log t) + a t log t - I(t, y)) p(t, y; T, a) dy dt,

    dP/dH|_{1/2}(T, a) = int_0^T int_0^inf sqrt(2)
        (y (1 + log t) - (a/sqrt(2)) t log t - I(t, y))
        e^{sqrt(2) y} p(t, y; T, a/sqrt(2)) dy dt,

where I(t, y) is the Bessel-bridge correction.  Admissibility: any real a for
finite T; a > 0 for the M family at T=inf; a > 1 for the P family at T=inf
(at a=1 the level value itself diverges, so the spec is rejected rather than
clamped).

Closed forms in the three classically tractable cases:

    dM/dH(T, 0)   = sqrt(2T/pi) (log T - 2)
    dM/dH(inf, a) = -(gamma_E + log(2 a^2)) / a          (a > 0)
    dP/dH(inf, a) = -2a/(a-1) (1 + 2 (a-2) acoth(1-2a))  (a > 1)

Numerical strategy: outer integral over t (tanh-sinh; log t endpoint at 0,
(T-t)^(-1/2) endpoint at T), inner integral over y (adaptive Gauss-Kronrod
with split points at the density bump).  The finite-T outer integral is
computed in two halves with the right half parameterized by the gap u = T-t,
so the square-root singularity sits at an exact-zero endpoint.  Densities are
assembled in log space; I(t, y) comes from the fixed-rule batch evaluator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import bessel_bridge as _bb
from .densities import Horizon, finite_bracket
from .quadrature import (
    REGULAR,
    QuadConfig,
    QuadResult,
    algebraic,
    integrate_finite,
    integrate_semi_infinite,
    logarithmic,
)
from .specfun import EULER_GAMMA, acoth

__all__ = [
    "Family",
    "Method",
    "FunctionalSpec",
    "DerivativeResult",
    "AdmissibilityError",
    "UnsupportedCaseError",
    "m_deriv",
    "p_deriv",
    "m_deriv_closed",
    "p_deriv_closed",
    "m_value_half",
    "p_value_half",
    "wills_rate_deriv",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_EXP_FLOOR = -745.0  # below this exp() underflows to zero anyway


class AdmissibilityError(ValueError):
    """The (family, horizon, drift) combination is outside the valid region."""


class UnsupportedCaseError(ValueError):
    """No closed form is available for the requested case."""


class Family(enum.Enum):
    M = "m"  # expected supremum / workload family
    P = "p"  # exponential (Wills / Piterbarg) family


class Method(enum.Enum):
    QUADRATURE = "quad"
    CLOSED_FORM = "closed"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class FunctionalSpec:
    family: Family
    horizon: Horizon
    a: float
    method: Method = Method.QUADRATURE

    def __post_init__(self) -> None:
        if not math.isfinite(self.a):
            raise AdmissibilityError(f"drift must be finite, got {self.a!r}")
        if not self.horizon.is_finite:
            if self.family is Family.M and not self.a > 0.0:
                raise AdmissibilityError(
                    "the expected-supremum family with infinite horizon requires "
                    f"drift a > 0 (got a={self.a}); otherwise the supremum is infinite"
                )
            if self.family is Family.P and not self.a > 1.0:
                raise AdmissibilityError(
                    "the exponential family with infinite horizon requires drift "
                    f"a > 1 (got a={self.a}); at a <= 1 the functional diverges"
                )


@dataclass(frozen=True)
class DerivativeResult:
    value: float
    err_est: float
    method: Method
    spec: FunctionalSpec
    evals: int = 0


# --------------------------------------------------------------------------
# Integrand assembly
# --------------------------------------------------------------------------


def _y_window(
    t: float, family: Family, a_dens: float, floor: float
) -> tuple[float, tuple[float, ...], float]:
    """Support window of the inner integrand at fixed t.

    The y-dependent exponent is log y - (y + t c)^2/(2t) + s y, with
    s = sqrt(2) for the tilted P family and 0 for M (the horizon bracket is a
    constant factor handled outside).  Returns (y_max, split points, peak
    exponent): beyond y_max the exponent sits below ``floor`` and the
    integrand no longer matters at the inner absolute tolerance, so the
    integral can run on the finite interval (0, y_max) with the bump
    bracketed by the split points.
    """
    s = _SQRT2 if family is Family.P else 0.0
    c = a_dens
    width = math.sqrt(t)
    b = t * (c - s)
    mode = 0.5 * (-b + math.sqrt(b * b + 4.0 * t))
    peak = math.log(mode) - (mode + t * c) ** 2 / (2.0 * t) + s * mode
    # Right edge where the exponent reaches the floor, from the quadratic
    # part with margin for the slowly varying log y term.
    margin = -floor - 0.5 * t * c * c + 2.0 * abs(math.log(mode)) + 4.0
    drift = t * (s - c)
    disc = drift * drift + 2.0 * t * margin
    y_max = drift + math.sqrt(max(disc, 4.0 * t))
    y_max = max(y_max, mode + 10.0 * width)
    pts = {mode + k * width for k in (-8.0, -3.0, 0.0, 3.0, 8.0)}
    pts.update((0.3 * width, width, 0.8 * y_max))
    points = tuple(sorted(p for p in pts if 0.0 < p < y_max))
    return y_max, points, peak


def _deriv_inner(
    t: float,
    y: np.ndarray,
    family: Family,
    a: float,
    floor: float,
) -> np.ndarray:
    """Inner integrand of the derivative formulas at fixed t, vectorized in y.

    The horizon bracket of the density is a constant in y and is applied by
    the caller, so this stays O(1)-scaled; ``floor`` cuts exponents that are
    irrelevant at the inner absolute tolerance.
    """
    y = np.asarray(y, dtype=float)
    if family is Family.M:
        a_dens, tilt, scale = a, 0.0, 1.0
    else:
        a_dens, tilt, scale = a / _SQRT2, _SQRT2, _SQRT2

    log_t = math.log(t)
    exponent = (
        np.log(y)
        - (y + t * a_dens) ** 2 / (2.0 * t)
        + tilt * y
        - 1.5 * log_t
        - _LOG_SQRT_PI
    )
    out = np.zeros_like(y)
    mask = exponent > floor
    if not mask.any():
        return out
    ym = y[mask]
    if family is Family.M:
        poly = ym * (1.0 + log_t) + a * t * log_t
    else:
        poly = ym * (1.0 + log_t) - a_dens * t * log_t
    bracketed = poly - _bb.i_batch(t, ym)
    out[mask] = scale * bracketed * np.exp(exponent[mask])
    return out


def _level_inner(
    t: float,
    y: np.ndarray,
    family: Family,
    a: float,
    floor: float,
) -> np.ndarray:
    """Inner integrand of the level values at fixed t (y*p or e^{sqrt2 y}*p)."""
    y = np.asarray(y, dtype=float)
    if family is Family.M:
        a_dens, tilt, extra_log_y = a, 0.0, 1.0
    else:
        a_dens, tilt, extra_log_y = a / _SQRT2, _SQRT2, 0.0

    exponent = (
        (1.0 + extra_log_y) * np.log(y)
        - (y + t * a_dens) ** 2 / (2.0 * t)
        + tilt * y
        - 1.5 * math.log(t)
        - _LOG_SQRT_PI
    )
    out = np.zeros_like(y)
    mask = exponent > floor
    out[mask] = np.exp(exponent[mask])
    return out


def _integrate_t(
    inner_of_t,
    horizon: Horizon,
    a_dens: float,
    cfg: QuadConfig,
) -> QuadResult:
    """Outer t-integration driver shared by derivative and level quadratures.

    inner_of_t(t, inner_cfg) -> QuadResult of the O(1)-scaled y-integral at
    that t; the horizon bracket of the density, constant in y, is applied
    here.  The finite-horizon integral runs in two halves with the right
    half parameterized by the gap u = T - t, so both integrable endpoint
    singularities sit at exact-zero endpoints.
    """
    inner_cfg = cfg.tightened(0.1)
    evals = 0

    def make_outer(to_t, bracket_of_raw):
        def f(raw: np.ndarray) -> np.ndarray:
            nonlocal evals
            raw = np.asarray(raw, dtype=float)
            out = np.empty_like(raw)
            flat = out.ravel()
            for i, r in enumerate(raw.ravel()):
                res = inner_of_t(to_t(r), inner_cfg)
                flat[i] = res.value
                evals += res.evals
            return out * bracket_of_raw(raw)

        return f

    if not horizon.is_finite:
        bracket = math.sqrt(2.0) * a_dens
        res = integrate_semi_infinite(
            make_outer(lambda t: t, lambda ts: bracket),
            0.0,
            cfg.with_hints(logarithmic(), REGULAR),
        )
        err = res.err_est + inner_cfg.rel_tol * abs(res.value) + 10.0 * inner_cfg.abs_tol
        return QuadResult(res.value, err, res.evals + evals)

    T = horizon.value
    half_cfg = cfg.tightened(0.5)
    left = integrate_finite(
        make_outer(lambda t: t, lambda ts: finite_bracket(ts, T, a_dens)),
        0.0,
        0.5 * T,
        half_cfg.with_hints(logarithmic(), REGULAR),
    )
    # Gap parameterization: the bracket takes the gap directly, so the
    # square-root factor keeps full precision arbitrarily close to T.
    right = integrate_finite(
        make_outer(lambda u: T - u, lambda us: finite_bracket(T - us, T, a_dens, gap=us)),
        0.0,
        0.5 * T,
        half_cfg.with_hints(algebraic(-0.5), REGULAR),
    )
    value = left.value + right.value
    err = (
        left.err_est
        + right.err_est
        + inner_cfg.rel_tol * abs(value)
        + 10.0 * inner_cfg.abs_tol
    )
    return QuadResult(value, err, left.evals + right.evals + evals)


def _run_2d(spec: FunctionalSpec, cfg: QuadConfig, inner_kernel) -> QuadResult:
    family, a = spec.family, spec.a
    a_dens = a if family is Family.M else a / _SQRT2

    def inner_of_t(t: float, inner_cfg: QuadConfig) -> QuadResult:
        # Contributions are irrelevant below the inner absolute tolerance and
        # below rel_tol of the peak scale; cut the exponent there.
        probe_floor = math.log(inner_cfg.abs_tol) - 30.0
        y_max, pts, peak = _y_window(t, family, a_dens, probe_floor)
        floor = max(probe_floor, peak + math.log(inner_cfg.rel_tol) - 25.0)
        if floor > probe_floor:
            y_max, pts, peak = _y_window(t, family, a_dens, floor)
        if peak < floor - 3.0:
            return QuadResult(0.0, 0.0, 0)  # the whole inner integrand underflows
        return integrate_finite(
            lambda y: inner_kernel(t, y, family, a, floor),
            0.0,
            y_max,
            inner_cfg,
            points=pts,
        )

    if not spec.horizon.is_finite and family is Family.P and a < 1.2:
        # The integral barely converges as a -> 1 (decay rate a-1); give the
        # tail room before flagging.
        cfg = QuadConfig(cfg.rel_tol, cfg.abs_tol, 4 * cfg.max_evals, cfg.endpoint_hints)
    return _integrate_t(inner_of_t, spec.horizon, a_dens, cfg)


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


def m_deriv(spec: FunctionalSpec, cfg: QuadConfig) -> DerivativeResult:
    """Hurst derivative of the expected-supremum functional at H=1/2."""
    if spec.family is not Family.M:
        raise AdmissibilityError("m_deriv requires a spec with family M")
    res = _run_2d(spec, cfg, _deriv_inner)
    return DerivativeResult(res.value, res.err_est, Method.QUADRATURE, spec, res.evals)


def p_deriv(spec: FunctionalSpec, cfg: QuadConfig) -> DerivativeResult:
    """Hurst derivative of the exponential sup-functional at H=1/2."""
    if spec.family is not Family.P:
        raise AdmissibilityError("p_deriv requires a spec with family P")
    res = _run_2d(spec, cfg, _deriv_inner)
    return DerivativeResult(res.value, res.err_est, Method.QUADRATURE, spec, res.evals)


def m_deriv_closed(spec: FunctionalSpec) -> float:
    """Closed form of the M-family derivative (finite T with a=0, or T=inf)."""
    if spec.family is not Family.M:
        raise UnsupportedCaseError("closed form requested for the wrong family")
    if spec.horizon.is_finite:
        if spec.a != 0.0:
            raise UnsupportedCaseError(
                "finite-horizon closed form exists only for zero drift"
            )
        T = spec.horizon.value
        return math.sqrt(2.0 * T / math.pi) * (math.log(T) - 2.0)
    return -(EULER_GAMMA + math.log(2.0 * spec.a**2)) / spec.a


def p_deriv_closed(spec: FunctionalSpec) -> float:
    """Closed form of the P-family derivative (infinite horizon, a > 1).

    Uses the inverse-cotangent form, 2*acoth(1-2a) = log((a-1)/a), which is
    real and well defined on a > 1.
    """
    if spec.family is not Family.P:
        raise UnsupportedCaseError("closed form requested for the wrong family")
    if spec.horizon.is_finite:
        raise UnsupportedCaseError("no finite-horizon closed form for the P family")
    a = spec.a
    return -2.0 * a / (a - 1.0) * (1.0 + (a - 2.0) * 2.0 * acoth(1.0 - 2.0 * a))


def m_value_half(spec: FunctionalSpec, cfg: QuadConfig) -> QuadResult:
    """Level value of the M functional at H=1/2 by density quadrature."""
    if spec.family is not Family.M:
        raise AdmissibilityError("m_value_half requires a spec with family M")
    return _run_2d(spec, cfg, _level_inner)


def p_value_half(spec: FunctionalSpec, cfg: QuadConfig) -> QuadResult:
    """Level value of the P functional at H=1/2 by density quadrature."""
    if spec.family is not Family.P:
        raise AdmissibilityError("p_value_half requires a spec with family P")
    return _run_2d(spec, cfg, _level_inner)


def wills_rate_deriv(T: float, cfg: QuadConfig) -> QuadResult:
    """dP/dH(T, 1) / T: the finite-horizon rate whose large-T limit is
    -2*gamma_E."""
    if not (T > 0.0 and math.isfinite(T)):
        raise AdmissibilityError(f"rate requires a finite positive horizon, got {T!r}")
    spec = FunctionalSpec(Family.P, Horizon.finite(T), 1.0)
    res = p_deriv(spec, cfg)
    return QuadResult(res.value / T, res.err_est / T, res.evals)
