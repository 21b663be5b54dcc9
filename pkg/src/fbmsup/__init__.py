"""Sup-functionals of fractional Brownian motion and their Hurst derivatives
at H = 1/2: exact quadrature formulas, closed forms, and a coupled Monte
Carlo oracle on the pathwise moving-average representation."""

from .densities import (
    DriftedSpec,
    Horizon,
    bridge_density,
    joint_density_finite,
    joint_density_infinite,
)
from .bessel_bridge import BridgePoint, i_functional, i_oracle_2d
from .functionals import (
    AdmissibilityError,
    DerivativeResult,
    Family,
    FunctionalSpec,
    Method,
    UnsupportedCaseError,
    m_deriv,
    m_deriv_closed,
    m_value_half,
    p_deriv,
    p_deriv_closed,
    p_value_half,
    wills_rate_deriv,
)
from .pwz_sim import (
    McConfig,
    McEstimate,
    PathGrid,
    mc_coupled_fd,
    mc_deriv_direct,
    mc_level,
    pwz_deriv_eval,
    pwz_eval,
    sample_brownian,
)
from .quadrature import (
    AccuracyNotReached,
    Domain,
    QuadConfig,
    QuadResult,
    integrate_2d,
    integrate_finite,
    integrate_semi_infinite,
)
from .specfun import (
    EULER_GAMMA,
    ZETA_3,
    HurstParam,
    NormalizationPair,
    acoth,
    d_derivatives_at_half,
    d_of_h,
    erf,
    erfc,
    v_of_h,
)

__version__ = "0.1.0"
