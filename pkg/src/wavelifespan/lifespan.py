"""Closed-form lifespan predictions from the comparison ODE

    H'(t) = A (1+t)^(-k) H(t)^p,   H(0) = H0 > 0,  A > 0,  p > 1.

Solved with equality; the run functionals satisfy the same relation as an
inequality, so the solution here is an upper-bound witness for the blow-up
time, and only its eps-scaling exponent is compared against numerics.

Separation gives blow-up exactly when the damping-weighted time integral
reaches D = H0^(1-p)/(p-1):

    k < 1:  T = (1 + (1-k) D/A)^(1/(1-k)) - 1     ~ eps^(-(p-1)/(1-k))
    k = 1:  T = exp(D/A) - 1                       ~ exp(c eps^(-(p-1)))
    k > 1:  finite iff D < A/(k-1), else no blow-up.

The decay exponent for a model run is k = (n-1)(p-1)/2 in the scattering
range and (n + 2 mu - 1)(p-1)/2 in the scale-invariant range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, effective_dimension
from .special import C1Estimate, data_phi1_integral

ODE_SUBCRITICAL = "subcritical"
ODE_CRITICAL = "critical"
ODE_SUPERCRITICAL = "supercritical"

# same spirit as the critical-p tag: k is a float computed from user input
K_CRITICAL_TOL = 1e-12


def decay_exponent(params: ModelParams) -> float:
    """k of the comparison ODE: (d_eff - 1)(p - 1)/2 with the regime's effective dimension."""
    return (effective_dimension(params) - 1.0) * (params.p - 1.0) / 2.0


@dataclass(frozen=True)
class OdeCoefficients:
    """Coefficients (A, k, p, H0) of the comparison ODE."""

    A: float
    k: float
    p: float
    H0: float

    def __post_init__(self):
        if not self.A > 0.0:
            raise ValueError("A must be positive")
        if self.k < 0.0:
            raise ValueError("k must be >= 0")
        if not self.p > 1.0:
            raise ValueError("p must exceed 1")
        if not self.H0 > 0.0:
            raise ValueError("H0 must be positive")

    @property
    def branch(self) -> str:
        if abs(self.k - 1.0) <= K_CRITICAL_TOL:
            return ODE_CRITICAL
        return ODE_SUBCRITICAL if self.k < 1.0 else ODE_SUPERCRITICAL


@dataclass(frozen=True)
class LifespanBound:
    """Upper-bound witness: blow-up time of the equality ODE plus its eps-scaling."""

    regime: str
    T_blowup: float  # math.inf when the ODE does not blow up
    exponent_in_eps: float | None
    critical_eps_power: float | None
    coefficients: OdeCoefficients

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "T_blowup": self.T_blowup,
            "exponent_in_eps": self.exponent_in_eps,
            "critical_eps_power": self.critical_eps_power,
            "A": self.coefficients.A,
            "k": self.coefficients.k,
            "p": self.coefficients.p,
            "H0": self.coefficients.H0,
        }


def _invert_time_integral(c: OdeCoefficients, D: float) -> float:
    """Solve int_0^T A (1+t)^(-k) dt = D for T; inf when unreachable (k > 1).

    Finite times beyond float64 range (possible in the critical branch, where
    T is exponential in D/A) overflow to inf.
    """
    u = 1.0 - c.k
    x = u * D / c.A
    try:
        if abs(u) <= K_CRITICAL_TOL:
            return math.expm1(D / c.A)
        if 1.0 + x <= 0.0:
            return math.inf
        return math.expm1(math.log1p(x) / u)
    except OverflowError:
        return math.inf


def time_to_level(c: OdeCoefficients, level: float) -> float:
    """Closed-form time at which H first reaches `level` (inf if never)."""
    if level <= c.H0:
        return 0.0
    D = (c.H0 ** (1.0 - c.p) - level ** (1.0 - c.p)) / (c.p - 1.0)
    return _invert_time_integral(c, D)


def solve_comparison_ode(c: OdeCoefficients) -> LifespanBound:
    """Blow-up time of the equality ODE and the eps-scaling it implies."""
    D = c.H0 ** (1.0 - c.p) / (c.p - 1.0)
    T = _invert_time_integral(c, D)
    branch = c.branch
    exponent = None
    eps_power = None
    if branch == ODE_SUBCRITICAL:
        exponent = -(c.p - 1.0) / (1.0 - c.k)
    elif branch == ODE_CRITICAL:
        eps_power = c.p - 1.0
    return LifespanBound(
        regime=branch,
        T_blowup=T,
        exponent_in_eps=exponent,
        critical_eps_power=eps_power,
        coefficients=c,
    )


def hitting_time_numeric(c: OdeCoefficients, level: float, rtol: float = 1e-9,
                         t_cap: float = 1e300) -> float:
    """Adaptive RK4 (step-doubling control) hitting time of H = level.

    Independent numeric route for the closed form; used by the self-check
    command.  Returns inf when H provably stays below `level` (k > 1 tail
    exhausted) or the time cap is reached.
    """
    if level <= c.H0:
        return 0.0

    def f(t: float, y: float) -> float:
        return c.A * (1.0 + t) ** (-c.k) * y ** c.p

    def rk4(t: float, y: float, h: float) -> float:
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    t, y = 0.0, c.H0
    h = 0.01 * min(1.0, y ** (1.0 - c.p) / c.A)
    while t < t_cap:
        h = min(h, 0.05 * (1.0 + t))
        y_full = rk4(t, y, h)
        y_half = rk4(t + 0.5 * h, rk4(t, y, 0.5 * h), 0.5 * h)
        if not (math.isfinite(y_full) and math.isfinite(y_half)):
            h *= 0.5
            continue
        err = abs(y_half - y_full) / y_half
        if err > rtol:
            h *= max(0.2, 0.9 * (rtol / err) ** 0.25)
            continue
        y_new = y_half + (y_half - y_full) / 15.0  # local Richardson: 5th order
        if y_new >= level:
            if h <= rtol * max(t, 1.0):
                return t + h
            h *= 0.5
            continue
        t += h
        y = y_new
        if err > 0.0:
            h *= min(4.0, 0.9 * (rtol / err) ** 0.25)
        else:
            h *= 4.0
        if c.k > 1.0:
            # remaining growth bounded by A/(k-1) (1+t)^(1-k) in the y^(1-p) variable
            room = y ** (1.0 - c.p) - level ** (1.0 - c.p)
            tail = (c.p - 1.0) * c.A / (c.k - 1.0) * (1.0 + t) ** (1.0 - c.k)
            if tail < room:
                return math.inf
    return math.inf


@dataclass(frozen=True)
class CriticalExponentMarker:
    """Critical-case lifespan marker: T <= exp(C eps^(-eps_power))."""

    eps_power: float


def theorem_exponent(params: ModelParams):
    """The eps-scaling the lifespan theorems predict for these parameters.

    Subcritical: the float -(p-1)/(1 - (d_eff-1)(p-1)/2).  Critical: a
    CriticalExponentMarker carrying the power p-1 inside the exponential.
    Supercritical parameters are rejected (no bound exists).
    """
    k = decay_exponent(params)
    if abs(k - 1.0) <= K_CRITICAL_TOL:
        return CriticalExponentMarker(eps_power=params.p - 1.0)
    if k > 1.0:
        raise ValueError(
            "supercritical parameters: the lifespan theorems give no upper bound"
        )
    return -(params.p - 1.0) / (1.0 - k)


def bound_from_run(params: ModelParams, data, C1: C1Estimate,
                   multiplier=None) -> LifespanBound:
    """Assemble the ODE coefficients for a concrete run and solve.

    H0 = (m(0) eps / 2) C_0g with m(0) = 1 in the scale-invariant range,
    A = C1^(1-p)/2, k per regime.
    """
    from .multipliers import Multiplier

    if multiplier is None:
        multiplier = Multiplier.for_params(params)
    C_0g = data_phi1_integral(data.g, data.support_radius, params.n)
    if not C_0g > 0.0:
        raise ValueError("C_0g must be positive (g must not vanish identically)")
    m0 = float(multiplier.value_at(0.0))
    H0 = m0 * (params.eps / 2.0) * C_0g
    A = C1.value ** (1.0 - params.p) / 2.0
    coeffs = OdeCoefficients(A=A, k=decay_exponent(params), p=params.p, H0=H0)
    return solve_comparison_ode(coeffs)


def eps_scaling_slope(c: OdeCoefficients, eps: float, H0_per_eps: float) -> float:
    """d log T / d log eps of the closed form, differenced at eps and eps/2."""
    c1 = OdeCoefficients(c.A, c.k, c.p, H0_per_eps * eps)
    c2 = OdeCoefficients(c.A, c.k, c.p, H0_per_eps * eps / 2.0)
    t1 = solve_comparison_ode(c1).T_blowup
    t2 = solve_comparison_ode(c2).T_blowup
    return (math.log(t1) - math.log(t2)) / (math.log(eps) - math.log(eps / 2.0))
