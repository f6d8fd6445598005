"""Problem definition: parameters, critical exponents, regime classification, initial data.

The model is the radially symmetric Cauchy problem

    u_tt - (u_rr + (n-1)/r u_r) + mu (1+t)^(-beta) u_t = |u_t|^p
    u(r, 0) = eps f(r),   u_t(r, 0) = eps g(r)

with non-negative compactly supported data and g not identically zero.
``beta > 1`` is the scattering range, ``beta = 1`` the scale-invariant
borderline where the damping shifts the effective dimension from n to
n + 2 mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Tolerance for tagging p as exactly critical: p is user-supplied in binary
# floating point, so exact equality is meaningless.
CRITICAL_TOL = 1e-12

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ModelParams:
    """Full parameter tuple (n, p, mu, beta, R, eps) governing a run."""

    n: int
    p: float
    mu: float
    beta: float
    R: float = 1.0
    eps: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"spatial dimension n must be a positive integer, got {self.n}")
        if not self.p > 1.0:
            raise ValueError(f"nonlinearity exponent p must exceed 1, got {self.p}")
        if self.mu < 0.0:
            raise ValueError(f"damping strength mu must be >= 0, got {self.mu}")
        if self.beta < 1.0:
            raise ValueError(f"damping decay beta must be >= 1, got {self.beta}")
        if self.R < 1.0:
            raise ValueError(f"support radius R must be >= 1, got {self.R}")
        if not self.eps > 0.0:
            raise ValueError(f"data amplitude eps must be positive, got {self.eps}")

    @property
    def scale_invariant(self) -> bool:
        return self.beta == 1.0

    def with_eps(self, eps: float) -> "ModelParams":
        return ModelParams(self.n, self.p, self.mu, self.beta, self.R, eps)


@dataclass(frozen=True)
class Regime:
    """Classification of p against the critical exponent of the effective dimension."""

    tag: str
    effective_dimension: float

    def __post_init__(self):
        if self.tag not in (SUBCRITICAL, CRITICAL, SUPERCRITICAL):
            raise ValueError(f"unknown regime tag {self.tag!r}")


def critical_exponent(d: float) -> float:
    """Critical power (d+1)/(d-1) for effective dimension d > 1.

    For d <= 1 no critical exponent exists (every p > 1 leads to blow-up),
    so the formula is rejected rather than extrapolated.
    """
    if not d > 1.0:
        raise ValueError(f"critical exponent requires dimension > 1, got {d}")
    return (d + 1.0) / (d - 1.0)


def effective_dimension(params: ModelParams) -> float:
    """n for scattering damping (beta > 1), n + 2 mu for scale-invariant (beta = 1)."""
    if params.scale_invariant:
        return params.n + 2.0 * params.mu
    return float(params.n)


def classify(params: ModelParams) -> Regime:
    """Tag the run subcritical / critical / supercritical.

    Convention: when the effective dimension is <= 1 every p > 1 is
    subcritical (the one-dimensional case has no critical power).
    """
    d = effective_dimension(params)
    if d <= 1.0:
        return Regime(SUBCRITICAL, d)
    pc = critical_exponent(d)
    if abs(params.p - pc) <= CRITICAL_TOL:
        return Regime(CRITICAL, d)
    if params.p < pc:
        return Regime(SUBCRITICAL, d)
    return Regime(SUPERCRITICAL, d)


def _bump(r: np.ndarray, amplitude: float, a: float) -> np.ndarray:
    """amplitude * (1 - (r/a)^2)_+^3, a C^2 compactly supported profile."""
    r = np.asarray(r, dtype=float)
    x = np.minimum(np.abs(r) / a, 1.0)
    return amplitude * (1.0 - x * x) ** 3


@dataclass(frozen=True)
class DataProfile:
    """Radial initial-data pair (f, g), both non-negative, supported in [0, support_radius].

    ``f`` and ``g`` are dimensionless profiles; the solver multiplies them by
    the amplitude eps.  ``g`` must not vanish identically.
    """

    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    amplitude_f: float
    amplitude_g: float

    def validate_against(self, params: ModelParams) -> None:
        if self.support_radius > params.R + 1e-15:
            raise ValueError(
                f"data support radius {self.support_radius} exceeds R={params.R}"
            )

    def check_pointwise(self, samples: int = 4001) -> None:
        """Sampled invariant check: non-negative, zero beyond the support."""
        r = np.linspace(0.0, 2.0 * self.support_radius, samples)
        for name, fun in (("f", self.f), ("g", self.g)):
            vals = fun(r)
            if np.any(vals < 0.0):
                raise ValueError(f"profile {name} is negative somewhere on [0, 2a]")
            outside = r >= self.support_radius
            if np.any(vals[outside] != 0.0):
                raise ValueError(f"profile {name} does not vanish beyond its support")
        if self.amplitude_g <= 0.0:
            raise ValueError("g vanishes identically")


def make_bump_data(
    support_radius: float, amplitude_f: float, amplitude_g: float
) -> DataProfile:
    """Polynomial bump pair amplitude*(1-(r/a)^2)_+^3 for both f and g.

    C^2 regularity is enough for the H^1/L^2 data hypotheses and the profile
    has closed-form moments for quadrature cross-checks.
    """
    if support_radius <= 0.0:
        raise ValueError(f"support radius must be positive, got {support_radius}")
    if amplitude_f < 0.0:
        raise ValueError(f"amplitude_f must be >= 0, got {amplitude_f}")
    if amplitude_g <= 0.0:
        raise ValueError(
            f"amplitude_g must be > 0 (g must not vanish identically), got {amplitude_g}"
        )
    a = float(support_radius)
    return DataProfile(
        f=lambda r: _bump(r, amplitude_f, a),
        g=lambda r: _bump(r, amplitude_g, a),
        support_radius=a,
        amplitude_f=float(amplitude_f),
        amplitude_g=float(amplitude_g),
    )


def surface_measure(n: int) -> float:
    """|S^(n-1)| = 2 pi^(n/2) / Gamma(n/2); equals 2 for n = 1 (counting measure)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
