"""The exponential test function phi1, the weight psi = e^(-t) phi1, and the
envelope constant C1 bounding int_{|x|<=t+R} psi dx / (1+t)^((n-1)/2).

phi1 is the sphere average of e^(x.omega):

    phi1(r) = int_{S^(n-1)} e^(r omega_1) dS      (n >= 2)
    phi1(r) = e^r + e^(-r)                        (n = 1)

It solves phi1'' + (n-1)/r phi1' = phi1, so psi(x,t) = e^(-t) phi1(|x|)
satisfies psi_t = -psi and Delta psi = psi_tt = psi.

Two independent evaluation routes are provided: a modified-Bessel route
(ascending series below r = 15, asymptotic expansion above) and direct
Gauss-Legendre quadrature over the sphere.  Scaled variants carry an e^(-r)
factor so that e^(r-t) stays representable on the support r <= t + R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .model import surface_measure

# Crossover between the ascending series and the asymptotic expansion.
SERIES_CUT = 15.0
# Unscaled phi1 overflows float64 shortly above e^709; reject earlier.
OVERFLOW_RADIUS = 700.0
# Safety factor applied to the sampled supremum of q(t); C1 only enters the
# comparison-ODE coefficient, never the lifespan exponent.
C1_SAFETY_MARGIN = 0.05

CLOSED_FORM_1D = "closed_form_1d"
BESSEL_SERIES = "bessel_series"
SPHERE_QUADRATURE = "sphere_quadrature"


def _series_scaled(r: np.ndarray, n: int) -> np.ndarray:
    # e^(-r) * 2 pi^(n/2) sum_k (r^2/4)^k / (k! Gamma(k + n/2)), all terms positive
    x = r * r / 4.0
    term = np.full_like(r, 1.0 / math.gamma(n / 2.0))
    acc = term.copy()
    for k in range(1, 90):
        term = term * x / (k * (k - 1.0 + n / 2.0))
        acc += term
        if np.all(term <= 1e-17 * acc):
            break
    return 2.0 * math.pi ** (n / 2.0) * np.exp(-r) * acc

def _asymptotic_scaled(r: np.ndarray, n: int) -> np.ndarray:
    # e^(-r) phi1(r) = (2 pi)^(n/2) r^(1-n/2) e^(-r) I_(n/2-1)(r), with
    # e^(-r) I_nu(r) ~ (2 pi r)^(-1/2) sum_k (-1)^k a_k(nu) / r^k.
    # Terms are added while they keep shrinking; for r >= 15 the smallest
    # term is far below 1e-12 relative for the nu arising from n <= 12.
    nu = n / 2.0 - 1.0
    term = np.ones_like(r)
    acc = term.copy()
    smallest = np.full_like(r, np.inf)
    for k in range(1, 60):
        term = term * -(4.0 * nu * nu - (2.0 * k - 1.0) ** 2) / (8.0 * k * r)
        mag = np.abs(term)
        grow = mag >= smallest
        if np.all(grow):
            break
        acc = np.where(grow, acc, acc + term)
        smallest = np.minimum(smallest, mag)
    pref = (2.0 * math.pi) ** (n / 2.0) * r ** (1.0 - n / 2.0) / np.sqrt(2.0 * math.pi * r)
    return pref * acc


def phi1_scaled(r, n: int):
    """e^(-r) phi1(r); well scaled for every r >= 0."""
    arr = np.asarray(r, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0.0):
        raise ValueError("phi1 requires r >= 0")
    if n == 1:
        out = 1.0 + np.exp(-2.0 * arr)
    else:
        out = np.empty_like(arr)
        low = arr <= SERIES_CUT
        if np.any(low):
            out[low] = _series_scaled(arr[low], n)
        if np.any(~low):
            out[~low] = _asymptotic_scaled(arr[~low], n)
    return float(out[0]) if scalar else out


def phi1(r, n: int):
    """phi1(r), the sphere average of e^(x.omega) at |x| = r.

    Rejects r beyond OVERFLOW_RADIUS where e^r leaves float64 range; use
    phi1_scaled there.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr > OVERFLOW_RADIUS):
        raise ValueError(
            f"phi1 overflows for r > {OVERFLOW_RADIUS:g}; use phi1_scaled"
        )
    scaled = phi1_scaled(arr, n)
    out = np.exp(arr) * scaled
    return float(out) if np.ndim(r) == 0 else out


def phi1_sphere_quadrature(r, n: int, order: int = 200):
    """Independent phi1 route: Gauss-Legendre quadrature of
    |S^(n-2)| int_0^pi e^(r cos th) sin^(n-2) th dth.  Requires n >= 2."""
    if n < 2:
        raise ValueError("sphere quadrature needs n >= 2; n = 1 is closed form")
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(arr < 0.0):
        raise ValueError("phi1 requires r >= 0")
    if np.any(arr > OVERFLOW_RADIUS):
        raise ValueError(f"phi1 overflows for r > {OVERFLOW_RADIUS:g}")
    x, w = leggauss(order)
    th = (x + 1.0) * (math.pi / 2.0)
    ww = w * (math.pi / 2.0) * np.sin(th) ** (n - 2)
    om = surface_measure(n - 1)
    out = om * np.exp(arr[:, None] * np.cos(th)[None, :]) @ ww
    return float(out[0]) if np.ndim(r) == 0 else out


@dataclass(frozen=True)
class Phi1Evaluator:
    """Evaluation-route selector for phi1; routes agree to 1e-8 relative."""

    n: int
    method: str = BESSEL_SERIES
    quadrature_order: int = 200

    def __post_init__(self):
        if self.n == 1 and self.method != CLOSED_FORM_1D:
            raise ValueError("for n = 1 only the closed form is available")
        if self.method not in (CLOSED_FORM_1D, BESSEL_SERIES, SPHERE_QUADRATURE):
            raise ValueError(f"unknown phi1 method {self.method!r}")
        if self.method == CLOSED_FORM_1D and self.n != 1:
            raise ValueError("closed_form_1d applies to n = 1 only")

    def __call__(self, r):
        if self.method == SPHERE_QUADRATURE:
            return phi1_sphere_quadrature(r, self.n, self.quadrature_order)
        return phi1(r, self.n)


def psi(r, t, n: int):
    """psi(r, t) = e^(-t) phi1(r)."""
    if np.any(np.asarray(t) < 0.0):
        raise ValueError("psi requires t >= 0")
    return np.exp(-np.asarray(t, dtype=float)) * phi1(r, n)


def psi_log_scaled(r, t, n: int):
    """psi(r, t) as e^(r - t) * phi1_scaled(r): safe on the support r <= t + R."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.exp(r - t) * phi1_scaled(r, n)


def check_psi_identities(n: int, r_grid, h: float) -> float:
    """Largest relative residual of phi1'' + (n-1)/r phi1' - phi1 = 0 on the grid.

    Centered second-order differences with step h; at r = 0 the symmetric
    limit n phi1''(0) = phi1(0) is used.  Residuals are normalized by
    max(1, phi1(r)) and shrink as O(h^2).
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or np.any(np.diff(r) <= 0.0):
        raise ValueError("r_grid must be strictly increasing")
    if r[0] < 0.0:
        raise ValueError("r_grid must be non-negative")
    worst = 0.0
    at_zero = r == 0.0
    pos = r[~at_zero]
    if pos.size:
        # phi1 is even: evaluate at |r - h| so tiny r work with the same stencil
        f0 = phi1(pos, n)
        fp = phi1(pos + h, n)
        fm = phi1(np.abs(pos - h), n)
        d2 = (fp - 2.0 * f0 + fm) / (h * h)
        d1 = (fp - fm) / (2.0 * h)
        res = np.abs(d2 + (n - 1.0) / pos * d1 - f0) / np.maximum(1.0, f0)
        worst = float(np.max(res))
    if np.any(at_zero):
        f0 = phi1(0.0, n)
        d2 = 2.0 * (phi1(h, n) - f0) / (h * h)
        worst = max(worst, abs(n * d2 - f0) / max(1.0, f0))
    return worst


def data_phi1_integral(profile, support_radius: float, n: int) -> float:
    """int_{R^n} profile(|x|) phi1(|x|) dx by panel Gauss rules on [0, support].

    Effectively exact (:math:`\\ll` 1e-12 relative) for the polynomial bump
    profiles; this is how the data constants C_{f,0} and C_{0,g} are built.
    """
    if support_radius <= 0.0:
        raise ValueError("support radius must be positive")
    npanels = max(4, int(math.ceil(support_radius / 0.25)))
    x, w = leggauss(16)
    edges = np.linspace(0.0, support_radius, npanels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    vals = np.asarray(profile(rho), dtype=float) * phi1(rho, n) * rho ** (n - 1)
    return surface_measure(n) * float(vals @ ww)


@dataclass(frozen=True)
class C1Estimate:
    """Empirical envelope constant for int_{|x|<=t+R} psi dx <= C1 (1+t)^((n-1)/2)."""

    n: int
    R: float
    value: float
    t_grid_max: float
    sup_q: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "R": self.R,
            "value": self.value,
            "t_grid_max": self.t_grid_max,
            "sup_q": self.sup_q,
        }


def integrate_psi_ball(n: int, R: float, t: float) -> float:
    """int_{|x| <= t+R} psi(x, t) dx via radial reduction and panel Gauss rules.

    The integrand omega_(n-1) e^(rho-t) phi1_scaled(rho) rho^(n-1) is
    concentrated within ~40 units of the upper limit; earlier contributions
    are below e^(-40) relative and are skipped.
    """
    upper = t + R
    lower = max(0.0, t - 45.0)
    npanels = max(1, int(math.ceil((upper - lower) / 0.5)))
    x, w = leggauss(16)
    edges = np.linspace(lower, upper, npanels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    vals = np.exp(rho - t) * phi1_scaled(rho, n) * rho ** (n - 1)
    return surface_measure(n) * float(vals @ ww)


def psi_ball_ratio(n: int, R: float, t: float) -> float:
    """q(t) = int_{|x|<=t+R} psi dx / (1+t)^((n-1)/2); bounded in t."""
    return integrate_psi_ball(n, R, t) / (1.0 + t) ** ((n - 1) / 2.0)


def estimate_C1(n: int, R: float, t_max: float, samples: int = 200) -> C1Estimate:
    """Sample q(t) on [0, t_max] and return its supremum with a 5% margin.

    Fails when q is still rising faster than 1% per unit time at t_max, which
    means the bound has not saturated and the caller must enlarge t_max.
    """
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    ts = np.linspace(0.0, t_max, samples)
    q = np.array([psi_ball_ratio(n, R, t) for t in ts])
    if np.any(q <= 0.0):
        raise ValueError("psi integral must be positive")
    rate = (q[-1] - q[-2]) / (ts[-1] - ts[-2]) / q[-1]
    if rate > 0.01:
        raise ValueError(
            f"q(t) still rising at {rate:.3%} per unit t at t_max={t_max:g}; "
            "increase t_max"
        )
    sup_q = float(np.max(q))
    return C1Estimate(
        n=n,
        R=R,
        value=sup_q * (1.0 + C1_SAFETY_MARGIN),
        t_grid_max=float(t_max),
        sup_q=sup_q,
    )
