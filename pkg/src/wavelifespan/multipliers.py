"""Damping-absorbing multipliers: integrating factors m with m'/m = b(t).

Three kinds:

* scattering: m(t) = exp(mu (1+t)^(1-beta) / (1-beta)) for beta > 1,
  pinched between m(0) and 1;
* scale-invariant: m1(t) = (1+t)^mu, unbounded for mu > 0 (the reason the
  generalized-damping extension fails at beta = 1);
* general: m(t) = exp(-int_t^inf b), for integrable b given through a small
  set of parametric families with closed-form tails, so the tail carries no
  truncation error at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

SCATTERING = "scattering"
SCALE_INVARIANT = "scale_invariant"
GENERAL = "general"


def m_scattering(t, mu: float, beta: float):
    """exp(mu (1+t)^(1-beta) / (1-beta)); requires beta > 1."""
    if beta <= 1.0:
        raise ValueError("scattering multiplier needs beta > 1; use scale_invariant or general")
    if mu < 0.0:
        raise ValueError("mu must be >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    out = np.exp(mu * (1.0 + t) ** (1.0 - beta) / (1.0 - beta))
    return float(out) if out.ndim == 0 else out


def m_scale_invariant(t, mu: float):
    """(1+t)^mu, the borderline beta = 1 multiplier; m1(0) = 1, unbounded."""
    if mu < 0.0:
        raise ValueError("mu must be >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    out = (1.0 + t) ** mu
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerTail:
    """b(s) = mu (1+s)^(-beta) with beta > 1; tail integral mu (1+t)^(1-beta)/(beta-1)."""

    mu: float
    beta: float

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")
        if self.beta <= 1.0:
            raise ValueError(
                "power-tail damping with beta <= 1 has a divergent tail integral "
                "(not scattering-class)"
            )

    def __call__(self, s):
        return self.mu * (1.0 + np.asarray(s, dtype=float)) ** (-self.beta)

    def tail(self, t):
        return self.mu * (1.0 + np.asarray(t, dtype=float)) ** (1.0 - self.beta) / (self.beta - 1.0)


@dataclass(frozen=True)
class ExponentialTail:
    """b(s) = a e^(-lam s) with lam > 0; tail integral (a/lam) e^(-lam t)."""

    a: float
    lam: float

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.lam <= 0.0:
            raise ValueError("exponential-tail damping needs lam > 0 (divergent tail otherwise)")

    def __call__(self, s):
        return self.a * np.exp(-self.lam * np.asarray(s, dtype=float))

    def tail(self, t):
        return self.a / self.lam * np.exp(-self.lam * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class CompactTail:
    """b(s) = c (1 - s/s_end)_+^q on [0, s_end]; tail is an exact polynomial."""

    c: float
    s_end: float
    q: float = 1.0

    def __post_init__(self):
        if self.c < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.s_end <= 0.0:
            raise ValueError("s_end must be positive")
        if self.q < 0.0:
            raise ValueError("shape exponent q must be >= 0")

    def __call__(self, s):
        x = 1.0 - np.asarray(s, dtype=float) / self.s_end
        return self.c * np.maximum(x, 0.0) ** self.q

    def tail(self, t):
        x = np.maximum(1.0 - np.asarray(t, dtype=float) / self.s_end, 0.0)
        return self.c * self.s_end / (self.q + 1.0) * x ** (self.q + 1.0)


def m_general(t, b):
    """exp(-int_t^inf b(s) ds) for a parametric damping family with exact tail."""
    if not hasattr(b, "tail"):
        raise TypeError(
            "m_general needs a damping family with a closed-form .tail(t) "
            "(PowerTail, ExponentialTail or CompactTail)"
        )
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    out = np.exp(-b.tail(t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Multiplier:
    """A multiplier m with its damping coefficient b = m'/m."""

    kind: str
    value_at: Callable[[float], float]
    log_derivative_at: Callable[[float], float]

    @staticmethod
    def scattering(mu: float, beta: float) -> "Multiplier":
        if beta <= 1.0:
            raise ValueError("scattering multiplier needs beta > 1")
        return Multiplier(
            kind=SCATTERING,
            value_at=lambda t: m_scattering(t, mu, beta),
            log_derivative_at=lambda t: mu * (1.0 + np.asarray(t, dtype=float)) ** (-beta),
        )

    @staticmethod
    def scale_invariant(mu: float) -> "Multiplier":
        return Multiplier(
            kind=SCALE_INVARIANT,
            value_at=lambda t: m_scale_invariant(t, mu),
            log_derivative_at=lambda t: mu / (1.0 + np.asarray(t, dtype=float)),
        )

    @staticmethod
    def general(b) -> "Multiplier":
        return Multiplier(
            kind=GENERAL,
            value_at=lambda t: m_general(t, b),
            log_derivative_at=b,
        )

    @staticmethod
    def for_params(params) -> "Multiplier":
        """The multiplier the lifespan machinery uses for a model run."""
        if params.scale_invariant:
            return Multiplier.scale_invariant(params.mu)
        return Multiplier.scattering(params.mu, params.beta)

    def __call__(self, t):
        return self.value_at(t)


def check_log_derivative(m: Multiplier, t_grid, h: float) -> float:
    """Max |centered difference of log m - b| over the grid; O(h^2)."""
    if h <= 0.0:
        raise ValueError("step h must be positive")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t - h < 0.0):
        raise ValueError("grid point within h of the domain boundary t = 0")
    num = (np.log(m.value_at(t + h)) - np.log(m.value_at(t - h))) / (2.0 * h)
    return float(np.max(np.abs(num - m.log_derivative_at(t))))
