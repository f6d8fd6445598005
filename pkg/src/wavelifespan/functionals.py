"""The blow-up functionals F1, G, H evaluated along numerical runs, plus
monitors for every inequality in the blow-up argument.

With psi(x, t) = e^(-t) phi1(|x|) and the run's multiplier m:

    F1(t) = int u psi dx
    G(t)  = m(t) int u_t psi dx - (m(0) eps / 2) C_0g
            - 1/2 int_0^t m(s) int |u_t|^p psi dx ds
    H(t)  = 1/2 int_0^t m(s) int |u_t|^p psi dx ds + (m(0) eps / 2) C_0g

so G = m int u_t psi - H.  The monitored inequalities (true for exact energy
solutions; flagged, never fatal, for discrete ones):

    F1(t)            >= (m(0) eps / 2) C_f0        (scattering)
    F1(t)            >= C_f0 eps / (2 m1(t))       (scale-invariant)
    G(t)             >= e^(-2t) G(0)
    m(t) int u_t psi >= H(t)
    H'(t)            >= C1^(1-p)/2 (1+t)^(-k) H(t)^p

with k the regime decay exponent.  Monitors flag rather than abort: near
blow-up, discretization error can violate inequalities the true solution
satisfies, and the honest check is the failure-rate trend under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lifespan import decay_exponent
from .model import DataProfile, ModelParams, surface_measure
from .multipliers import Multiplier
from .special import C1Estimate, data_phi1_integral, phi1_scaled

# nodes past the light cone included in the weighted reductions; everything
# beyond is exactly zero by construction of the stepping window
_ACTIVE_MARGIN = 8

# relative slack for the G / H / H-ODE inequality monitors
MONITOR_REL_TOL = 0.05
# F1 lower-bound slack: discretization allowance plus a roundoff floor so
# runs with f = 0 (zero bound) do not flag spurious sign noise
F1_REL_ALLOWANCE = 1e-4
F1_ABS_FLOOR = 1e-12

MIN_MONITOR_SAMPLES = 32


class FunctionalEvaluator:
    """psi-weighted radial integrals on a solver grid.

    Weights are assembled once; the e^(r - t) factor is applied on the active
    slice r <= t + R + margin so nothing overflows on long runs.
    """

    def __init__(self, grid):
        self.grid = grid
        r = grid.r
        wr = np.full(r.size, grid.dr)
        wr[0] = wr[-1] = 0.5 * grid.dr
        self._w = surface_measure(grid.n) * phi1_scaled(r, grid.n) * r ** (grid.n - 1) * wr
        self._r = r

    def _slice(self, t: float, R: float) -> int:
        return min(self._r.size, int((t + R) / self.grid.dr) + _ACTIVE_MARGIN)

    def weighted(self, values: np.ndarray, t: float, R: float) -> float:
        """int values(|x|) psi(x, t) dx for grid samples `values`."""
        j = self._slice(t, R)
        return float((self._w[:j] * np.exp(self._r[:j] - t)) @ values[:j])

    def f1(self, u: np.ndarray, t: float, R: float) -> float:
        return self.weighted(u, t, R)

    def reductions(self, u: np.ndarray, v: np.ndarray, t: float, R: float,
                   p: float) -> tuple[float, float, float, float]:
        """(F1, int u_t psi, int |u_t|^p psi, max|u_t|) with one slice pass."""
        j = self._slice(t, R)
        wt = self._w[:j] * np.exp(self._r[:j] - t)
        va = np.abs(v[:j])
        return (
            float(wt @ u[:j]),
            float(wt @ v[:j]),
            float(wt @ va ** p),
            float(np.max(va)) if j else 0.0,
        )


def compute_F1(state, grid, R: float) -> float:
    """F1 = int u psi dx for a single solver state."""
    return FunctionalEvaluator(grid).f1(state.u, state.t, R)


@dataclass
class FunctionalTrace:
    """Sampled F1, raw psi-integrals, and everything derived from them."""

    times: np.ndarray
    F1: np.ndarray
    int_ut_psi: np.ndarray
    int_src_psi: np.ndarray
    max_ut: np.ndarray
    params: ModelParams
    multiplier: Multiplier
    C_f0: float
    C_0g: float
    source_on: bool
    states: list | None = None
    monitor_flags: dict = field(default_factory=dict)

    @property
    def C_fg(self) -> float:
        return self.C_f0 + self.C_0g

    @property
    def m0(self) -> float:
        return float(self.multiplier.value_at(0.0))

    @property
    def H0(self) -> float:
        return self.m0 * (self.params.eps / 2.0) * self.C_0g

    def m_values(self) -> np.ndarray:
        return np.asarray(self.multiplier.value_at(self.times), dtype=float)

    def _check_density(self) -> None:
        if self.times.size < MIN_MONITOR_SAMPLES:
            raise ValueError(
                f"trace has {self.times.size} samples; the running time integrals "
                f"need at least {MIN_MONITOR_SAMPLES}"
            )

    def H(self) -> np.ndarray:
        """Running H: H0 plus the trapezoid integral of m |u_t|^p-weighted psi."""
        if not self.source_on:
            return np.full_like(self.times, self.H0)
        self._check_density()
        integrand = self.m_values() * self.int_src_psi
        accum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(self.times))]
        )
        return self.H0 + 0.5 * accum

    def G(self) -> np.ndarray:
        return self.m_values() * self.int_ut_psi - self.H()

    def to_csv(self, path) -> None:
        """Column order is fixed: t,F1,G,H,max_ut then one column per monitor."""
        cols = [self.times, self.F1, self.G(), self.H(), self.max_ut]
        names = ["t", "F1", "G", "H", "max_ut"]
        for name, flags in self.monitor_flags.items():
            names.append(name)
            cols.append(np.asarray(flags, dtype=float))
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in zip(*cols):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


class TraceBuilder:
    """Accumulates trace rows during a run."""

    def __init__(self, params: ModelParams, data: DataProfile, multiplier: Multiplier,
                 evaluator: FunctionalEvaluator, source_on: bool = True):
        self.params = params
        self.multiplier = multiplier
        self.evaluator = evaluator
        self.source_on = source_on
        self.C_f0 = (
            data_phi1_integral(data.f, data.support_radius, params.n)
            if data.amplitude_f > 0.0
            else 0.0
        )
        # amplitude_g = 0 only arises in degenerate zero-data solver checks;
        # every data constructor rejects it
        self.C_0g = (
            data_phi1_integral(data.g, data.support_radius, params.n)
            if data.amplitude_g > 0.0
            else 0.0
        )
        if data.amplitude_g > 0.0 and not self.C_0g > 0.0:
            raise ValueError("C_0g must be positive (g must not vanish identically)")
        self._rows: list[tuple[float, float, float, float, float]] = []

    def record(self, t: float, u: np.ndarray, v: np.ndarray) -> None:
        f1, i_ut, i_src, max_ut = self.evaluator.reductions(
            u, v, t, self.params.R, self.params.p
        )
        self._rows.append((t, f1, i_ut, i_src, max_ut))

    def build(self) -> FunctionalTrace:
        arr = np.array(self._rows, dtype=float)
        return FunctionalTrace(
            times=arr[:, 0],
            F1=arr[:, 1],
            int_ut_psi=arr[:, 2],
            int_src_psi=arr[:, 3],
            max_ut=arr[:, 4],
            params=self.params,
            multiplier=self.multiplier,
            C_f0=self.C_f0,
            C_0g=self.C_0g,
            source_on=self.source_on,
        )


def compute_G(trace: FunctionalTrace) -> np.ndarray:
    """G series; requires a dense enough trace for the running integral."""
    trace._check_density()
    return trace.G()


def compute_H(trace: FunctionalTrace) -> np.ndarray:
    """H series (H1 in the scale-invariant range: same formula, m = m1)."""
    return trace.H()


@dataclass
class MonitorResult:
    """Per-sample verdicts of one inequality."""

    name: str
    flags: np.ndarray
    times: np.ndarray

    @property
    def pass_fraction(self) -> float:
        return float(np.mean(self.flags)) if self.flags.size else 1.0

    @property
    def failures(self) -> int:
        return int(np.sum(~self.flags))


def monitor_lemma_F1(trace: FunctionalTrace) -> MonitorResult:
    """F1 against its data lower bound (constant for beta > 1, decaying ~1/m1 for beta = 1)."""
    p = trace.params
    tol = F1_REL_ALLOWANCE * p.eps * trace.C_f0 + F1_ABS_FLOOR * p.eps * trace.C_fg
    if p.scale_invariant:
        bound = trace.C_f0 * p.eps / (2.0 * np.asarray(trace.multiplier.value_at(trace.times)))
    else:
        bound = np.full_like(trace.times, trace.m0 * p.eps / 2.0 * trace.C_f0)
    flags = trace.F1 >= bound - tol
    return MonitorResult("f1_lower", flags, trace.times)


def monitor_G_decay(trace: FunctionalTrace) -> MonitorResult:
    """G(t) >= e^(-2t) G(0) within monitor tolerance."""
    G = compute_G(trace)
    floor = G[0] * np.exp(-2.0 * trace.times) * (1.0 - MONITOR_REL_TOL)
    tol = F1_ABS_FLOOR * trace.params.eps * trace.C_fg
    flags = G >= floor - tol
    return MonitorResult("g_decay", flags, trace.times)


def monitor_H_lower(trace: FunctionalTrace) -> MonitorResult:
    """m(t) int u_t psi dx >= H(t) within monitor tolerance."""
    H = compute_H(trace)
    lhs = trace.m_values() * trace.int_ut_psi
    flags = lhs >= H * (1.0 - MONITOR_REL_TOL)
    return MonitorResult("h_lower", flags, trace.times)


def monitor_H_ode(trace: FunctionalTrace, C1: C1Estimate) -> MonitorResult:
    """Discrete H' against A (1+t)^(-k) H^p on sample midpoints.

    Row i >= 1 carries the verdict of the interval ending at sample i; row 0
    is trivially true (one-sided start).
    """
    if not trace.source_on:
        raise ValueError("H-ODE monitor needs a run with the source enabled")
    p = trace.params
    H = compute_H(trace)
    dt = np.diff(trace.times)
    dH = np.diff(H) / dt
    t_mid = trace.times[:-1] + 0.5 * dt
    H_mid = 0.5 * (H[1:] + H[:-1])
    A = C1.value ** (1.0 - p.p) / 2.0
    k = decay_exponent(p)
    rhs = A * (1.0 + t_mid) ** (-k) * H_mid ** p.p
    flags = np.concatenate([[True], dH >= rhs * (1.0 - MONITOR_REL_TOL)])
    return MonitorResult("h_ode", flags, trace.times)


def run_monitors(trace: FunctionalTrace, C1: C1Estimate) -> dict[str, MonitorResult]:
    """Run every inequality monitor and attach the flag columns to the trace."""
    results = {
        "f1_lower": monitor_lemma_F1(trace),
        "g_decay": monitor_G_decay(trace),
        "h_lower": monitor_H_lower(trace),
    }
    if trace.source_on:
        results["h_ode"] = monitor_H_ode(trace, C1)
    for name, res in results.items():
        trace.monitor_flags[name] = res.flags
    return results
