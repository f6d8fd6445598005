"""Hot time-stepping kernels for the radial solver.

Two interchangeable backends implement the same staggered-leapfrog step:

* ``advance_numba`` - scalar loops compiled with ``numba.njit`` (default);
* ``advance_numpy`` - vectorized pure-numpy twin.

Set ``WAVELIFESPAN_NUMBA=0`` in the environment to make the numpy path the
default (or to run on hosts where numba is unavailable).  Per-element
arithmetic is ordered identically in both backends; ``benchmarks/`` compares
their throughput.

Scheme (one step of size dt, previous step dt_prev):

* u lives at integer levels t, w = u_t at half levels t - dt_prev/2;
* kick over [t - dt_prev/2, t + dt/2]: the linear damping is applied as an
  exact integrating factor split around the impulse (Strang), the impulse is
  h * (Lu + |u_t|^p) with h = (dt_prev + dt)/2, Lu the finite-volume radial
  Laplacian (n u_rr(0) symmetry limit at r = 0, Dirichlet zero at r_max) and
  u_t at the integer level extrapolated from w;
* drift: u += dt * w.

dt adapts as min(c_cfl dr, safety / max|u_t|^(p-1)) and the kernel stops on
target time, amplitude threshold, dt collapse, or step budget.
"""

from __future__ import annotations

import math
import os

import numpy as np

STATUS_TARGET = 0
STATUS_THRESHOLD = 1
STATUS_DT_COLLAPSE = 2
STATUS_STEP_BUDGET = 3

_ACTIVE_MARGIN = 8  # nodes beyond the light cone kept in the update window


def _damping_primitive(t: float, mu: float, beta: float) -> float:
    """M(t) = int_0^t mu (1+s)^(-beta) ds, closed form."""
    if mu == 0.0:
        return 0.0
    if beta == 1.0:
        return mu * math.log1p(t)
    return mu * ((1.0 + t) ** (1.0 - beta) - 1.0) / (1.0 - beta)


def _advance_scalar(u, w, t, dt_prev, t_target, p, mu, beta, R, dr, c_cfl,
                    safety, dt_min, thr_lo, thr_hi, source_on, flux, inv_vol,
                    max_steps, t_lo, t_hi):
    m = u.shape[0]
    pmode = 0
    if p == 2.0:
        pmode = 1
    elif p == 3.0:
        pmode = 2
    elif p == 1.5:
        pmode = 3
    dt_cfl = c_cfl * dr
    steps = 0
    ma = int((t + R) / dr) + _ACTIVE_MARGIN
    if ma > m - 1:
        ma = m - 1
    max_w = 0.0
    for j in range(ma):
        aw = abs(w[j])
        if aw > max_w:
            max_w = aw
    while t < t_target:
        if steps >= max_steps:
            return t, dt_prev, STATUS_STEP_BUDGET, max_w, t_lo, t_hi, steps
        dt = dt_cfl
        if source_on and max_w > 0.0:
            dt_src = safety / max_w ** (p - 1.0)
            if dt_src < dt:
                dt = dt_src
        if dt < dt_min:
            return t, dt_prev, STATUS_DT_COLLAPSE, max_w, t_lo, t_hi, steps
        land = t_target - t <= dt
        if land:
            dt = t_target - t
        ma = int((t + R) / dr) + _ACTIVE_MARGIN
        if ma > m - 1:
            ma = m - 1
        h = 0.5 * (dt_prev + dt)
        mt = _damping_primitive(t, mu, beta)
        e_pre = math.exp(_damping_primitive(t - 0.5 * dt_prev, mu, beta) - mt)
        e_post = math.exp(mt - _damping_primitive(t + 0.5 * dt, mu, beta))
        new_max = 0.0
        carry = u[0]
        for j in range(ma):
            if j == 0:
                lap = flux[0] * (u[1] - u[0]) * inv_vol[0]
            else:
                lap = (flux[j] * (u[j + 1] - u[j]) - flux[j - 1] * (u[j] - carry)) * inv_vol[j]
            v1 = e_pre * w[j]
            a = lap
            if source_on:
                av1 = abs(v1)
                if pmode == 1:
                    s1 = av1 * av1
                elif pmode == 2:
                    s1 = av1 * av1 * av1
                elif pmode == 3:
                    s1 = av1 * math.sqrt(av1)
                else:
                    s1 = av1 ** p
                vhat = v1 + 0.5 * dt_prev * (lap + s1)
                avh = abs(vhat)
                if pmode == 1:
                    s2 = avh * avh
                elif pmode == 2:
                    s2 = avh * avh * avh
                elif pmode == 3:
                    s2 = avh * math.sqrt(avh)
                else:
                    s2 = avh ** p
                a = lap + s2
            wn = e_post * (v1 + h * a)
            w[j] = wn
            carry = u[j]
            u[j] += dt * wn
            aw = abs(wn)
            if aw > new_max:
                new_max = aw
            elif aw != aw:  # NaN must poison the maximum
                new_max = aw
        if land:
            t = t_target
        else:
            t += dt
        dt_prev = dt
        max_w = new_max
        steps += 1
        if not math.isfinite(max_w) or max_w >= thr_hi:
            if math.isnan(t_hi):
                t_hi = t
            if math.isnan(t_lo):
                t_lo = t
            return t, dt_prev, STATUS_THRESHOLD, max_w, t_lo, t_hi, steps
        if max_w >= thr_lo and math.isnan(t_lo):
            t_lo = t
    return t, dt_prev, STATUS_TARGET, max_w, t_lo, t_hi, steps


def _pow_p(x: np.ndarray, p: float) -> np.ndarray:
    # keep the arithmetic identical to the scalar kernel's special cases
    if p == 2.0:
        return x * x
    if p == 3.0:
        return x * x * x
    if p == 1.5:
        return x * np.sqrt(x)
    return x ** p


def advance_numpy(u, w, t, dt_prev, t_target, p, mu, beta, R, dr, c_cfl,
                  safety, dt_min, thr_lo, thr_hi, source_on, flux, inv_vol,
                  max_steps, t_lo, t_hi):
    """Vectorized twin of the compiled kernel; one python iteration per step."""
    m = u.shape[0]
    dt_cfl = c_cfl * dr
    steps = 0
    ma = min(int((t + R) / dr) + _ACTIVE_MARGIN, m - 1)
    max_w = float(np.max(np.abs(w[:ma]))) if ma > 0 else 0.0
    lap = np.empty(m)
    while t < t_target:
        if steps >= max_steps:
            return t, dt_prev, STATUS_STEP_BUDGET, max_w, t_lo, t_hi, steps
        dt = dt_cfl
        if source_on and max_w > 0.0:
            dt_src = safety / max_w ** (p - 1.0)
            if dt_src < dt:
                dt = dt_src
        if dt < dt_min:
            return t, dt_prev, STATUS_DT_COLLAPSE, max_w, t_lo, t_hi, steps
        land = t_target - t <= dt
        if land:
            dt = t_target - t
        ma = min(int((t + R) / dr) + _ACTIVE_MARGIN, m - 1)
        h = 0.5 * (dt_prev + dt)
        mt = _damping_primitive(t, mu, beta)
        e_pre = math.exp(_damping_primitive(t - 0.5 * dt_prev, mu, beta) - mt)
        e_post = math.exp(mt - _damping_primitive(t + 0.5 * dt, mu, beta))
        ua = u[: ma + 1]
        lap[0] = flux[0] * (ua[1] - ua[0]) * inv_vol[0]
        lap[1:ma] = (
            flux[1:ma] * (ua[2:] - ua[1:-1]) - flux[: ma - 1] * (ua[1:-1] - ua[:-2])
        ) * inv_vol[1:ma]
        la = lap[:ma]
        v1 = e_pre * w[:ma]
        if source_on:
            vhat = v1 + (0.5 * dt_prev) * (la + _pow_p(np.abs(v1), p))
            a = la + _pow_p(np.abs(vhat), p)
        else:
            a = la
        wn = e_post * (v1 + h * a)
        w[:ma] = wn
        u[:ma] += dt * wn
        if land:
            t = t_target
        else:
            t += dt
        dt_prev = dt
        max_w = float(np.max(np.abs(wn))) if ma > 0 else 0.0
        steps += 1
        if not math.isfinite(max_w) or max_w >= thr_hi:
            if math.isnan(t_hi):
                t_hi = t
            if math.isnan(t_lo):
                t_lo = t
            return t, dt_prev, STATUS_THRESHOLD, max_w, t_lo, t_hi, steps
        if max_w >= thr_lo and math.isnan(t_lo):
            t_lo = t
    return t, dt_prev, STATUS_TARGET, max_w, t_lo, t_hi, steps


def _env_wants_numba() -> bool:
    flag = os.environ.get("WAVELIFESPAN_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


advance_numba = None
if _env_wants_numba():
    try:
        from numba import njit

        # the inner helper must be a compiled dispatcher before the kernel
        # referencing it is compiled
        _damping_primitive = njit(cache=True, nogil=True)(_damping_primitive)
        advance_numba = njit(cache=True, nogil=True)(_advance_scalar)
    except ImportError:
        advance_numba = None

USING_NUMBA = advance_numba is not None
DEFAULT_BACKEND = "numba" if USING_NUMBA else "numpy"


def get_advance(backend: str | None = None):
    """Resolve an advance kernel by name ("numba", "numpy" or None for default)."""
    name = backend or DEFAULT_BACKEND
    if name == "numba":
        if advance_numba is None:
            raise RuntimeError(
                "numba backend unavailable (disabled via WAVELIFESPAN_NUMBA or not installed)"
            )
        return advance_numba
    if name == "numpy":
        return advance_numpy
    raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
