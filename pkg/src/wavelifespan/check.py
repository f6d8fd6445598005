"""Self-contained invariant suite behind ``wavelifespan check``.

Everything here is deterministic (fixed seeds) and cheap enough for a
pre-flight sanity run; the full gated experiments live in the test suite.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import cli
from .functionals import run_monitors
from .lifespan import (
    OdeCoefficients,
    hitting_time_numeric,
    solve_comparison_ode,
    time_to_level,
)
from .model import ModelParams
from .multipliers import Multiplier, PowerTail, check_log_derivative, m_general, m_scattering
from .solver import RadialGrid, run_until_blowup
from .special import check_psi_identities, estimate_C1, phi1, phi1_sphere_quadrature, psi
from .sweep import fit_power_law


def check_multiplier_bounds() -> tuple[bool, str]:
    rng = np.random.default_rng(20240501)
    N = 1_000_000
    t = rng.uniform(0.0, 1e3, N)
    mu = rng.uniform(0.0, 10.0, N)
    beta = rng.uniform(1.0 + 1e-6, 4.0, N)
    m = np.exp(mu * (1.0 + t) ** (1.0 - beta) / (1.0 - beta))
    m0 = np.exp(mu / (1.0 - beta))
    ok = bool(np.all(m <= 1.0) and np.all(m >= m0))
    resid = check_log_derivative(
        Multiplier.scattering(1.0, 2.0), np.linspace(0.5, 50.0, 200), 1e-4
    )
    ok = ok and resid < 1e-7
    agree = max(
        abs(m_general(t, PowerTail(2.0, 2.0)) - m_scattering(t, 2.0, 2.0))
        for t in (0.0, 0.5, 3.0, 50.0)
    )
    ok = ok and agree <= 1e-10
    return ok, f"log-derivative residual {resid:.2e}, general-vs-scattering {agree:.2e}"


def check_phi1_routes() -> tuple[bool, str]:
    r = np.linspace(0.0, 50.0, 301)
    worst = 0.0
    for n in (2, 3, 4, 5):
        a = phi1(r, n)
        b = phi1_sphere_quadrature(r, n)
        worst = max(worst, float(np.max(np.abs(a - b) / b)))
        if np.any(np.diff(a) <= 0.0):
            return False, f"phi1 not strictly increasing for n={n}"
    semi = abs(psi(1.0, 1.5, 3) - math.exp(-0.7) * psi(1.0, 0.8, 3)) / psi(1.0, 1.5, 3)
    grid = np.linspace(0.1, 10.0, 60)
    r1 = check_psi_identities(3, grid, 2e-3)
    r2 = check_psi_identities(3, grid, 1e-3)
    order_ok = 3.0 < r1 / r2 < 5.0
    ok = worst <= 1e-8 and semi < 1e-13 and order_ok
    return ok, f"route agreement {worst:.2e}, semigroup {semi:.1e}, residual ratio {r1 / r2:.2f}"


def check_comparison_ode() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(60):
        branch = rng.integers(0, 3)
        k = [rng.uniform(0.0, 0.9), 1.0, rng.uniform(1.1, 2.5)][branch]
        c = OdeCoefficients(
            A=float(10.0 ** rng.uniform(-1, 1)),
            k=float(k),
            p=float(rng.uniform(1.3, 3.0)),
            H0=float(10.0 ** rng.uniform(-2, 1)),
        )
        closed = time_to_level(c, 1e12)
        numeric = hitting_time_numeric(c, 1e12, rtol=1e-10)
        if math.isinf(closed) or math.isinf(numeric):
            if closed != numeric:
                return False, f"finite/infinite disagreement at {c}"
            continue
        worst = max(worst, abs(closed - numeric) / closed)
    base = OdeCoefficients(A=1.0, k=1.0, p=2.0, H0=1.0)
    lo = solve_comparison_ode(OdeCoefficients(1.0, 1.0 - 1e-6, 2.0, 1.0)).T_blowup
    hi = solve_comparison_ode(OdeCoefficients(1.0, 1.0 + 1e-6, 2.0, 1.0)).T_blowup
    mid = solve_comparison_ode(base).T_blowup
    cont = max(abs(lo - mid), abs(hi - mid)) / mid
    ok = worst <= 1e-6 and cont < 1e-4
    return ok, f"worst closed-vs-numeric {worst:.2e}, continuity at k=1 {cont:.1e}"


def check_fit() -> tuple[bool, str]:
    eps = np.geomspace(1.0, 0.01, 7)
    slope, _, _, _ = fit_power_law(np.log(eps), np.log(eps ** -1.37))
    err = abs(slope + 1.37)
    slope2, _, _, _ = fit_power_law(np.log(3.0 * eps), np.log(eps ** -1.37))
    ok = err <= 1e-12 and abs(slope2 - slope) <= 1e-12
    return ok, f"synthetic slope error {err:.1e}"


def _demo_run(config_name: str):
    cfg_path = cli.shipped_config_dir() / config_name
    values = cli.parse_config_file(cfg_path)
    cfg = cli.RunConfig()
    for key, val in values.items():
        setattr(cfg, key, val)
    params = cfg.params()
    data = cfg.data()
    t_final, _ = cli._resolve_t_final(cfg, params, data)
    dr = cfg.dr if cfg.dr > 0.0 else 0.005
    grid = RadialGrid.for_horizon(params.n, dr, t_final, params.R)
    return run_until_blowup(
        params, data, grid, t_final,
        threshold_factor=cfg.threshold_factor,
        n_samples=cfg.n_samples,
        dt_safety=cfg.dt_safety,
    ), params


def check_demo_monitors() -> tuple[bool, str]:
    details = []
    ok = True
    for name in ("demo_solve_beta2.cfg", "demo_solve_beta1.cfg"):
        (report, trace), params = _demo_run(name)
        if not report.blew_up:
            return False, f"{name}: expected blow-up, got {report.reason}"
        C1 = estimate_C1(params.n, params.R, t_max=40.0)
        monitors = run_monitors(trace, C1)
        frac = min(res.pass_fraction for res in monitors.values())
        ok = ok and frac >= 0.99 and bool(np.all(trace.F1 > 0.0))
        # the light-cone spill stays inside the stepping window by construction
        ok = ok and report.max_support_excess_dr <= 6.0
        details.append(
            f"{name}: T={report.blow_up_time:.3f}, min pass {frac:.4f}, "
            f"cone excess {report.max_support_excess_dr:.1f}dr"
        )
    return ok, "; ".join(details)


def check_determinism() -> tuple[bool, str]:
    (r1, t1), _ = _demo_run("demo_solve_beta2.cfg")
    (r2, t2), _ = _demo_run("demo_solve_beta2.cfg")
    same = (
        r1.to_dict() == r2.to_dict()
        and np.array_equal(t1.F1, t2.F1)
        and np.array_equal(t1.max_ut, t2.max_ut)
    )
    return same, "identical report and trace" if same else "MISMATCH between reruns"


CHECKS = [
    ("multiplier bounds and log-derivatives", check_multiplier_bounds),
    ("phi1 evaluation routes and psi identities", check_phi1_routes),
    ("comparison ODE closed form vs numeric", check_comparison_ode),
    ("power-law fitting oracle", check_fit),
    ("demo-run inequality monitors", check_demo_monitors),
    ("determinism of repeated runs", check_determinism),
]


def run_all(verbose: bool = True) -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - a crashed check is a failed check
            ok, detail = False, f"raised {exc!r}"
        failures += 0 if ok else 1
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if verbose:
        print(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return failures
