"""eps-sweeps: run the solver across a decreasing eps ladder, fit the blow-up
times against the predicted lifespan scaling, and emit reports.

Sub/critical fits:

* subcritical: OLS of log T on log eps; verdict "pass" when the fitted slope
  is within slope_tolerance of the theorem exponent and every blow-up time
  moves less than 5% under a 2x refinement;
* critical: OLS of log T on eps^-(p-1); the gate is positive slope and
  R^2 >= 0.95, explicitly a form-consistency check only (the true critical
  asymptotics are far beyond desk scale).

Each eps runs independently (bounded thread pool; the compiled kernels drop
the GIL) and t_final comes from the closed-form upper-bound witness, so the
result is a deterministic function of the plan regardless of job count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lifespan import bound_from_run, theorem_exponent
from .model import CRITICAL, SUBCRITICAL, ModelParams, classify, make_bump_data
from .solver import RadialGrid, run_until_blowup
from .special import estimate_C1

REFINEMENT_SHIFT_LIMIT = 0.05
DEFAULT_SLOPE_TOLERANCE = 0.3
# witness headroom: the equality ODE bounds the true blow-up from above
WITNESS_HEADROOM = 1.25
DR_FLOOR = 5e-5

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SweepPlan:
    """A ladder of eps values over a fixed parameter base and data profile."""

    base: ModelParams
    eps_values: tuple[float, ...]
    amplitude_f: float = 0.0
    amplitude_g: float = 1.0
    support_radius: float = 1.0
    slope_tolerance: float = DEFAULT_SLOPE_TOLERANCE
    repeat_refined: bool = True
    dr_cap: float = 0.005
    dr_override: float | None = None
    t_final_cap: float | None = None
    n_samples: int = 2000
    dt_safety: float = 0.1
    threshold_factor: float = 1e6
    jobs: int = 1
    backend: str | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_values)
        object.__setattr__(self, "eps_values", eps)
        if len(eps) < 2:
            raise ValueError("a sweep needs at least two eps values")
        if any(e <= 0.0 for e in eps):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps values must be strictly decreasing")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def data(self):
        return make_bump_data(self.support_radius, self.amplitude_f, self.amplitude_g)

    def policy_dr(self, t_pred: float) -> float:
        """dr = min(cap, T_pred/2000 * 0.5): uniform relative resolution."""
        if self.dr_override is not None:
            return self.dr_override
        return max(DR_FLOOR, min(self.dr_cap, t_pred / 2000.0 * 0.5))


@dataclass
class EpsRecord:
    """Outcome of one eps rung (base run plus optional refined rerun)."""

    eps: float
    T_numeric: float | None
    T_refined: float | None
    refinement_shift: float | None
    T_bound_witness: float
    dr: float
    t_final: float
    reason: str
    steps: int
    threshold_crossings: dict

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "T_numeric": self.T_numeric,
            "T_refined": self.T_refined,
            "refinement_shift": self.refinement_shift,
            "T_bound_witness": self.T_bound_witness,
            "dr": self.dr,
            "t_final": self.t_final,
            "reason": self.reason,
            "steps": self.steps,
            "threshold_crossings": dict(self.threshold_crossings),
        }


@dataclass
class SweepResult:
    """Fitted eps-scaling of numerical blow-up times."""

    kind: str  # "subcritical" or "critical"
    records: list[EpsRecord]
    fitted_slope: float | None
    slope_stderr: float | None
    intercept: float | None
    theorem_slope: float | None
    slope_tolerance: float
    r_squared: float | None
    verdict: str
    max_refinement_shift: float | None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "records": [r.to_dict() for r in self.records],
            "fitted_slope": self.fitted_slope,
            "slope_stderr": self.slope_stderr,
            "intercept": self.intercept,
            "theorem_slope": self.theorem_slope,
            "slope_tolerance": self.slope_tolerance,
            "r_squared": self.r_squared,
            "verdict": self.verdict,
            "max_refinement_shift": self.max_refinement_shift,
            "note": self.note,
        }


def fit_power_law(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """OLS of y on x: (slope, stderr, intercept, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points to fit")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("degenerate fit: identical abscissae")
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)
    dof = x.size - 2
    stderr = math.sqrt(ss_res / dof / sxx) if dof > 0 else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return slope, stderr, intercept, r2


def _run_one_eps(plan: SweepPlan, eps: float) -> EpsRecord:
    params = plan.base.with_eps(eps)
    data = plan.data()
    C1 = estimate_C1(params.n, params.R, t_max=40.0)
    witness = bound_from_run(params, data, C1).T_blowup
    if math.isfinite(witness):
        t_final = WITNESS_HEADROOM * witness
        if plan.t_final_cap is not None:
            t_final = min(t_final, plan.t_final_cap)
    else:
        if plan.t_final_cap is None:
            raise ValueError(
                "the bound witness is infinite/huge; the plan must set t_final_cap"
            )
        t_final = plan.t_final_cap
    t_pred = min(witness, t_final) if math.isfinite(witness) else t_final
    dr = plan.policy_dr(t_pred)

    def run(dr_run: float, safety: float, t_fin: float):
        grid = RadialGrid.for_horizon(params.n, dr_run, t_fin, params.R)
        report, _ = run_until_blowup(
            params, data, grid, t_fin,
            threshold_factor=plan.threshold_factor,
            n_samples=plan.n_samples,
            dt_safety=safety,
            backend=plan.backend,
        )
        return report

    report = run(dr, plan.dt_safety, t_final)
    retries = 0
    while not report.blew_up and retries < 3:
        if plan.t_final_cap is not None and t_final >= plan.t_final_cap:
            break
        t_final *= 2.0
        if plan.t_final_cap is not None:
            t_final = min(t_final, plan.t_final_cap)
        report = run(dr, plan.dt_safety, t_final)
        retries += 1

    T = report.blow_up_time
    T_ref = None
    shift = None
    if plan.repeat_refined and report.blew_up:
        refined = run(dr / 2.0, plan.dt_safety / 2.0, t_final)
        if refined.blew_up:
            T_ref = refined.blow_up_time
            shift = abs(T_ref - T) / T
    return EpsRecord(
        eps=eps,
        T_numeric=T,
        T_refined=T_ref,
        refinement_shift=shift,
        T_bound_witness=witness,
        dr=dr,
        t_final=t_final,
        reason=report.reason,
        steps=report.steps,
        threshold_crossings=report.threshold_crossings,
    )


def _run_all(plan: SweepPlan) -> list[EpsRecord]:
    if plan.jobs == 1:
        records = [_run_one_eps(plan, e) for e in plan.eps_values]
    else:
        with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
            records = list(pool.map(lambda e: _run_one_eps(plan, e), plan.eps_values))
    return sorted(records, key=lambda r: -r.eps)


def run_sweep(plan: SweepPlan) -> SweepResult:
    """Subcritical sweep: fit log T against log eps and compare with the theorem."""
    regime = classify(plan.base)
    if regime.tag != SUBCRITICAL:
        raise ValueError(
            f"run_sweep needs subcritical parameters, got {regime.tag}; "
            "use run_critical_sweep for the critical case"
        )
    if len(plan.eps_values) < 5:
        raise ValueError("subcritical sweeps need at least 5 eps values")
    records = _run_all(plan)
    theorem_slope = theorem_exponent(plan.base)
    blew = [r for r in records if r.T_numeric is not None]
    if len(blew) < len(records):
        return SweepResult(
            kind="subcritical", records=records, fitted_slope=None, slope_stderr=None,
            intercept=None, theorem_slope=theorem_slope, slope_tolerance=plan.slope_tolerance,
            r_squared=None, verdict=VERDICT_INCONCLUSIVE, max_refinement_shift=None,
            note="some runs reached t_final without blow-up (budget too small)",
        )
    slope, stderr, intercept, r2 = fit_power_law(
        np.log([r.eps for r in blew]), np.log([r.T_numeric for r in blew])
    )
    shifts = [r.refinement_shift for r in blew if r.refinement_shift is not None]
    max_shift = max(shifts) if shifts else None
    ok_slope = abs(slope - theorem_slope) <= plan.slope_tolerance
    ok_shift = (max_shift is not None and max_shift < REFINEMENT_SHIFT_LIMIT) \
        if plan.repeat_refined else True
    verdict = VERDICT_PASS if (ok_slope and ok_shift) else VERDICT_FAIL
    return SweepResult(
        kind="subcritical", records=records, fitted_slope=slope, slope_stderr=stderr,
        intercept=intercept, theorem_slope=theorem_slope,
        slope_tolerance=plan.slope_tolerance, r_squared=r2, verdict=verdict,
        max_refinement_shift=max_shift,
    )


def run_critical_sweep(plan: SweepPlan) -> SweepResult:
    """Critical sweep: check log T ~ c eps^-(p-1) (form consistency only)."""
    regime = classify(plan.base)
    if regime.tag != CRITICAL:
        raise ValueError(f"run_critical_sweep needs critical parameters, got {regime.tag}")
    if len(plan.eps_values) < 4:
        raise ValueError("critical sweeps need at least 4 eps values")
    records = _run_all(plan)
    marker = theorem_exponent(plan.base)
    blew = [r for r in records if r.T_numeric is not None]
    note = ("form-consistency check only: the critical asymptotics "
            "T ~ exp(C eps^-(p-1)) are not reproducible at desk scale")
    if len(blew) < 4:
        return SweepResult(
            kind="critical", records=records, fitted_slope=None, slope_stderr=None,
            intercept=None, theorem_slope=None, slope_tolerance=plan.slope_tolerance,
            r_squared=None, verdict=VERDICT_INCONCLUSIVE, max_refinement_shift=None,
            note=note + "; fewer than 4 eps values blew up within budget",
        )
    x = np.array([r.eps ** (-marker.eps_power) for r in blew])
    y = np.log([r.T_numeric for r in blew])
    slope, stderr, intercept, r2 = fit_power_law(x, y)
    shifts = [r.refinement_shift for r in blew if r.refinement_shift is not None]
    max_shift = max(shifts) if shifts else None
    verdict = VERDICT_PASS if (slope > 0.0 and r2 >= 0.95) else VERDICT_FAIL
    return SweepResult(
        kind="critical", records=records, fitted_slope=slope, slope_stderr=stderr,
        intercept=intercept, theorem_slope=None, slope_tolerance=plan.slope_tolerance,
        r_squared=r2, verdict=verdict, max_refinement_shift=max_shift, note=note,
    )


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _svg_scaling_plot(result: SweepResult) -> str:
    """Deterministic log-log scatter with fitted and theorem guide lines."""
    blew = [r for r in result.records if r.T_numeric is not None]
    if result.kind == "subcritical":
        xs = [math.log10(r.eps) for r in blew]
        ys = [math.log10(r.T_numeric) for r in blew]
        xlabel, ylabel = "log10 eps", "log10 T"
    else:
        xs = [1.0 / r.eps for r in blew]
        ys = [math.log(r.T_numeric) for r in blew]
        xlabel, ylabel = "1/eps (fit uses eps^-(p-1))", "log T"
    w, h, pad = 640, 480, 60
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xspan = (x1 - x0) or 1.0
    yspan = (y1 - y0) or 1.0
    x0 -= 0.08 * xspan; x1 += 0.08 * xspan
    y0 -= 0.08 * yspan; y1 += 0.08 * yspan

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (w - 2 * pad)

    def sy(y):
        return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="{pad}" y="{pad}" width="{w - 2 * pad}" height="{h - 2 * pad}" '
        'fill="none" stroke="black"/>',
    ]
    if result.fitted_slope is not None and result.kind == "subcritical":
        xf = np.linspace(min(xs), max(xs), 2)
        ln10 = math.log(10.0)
        yf = [(result.intercept + result.fitted_slope * (x * ln10)) / ln10 for x in xf]
        parts.append(
            f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="'
            + " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xf, yf)) + '"/>'
        )
        if result.theorem_slope is not None:
            anchor = yf[0] - result.theorem_slope * xf[0]
            yg = [anchor + result.theorem_slope * x for x in xf]
            parts.append(
                f'<polyline fill="none" stroke="#d62728" stroke-width="1.5" '
                'stroke-dasharray="6,4" points="'
                + " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xf, yg)) + '"/>'
            )
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="4" fill="black"/>')
    caption = (
        f"fitted slope {_fmt(result.fitted_slope)}" if result.fitted_slope is not None
        else "no fit"
    )
    if result.theorem_slope is not None:
        caption += f", theorem {_fmt(result.theorem_slope)}"
    if result.r_squared is not None:
        caption += f", R^2 {_fmt(result.r_squared)}"
    parts.append(f'<text x="{pad}" y="{pad - 20}" font-size="14">{caption}</text>')
    parts.append(
        f'<text x="{w // 2}" y="{h - 15}" font-size="13" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{h // 2}" font-size="13" transform="rotate(-90 18 {h // 2})" '
        f'text-anchor="middle">{ylabel}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(result: SweepResult, out_dir, formats=("json", "csv", "svg")) -> list:
    """Write result.json / sweep.csv / scaling.svg under out_dir; deterministic bytes."""
    from pathlib import Path

    if not result.records:
        raise ValueError("cannot emit a report for an empty sweep result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "result.json"
        path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(path)
    if "csv" in formats:
        path = out / "sweep.csv"
        cols = ["eps", "T_numeric", "T_refined", "refinement_shift",
                "T_bound_witness", "dr", "t_final", "reason", "steps"]
        lines = [",".join(cols)]
        for r in result.records:
            d = r.to_dict()
            lines.append(",".join(
                ("" if d[c] is None else (repr(d[c]) if isinstance(d[c], float) else str(d[c])))
                for c in cols
            ))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "svg" in formats:
        blew = [r for r in result.records if r.T_numeric is not None]
        if blew:
            path = out / "scaling.svg"
            path.write_text(_svg_scaling_plot(result))
            written.append(path)
    return written
