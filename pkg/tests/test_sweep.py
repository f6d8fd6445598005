import json
import math

import numpy as np
import pytest

from wavelifespan import ModelParams, SweepPlan, emit_report, fit_power_law
from wavelifespan.sweep import run_critical_sweep, run_sweep


FAST_EPS = (0.8, 0.566, 0.4, 0.283, 0.2)


def fast_plan(**kw):
    defaults = dict(
        base=ModelParams(1, 2.0, 1.0, 2.0, 1.0, 1.0),
        eps_values=FAST_EPS,
        n_samples=400,
    )
    defaults.update(kw)
    return SweepPlan(**defaults)


def test_fit_power_law_exact_on_synthetic():
    eps = np.geomspace(2.0, 0.01, 9)
    for s in (-1.0, -2.0 / 3.0, 0.7):
        slope, stderr, intercept, r2 = fit_power_law(np.log(eps), np.log(eps ** s))
        assert abs(slope - s) <= 1e-12
        assert stderr <= 1e-12
        assert r2 == pytest.approx(1.0, abs=1e-12)
        # relabeling eps -> c*eps shifts the intercept only
        slope2, _, _, _ = fit_power_law(np.log(3.7 * eps), np.log(eps ** s))
        assert abs(slope2 - slope) <= 1e-12


def test_fit_power_law_guards():
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0]), np.array([2.0]))
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 1.0]), np.array([2.0, 3.0]))


def test_plan_validation():
    with pytest.raises(ValueError):
        fast_plan(eps_values=(0.4,))
    with pytest.raises(ValueError):
        fast_plan(eps_values=(0.4, 0.4, 0.2, 0.1, 0.05))
    with pytest.raises(ValueError):
        fast_plan(eps_values=(0.1, 0.2, 0.3, 0.4, 0.5))
    with pytest.raises(ValueError):
        fast_plan(jobs=0)
    with pytest.raises(ValueError):
        run_sweep(fast_plan(eps_values=FAST_EPS[:4]))  # subcritical needs >= 5


def test_run_sweep_smoke():
    res = run_sweep(fast_plan())
    assert res.verdict == "pass"
    assert res.theorem_slope == -1.0
    assert abs(res.fitted_slope - res.theorem_slope) <= 0.3
    eps = [r.eps for r in res.records]
    assert eps == sorted(eps, reverse=True)
    T = [r.T_numeric for r in res.records]
    assert all(b > a for a, b in zip(T, T[1:]))  # T grows as eps shrinks
    assert all(r.refinement_shift is not None and r.refinement_shift < 0.05
               for r in res.records)
    assert all(r.T_numeric <= r.T_bound_witness for r in res.records)


def test_sweep_mismatched_regime_rejected():
    crit = fast_plan(base=ModelParams(2, 3.0, 1.0, 2.0, 1.0, 1.0),
                     eps_values=(0.22, 0.2, 0.19, 0.18), amplitude_g=10.0,
                     t_final_cap=12.0)
    with pytest.raises(ValueError):
        run_sweep(crit)
    with pytest.raises(ValueError):
        run_critical_sweep(fast_plan())


def test_serial_equals_parallel():
    a = run_sweep(fast_plan(jobs=1, repeat_refined=False))
    b = run_sweep(fast_plan(jobs=4, repeat_refined=False))
    assert a.to_dict() == b.to_dict()


def test_budget_exhaustion_is_inconclusive():
    res = run_sweep(fast_plan(t_final_cap=0.5, repeat_refined=False))
    assert res.verdict == "inconclusive"
    assert res.fitted_slope is None
    assert any(r.reason == "t_final_reached" for r in res.records)


def test_critical_sweep_smoke():
    plan = fast_plan(base=ModelParams(2, 3.0, 1.0, 2.0, 1.0, 1.0),
                     eps_values=(0.22, 0.2, 0.19, 0.18), amplitude_g=10.0,
                     t_final_cap=12.0, dr_override=0.004)
    res = run_critical_sweep(plan)
    assert res.kind == "critical"
    assert res.verdict == "pass"
    assert res.fitted_slope > 0.0
    assert res.r_squared >= 0.95
    assert "form-consistency" in res.note


def test_critical_feasibility_gate():
    # with a tiny budget nothing blows up: inconclusive, not an error
    plan = fast_plan(base=ModelParams(2, 3.0, 1.0, 2.0, 1.0, 1.0),
                     eps_values=(0.22, 0.2, 0.19, 0.18), amplitude_g=1.0,
                     t_final_cap=1.0, repeat_refined=False)
    res = run_critical_sweep(plan)
    assert res.verdict == "inconclusive"


def test_emit_report_roundtrip(tmp_path):
    res = run_sweep(fast_plan(repeat_refined=False))
    files = emit_report(res, tmp_path)
    names = {f.name for f in files}
    assert names == {"result.json", "sweep.csv", "scaling.svg"}
    payload = json.loads((tmp_path / "result.json").read_text())
    assert payload == json.loads(json.dumps(res.to_dict()))
    csv_lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(csv_lines) == 1 + len(res.records)
    assert csv_lines[0].startswith("eps,T_numeric")
    svg = (tmp_path / "scaling.svg").read_text()
    assert svg.startswith("<svg") and "fitted slope" in svg
    # deterministic bytes
    emit_report(res, tmp_path / "again")
    assert (tmp_path / "result.json").read_bytes() == (tmp_path / "again" / "result.json").read_bytes()
    assert (tmp_path / "scaling.svg").read_bytes() == (tmp_path / "again" / "scaling.svg").read_bytes()


def test_emit_report_rejects_empty(tmp_path):
    res = run_sweep(fast_plan(repeat_refined=False))
    res.records = []
    with pytest.raises(ValueError):
        emit_report(res, tmp_path)


def test_witness_requires_cap_when_infinite():
    # critical parameters make the closed-form witness overflow to inf
    plan = fast_plan(base=ModelParams(2, 3.0, 1.0, 2.0, 1.0, 1.0),
                     eps_values=(0.22, 0.2, 0.19, 0.18), amplitude_g=10.0,
                     t_final_cap=None)
    with pytest.raises(ValueError):
        run_critical_sweep(plan)
