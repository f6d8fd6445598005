import math

import numpy as np
import pytest

from wavelifespan import (
    DataProfile,
    ModelParams,
    RadialGrid,
    SpaceTimeBump,
    initial_state,
    make_bump_data,
    run_until_blowup,
    step,
    weak_residual,
)
from wavelifespan import _kernels
from wavelifespan.solver import default_cfl


def zero_data(a=1.0):
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return DataProfile(f=zero, g=zero, support_radius=a, amplitude_f=0.0, amplitude_g=0.0)


def bump_antiderivative(x):
    """int (1 - s^2)^3 ds on [-1, 1], clamped outside."""
    x = np.clip(x, -1.0, 1.0)
    return x - x ** 3 + 0.6 * x ** 5 - x ** 7 / 7.0


def dalembert_solution(r, t):
    """Even-reflected 1d solution for f = 0, g = (1-r^2)_+^3."""
    return 0.5 * (bump_antiderivative(r + t) - bump_antiderivative(r - t))


def test_grid_invariants():
    g = RadialGrid.for_horizon(1, 0.01, 2.0, 1.0)
    assert g.r_max >= 2.0 + 1.0 + 2 * g.dr
    assert g.nodes * g.dr == pytest.approx(g.r_max, rel=1e-15)
    with pytest.raises(ValueError):
        RadialGrid(n=1, dr=0.01, r_max=1.0, nodes=42)
    with pytest.raises(ValueError):
        g.check_horizon(t_final=10.0, R=1.0)


def test_zero_data_stays_zero():
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 0.5)
    grid = RadialGrid.for_horizon(1, 0.02, 1.0, 1.0)
    state = initial_state(params, zero_data(), grid)
    for _ in range(20):
        state = step(state, params, grid)
    assert np.all(state.u == 0.0) and np.all(state.v == 0.0)
    assert not state.blown_up

    report, _ = run_until_blowup(params, zero_data(), grid, 1.0, n_samples=10)
    assert report.reason == "t_final_reached"
    assert report.blow_up_time is None


def test_step_rejects_unstable_dt():
    params = ModelParams(1, 2.0, 0.0, 2.0)
    grid = RadialGrid.for_horizon(1, 0.02, 1.0, 1.0)
    state = initial_state(params, make_bump_data(1.0, 0.0, 1.0), grid)
    state.dt = 2.0 * grid.dr
    with pytest.raises(ValueError):
        step(state, params, grid)
    with pytest.raises(ValueError):
        run_until_blowup(params, make_bump_data(1.0, 0.0, 1.0), grid, 1.0, c_cfl=0.95)


def test_step_flags_blowup_instead_of_nan():
    params = ModelParams(1, 3.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 0.02, 1.0, 1.0)
    state = initial_state(params, make_bump_data(1.0, 0.0, 1.0), grid)
    state.v[:] = np.where(grid.r < 1.0, 1e160, 0.0)
    out = step(state, params, grid)
    assert out.blown_up
    assert not np.all(np.isfinite(out.v))  # flagged, not silently propagated


def test_linear_energy_conserved_per_step():
    # staggered leapfrog invariant: 0.5<w,w>_V + 0.5 a(u_m, u_{m+1}) is exact
    n = 1
    params = ModelParams(n, 2.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(n, 0.01, 3.0, 1.0)
    flux, inv_vol = grid.fv_geometry()
    vol = 1.0 / inv_vol
    data = make_bump_data(1.0, 1.0, 1.0)
    u = data.f(grid.r)
    w = 0.0 * u  # g = 0 mode: start from potential energy only
    u[-1] = 0.0

    def dirichlet_form(a, b):
        return float(np.sum(flux * (a[1:] - a[:-1]) * (b[1:] - b[:-1])) * grid.dr) / grid.dr

    dt = default_cfl(n) * grid.dr
    adv = _kernels.get_advance(None)
    t, dtp = 0.0, 0.0
    energies = []
    for m in range(500):
        u_prev = u.copy()
        t, dtp, status, *_ = adv(u, w, t, dtp, t + dt, params.p, 0.0, 2.0, params.R,
                                 grid.dr, default_cfl(n), 0.1, 1e-12, np.inf, np.inf,
                                 False, flux, inv_vol, 1, np.nan, np.nan)
        energies.append(0.5 * float(np.sum(vol * w * w)) + 0.5 * dirichlet_form(u_prev, u))
    e = np.array(energies)
    assert e[0] > 0.0
    drift_per_step = np.max(np.abs(np.diff(e))) / e[0]
    assert drift_per_step < 1e-6  # measured ~1e-16: exact up to rounding


@pytest.mark.parametrize("resolutions", [(100, 200, 400)])
def test_dalembert_convergence_second_order(resolutions):
    errors = []
    for m in resolutions:
        dr = 1.0 / m
        params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
        grid = RadialGrid.for_horizon(1, dr, 0.5, 1.0)
        report, trace = run_until_blowup(
            params, make_bump_data(1.0, 0.0, 1.0), grid, 0.5,
            source_on=False, n_samples=1, store_states=True,
        )
        assert report.reason == "t_final_reached"
        last = trace.states[-1]
        assert last.t == 0.5
        errors.append(float(np.max(np.abs(last.u - dalembert_solution(grid.r, 0.5)))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.8)
    assert errors[-1] < 5e-5


def test_support_containment_on_dalembert_run():
    params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 1.0 / 400.0, 0.5, 1.0)
    report, _ = run_until_blowup(
        params, make_bump_data(1.0, 0.0, 1.0), grid, 0.5,
        source_on=False, n_samples=50,
    )
    assert report.max_support_excess_dr <= 0.0


def test_blowup_and_refinement_stability():
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 1.0)
    data = make_bump_data(1.0, 0.0, 1.0)
    times = {}
    for dr, safety in ((0.005, 0.1), (0.0025, 0.05)):
        grid = RadialGrid.for_horizon(1, dr, 10.0, 1.0)
        report, _ = run_until_blowup(params, data, grid, 10.0, dt_safety=safety)
        assert report.reason == "amplitude_threshold"
        assert report.blow_up_time < 10.0
        assert report.max_ut_final >= 1e6 * params.eps
        times[dr] = report.blow_up_time
    assert abs(times[0.0025] - times[0.005]) / times[0.005] < 0.05


def test_blowup_time_monotone_in_eps():
    data = make_bump_data(1.0, 0.0, 1.0)
    previous = 0.0
    for eps in (1.0, 0.5, 0.25):
        params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, eps)
        grid = RadialGrid.for_horizon(1, 0.005, 40.0, 1.0)
        report, _ = run_until_blowup(params, data, grid, 40.0)
        assert report.blow_up_time is not None
        assert report.blow_up_time > previous
        previous = report.blow_up_time


def test_threshold_crossings_recorded():
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 0.5)
    grid = RadialGrid.for_horizon(1, 0.005, 20.0, 1.0)
    report, _ = run_until_blowup(params, make_bump_data(1.0, 0.0, 1.0), grid, 20.0)
    lo = report.threshold_crossings["10000*eps"]
    hi = report.threshold_crossings["1e+06*eps"]
    assert 0.0 < lo <= hi == report.blow_up_time


def test_determinism_bitwise():
    params = ModelParams(1, 1.5, 0.5, 1.0, 1.0, 0.3)
    data = make_bump_data(1.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 0.01, 15.0, 1.0)
    r1, t1 = run_until_blowup(params, data, grid, 15.0, n_samples=300)
    r2, t2 = run_until_blowup(params, data, grid, 15.0, n_samples=300)
    assert r1.to_dict() == r2.to_dict()
    assert np.array_equal(t1.F1, t2.F1)
    assert np.array_equal(t1.int_ut_psi, t2.int_ut_psi)
    assert np.array_equal(t1.int_src_psi, t2.int_src_psi)
    assert np.array_equal(t1.max_ut, t2.max_ut)


def test_numpy_backend_matches_numba():
    if not _kernels.USING_NUMBA:
        pytest.skip("numba disabled in this environment")
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 0.5)
    data = make_bump_data(1.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 0.01, 12.0, 1.0)
    ra, ta = run_until_blowup(params, data, grid, 12.0, n_samples=200, backend="numba")
    rb, tb = run_until_blowup(params, data, grid, 12.0, n_samples=200, backend="numpy")
    assert ra.blow_up_time == pytest.approx(rb.blow_up_time, rel=1e-9)
    assert np.allclose(ta.F1, tb.F1, rtol=1e-9, atol=1e-300)
    assert ra.steps == rb.steps


def test_weak_residual_zero_solution_and_disjoint_phi():
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 0.5)
    grid = RadialGrid.for_horizon(1, 0.01, 1.0, 1.0)
    _, trace = run_until_blowup(params, zero_data(), grid, 1.0,
                                n_samples=20, store_states=True)
    phi = SpaceTimeBump(r_scale=1.5)
    assert weak_residual(trace, phi, params, grid) == 0.0

    # phi supported away from supp u: every term vanishes identically
    params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 0.01, 1.0, 1.0, pad_nodes=200)
    _, trace = run_until_blowup(params, make_bump_data(1.0, 0.0, 1.0), grid, 1.0,
                                source_on=False, n_samples=20, store_states=True)
    off = SpaceTimeBump(r_scale=0.4, r_center=2.9)
    assert weak_residual(trace, off, params, grid) == 0.0


def test_weak_residual_linear_run_converges():
    residuals = []
    for m in (200, 400):
        dr = 1.0 / m
        params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
        grid = RadialGrid.for_horizon(1, dr, 1.0, 1.0)
        _, trace = run_until_blowup(
            params, make_bump_data(1.0, 1.0, 1.0), grid, 1.0,
            source_on=False, n_samples=400, store_states=True,
        )
        phi = SpaceTimeBump(r_scale=grid.r_max - 5.0 * dr)
        residuals.append(weak_residual(trace, phi, params, grid))
    assert residuals[0] < 1e-3
    assert residuals[1] < residuals[0] / 1.7  # first order or better

    # time-localized phi exercises the phi_t term as well
    dr = 1.0 / 200
    params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, dr, 1.0, 1.0)
    _, trace = run_until_blowup(
        params, make_bump_data(1.0, 1.0, 1.0), grid, 1.0,
        source_on=False, n_samples=400, store_states=True,
    )
    phi = SpaceTimeBump(r_scale=grid.r_max - 5.0 * dr, t_center=0.5, t_halfwidth=0.8)
    assert weak_residual(trace, phi, params, grid) < 2e-3


def test_weak_residual_nonlinear_damped_run():
    dr = 1.0 / 200
    params = ModelParams(1, 2.0, 1.0, 2.0, 1.0, 0.5)
    grid = RadialGrid.for_horizon(1, dr, 1.0, 1.0)
    _, trace = run_until_blowup(
        params, make_bump_data(1.0, 1.0, 1.0), grid, 1.0,
        n_samples=400, store_states=True,
    )
    phi = SpaceTimeBump(r_scale=grid.r_max - 5.0 * dr)
    assert weak_residual(trace, phi, params, grid) < 2e-3


def test_weak_residual_rejects_boundary_support():
    params = ModelParams(1, 2.0, 0.0, 2.0, 1.0, 1.0)
    grid = RadialGrid.for_horizon(1, 0.01, 1.0, 1.0)
    _, trace = run_until_blowup(params, make_bump_data(1.0, 0.0, 1.0), grid, 1.0,
                                source_on=False, n_samples=10, store_states=True)
    with pytest.raises(ValueError):
        weak_residual(trace, SpaceTimeBump(r_scale=grid.r_max), params, grid)
    with pytest.raises(ValueError):
        weak_residual(trace, SpaceTimeBump(r_scale=1.0, r_center=0.5), params, grid)
