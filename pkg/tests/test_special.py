import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ive

from wavelifespan import (
    Phi1Evaluator,
    check_psi_identities,
    estimate_C1,
    phi1,
    phi1_scaled,
    phi1_sphere_quadrature,
    psi,
    psi_ball_ratio,
)
from wavelifespan.special import OVERFLOW_RADIUS, data_phi1_integral
from wavelifespan.model import make_bump_data, surface_measure


def test_phi1_one_dimensional():
    r = np.linspace(0.0, 30.0, 200)
    assert phi1(0.0, 1) == 2.0
    assert np.allclose(phi1(r, 1), np.exp(r) + np.exp(-r), rtol=1e-14)


def test_phi1_at_origin_is_sphere_area():
    for n in (2, 3, 4, 5):
        assert phi1(0.0, n) == pytest.approx(surface_measure(n), rel=1e-14)


def test_phi1_n3_closed_form():
    # oracle: 2 pi int_0^pi e^(2 cos th) sin th dth = 2 pi sinh(2); frozen value
    oracle, err = quad(lambda th: math.exp(2.0 * math.cos(th)) * math.sin(th), 0.0, math.pi)
    assert err < 1e-7
    assert oracle == pytest.approx(math.sinh(2.0), rel=1e-12)
    expected = surface_measure(2) * oracle
    assert expected == pytest.approx(22.788236025775753, rel=1e-12)
    assert phi1(2.0, 3) == pytest.approx(expected, rel=1e-12)
    r = np.linspace(0.01, 40.0, 113)
    assert np.allclose(phi1(r, 3), 4.0 * math.pi * np.sinh(r) / r, rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_phi1_routes_agree(n):
    r = np.linspace(0.0, 50.0, 501)  # straddles the series/asymptotic crossover
    a = phi1(r, n)
    b = phi1_sphere_quadrature(r, n)
    assert np.max(np.abs(a - b) / b) < 1e-8
    # third opinion: scaled Bessel identity via scipy
    nu = n / 2.0 - 1.0
    ref = (2.0 * math.pi) ** (n / 2.0) * np.where(r > 0, r, 1.0) ** (1.0 - n / 2.0) * ive(nu, r)
    ref[r == 0.0] = surface_measure(n)
    assert np.max(np.abs(phi1_scaled(r, n) - ref) / ref) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_phi1_strictly_increasing(n):
    r = np.linspace(0.0, 60.0, 1200)
    assert np.all(np.diff(phi1_scaled(r, n) * np.exp(r)) > 0.0)


def test_phi1_rejects_bad_input():
    with pytest.raises(ValueError):
        phi1(-1.0, 3)
    with pytest.raises(ValueError):
        phi1(OVERFLOW_RADIUS + 1.0, 3)
    # the scaled form stays finite far beyond the overflow radius
    assert np.isfinite(phi1_scaled(5000.0, 3))


def test_phi1_evaluator_dispatch():
    ev = Phi1Evaluator(n=3, method="sphere_quadrature", quadrature_order=120)
    assert ev(2.0) == pytest.approx(phi1(2.0, 3), rel=1e-10)
    with pytest.raises(ValueError):
        Phi1Evaluator(n=1, method="bessel_series")
    with pytest.raises(ValueError):
        Phi1Evaluator(n=3, method="closed_form_1d")


def test_psi_values_and_semigroup():
    assert psi(0.0, 0.0, 1) == 2.0
    assert psi(0.0, math.log(2.0), 1) == pytest.approx(1.0, rel=1e-15)
    assert psi(1.0, 1.0, 2) == pytest.approx(math.exp(-1.0) * phi1(1.0, 2), rel=1e-15)
    for r in (0.0, 0.7, 3.0):
        for t, s in ((0.0, 1.3), (2.0, 0.25)):
            lhs = psi(r, t + s, 3)
            rhs = math.exp(-s) * psi(r, t, 3)
            assert lhs == pytest.approx(rhs, rel=5e-15)
    with pytest.raises(ValueError):
        psi(1.0, -0.5, 2)


def test_psi_identity_residual_1d_and_3d():
    grid = np.linspace(0.1, 10.0, 80)
    # 1d: phi1'' = phi1 exactly, residual is pure stencil error, second order
    r1 = check_psi_identities(1, grid, 1e-2)
    r2 = check_psi_identities(1, grid, 5e-3)
    assert r1 < 1e-4
    assert r1 / r2 == pytest.approx(4.0, rel=0.2)
    assert check_psi_identities(3, grid, 1e-3) < 1e-5
    r1 = check_psi_identities(3, grid, 2e-3)
    r2 = check_psi_identities(3, grid, 1e-3)
    assert r1 / r2 == pytest.approx(4.0, rel=0.2)


def test_psi_identity_residual_includes_origin():
    grid = np.linspace(0.0, 5.0, 21)
    assert check_psi_identities(4, grid, 1e-3) < 1e-4
    with pytest.raises(ValueError):
        check_psi_identities(3, grid, -1.0)
    with pytest.raises(ValueError):
        check_psi_identities(3, grid[::-1], 1e-3)


def test_c1_estimate_1d_against_symbolic_limit():
    # int_{|x|<=t+1} psi dx = 2 e^-t (e^(t+1) - e^-(t+1)) -> 2e
    est = estimate_C1(1, 1.0, t_max=30.0)
    limit = 2.0 * math.e
    assert est.sup_q <= limit * (1.0 + 1e-12)
    assert est.sup_q == pytest.approx(limit, rel=1e-8)
    assert est.value == pytest.approx(1.05 * est.sup_q, rel=1e-15)
    q30 = psi_ball_ratio(1, 1.0, 30.0)
    exact = 2.0 * (math.e - math.exp(-61.0))
    assert q30 == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_c1_estimate_envelopes_sampled_ratio(n):
    est = estimate_C1(n, 1.0, t_max=25.0, samples=60)
    ts = np.linspace(0.0, 25.0, 60)
    qs = np.array([psi_ball_ratio(n, 1.0, t) for t in ts])
    assert np.all(qs > 0.0)
    assert est.value >= qs.max()
    assert est.sup_q == pytest.approx(qs.max(), rel=1e-12)


def test_c1_estimate_reproducible_and_guards():
    a = estimate_C1(2, 1.5, t_max=30.0)
    b = estimate_C1(2, 1.5, t_max=30.0)
    assert a == b  # bit-identical dataclasses
    with pytest.raises(ValueError):
        estimate_C1(1, 1.0, t_max=0.5)  # q still climbing fast: bound not saturated
    with pytest.raises(ValueError):
        estimate_C1(1, 1.0, t_max=10.0, samples=1)


def test_data_phi1_integral_matches_adaptive_quadrature():
    data = make_bump_data(1.0, 0.7, 1.3)
    for n in (1, 2, 3):
        got = data_phi1_integral(data.g, 1.0, n)
        oracle, err = quad(
            lambda rho: 1.3 * (1.0 - rho * rho) ** 3 * phi1(rho, n) * rho ** (n - 1),
            0.0, 1.0, epsabs=1e-13, epsrel=1e-13,
        )
        assert err < 1e-10
        assert got == pytest.approx(surface_measure(n) * oracle, rel=1e-12)
