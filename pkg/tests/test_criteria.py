import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from radial_epdiff.criteria import (
    comparison_check,
    comparison_constant,
    comparison_trajectory,
    psi,
    psi_identity_residual,
    psi_tilde,
    psi_tilde_closed,
    q_along,
    q_canonical,
    verify_conditions,
)
from radial_epdiff.kernels import RadialGrid, kernel_spec, phi
from radial_epdiff.solver import SolverConfig, gaussian_odd, integrate

VALID = [(k, n) for n in range(1, 13) for k in range(1, 6) if 2 * k < n + 2]


@pytest.fixture(scope="module")
def run_5_2():
    grid = RadialGrid.uniform(512, 8.0)
    data = gaussian_odd(grid, 5)
    spec = kernel_spec(2, 5)
    traj, report = integrate(data, spec, SolverConfig(dt=0.3, t_max=200.0))
    return data, spec, traj, report


def test_q_examples():
    for n in (3, 5, 8):
        r = np.array([0.0, 0.5, 2.0])
        assert np.allclose(q_canonical(kernel_spec(1, n), r), n * r ** (n - 1))
    assert q_canonical(kernel_spec(2, 5), 1.7) == pytest.approx(30 * 1.7**2, rel=1e-14)
    for k, n in VALID:
        spec = kernel_spec(k, n)
        assert q_canonical(spec, 1.0) == pytest.approx(1 / spec.norm, rel=1e-14)
        assert q_canonical(spec, 2.3) == pytest.approx(1 / (2.3 * phi(spec, 0.0, 2.3)), rel=1e-13)
    # n + 1 - 2k = 0: Q(0) is the limit 1/C
    spec = kernel_spec(2, 3)
    assert q_canonical(spec, 0.0) == pytest.approx(1 / spec.norm)
    with pytest.raises(ValueError):
        q_canonical(kernel_spec(1, 3), -1.0)


def test_q_along_identity_is_one():
    grid = RadialGrid.uniform(64, 4.0)
    for k, n in [(1, 3), (2, 5), (2, 3)]:
        q = q_along(kernel_spec(k, n), grid, grid.nodes, np.ones(grid.size))
        assert np.allclose(q, 1.0, rtol=1e-14)


def test_psi_k1_vanishes():
    # phi_1 does not depend on its first slot, so only the p = 0 term survives and it cancels
    for n in (3, 7):
        assert psi(kernel_spec(1, n), 0.3, 1.2) == 0.0
        assert psi_tilde(kernel_spec(1, n), 0.3, 1.2) == pytest.approx(1.2 ** (-n), rel=1e-14)


def test_psi_2_5_nonnegative():
    assert psi(kernel_spec(2, 5), 0.5, 1.0) > 0


def test_psi_against_finite_difference_definition():
    spec = kernel_spec(3, 9)
    s, r, h = 0.4, 1.1, 1e-6
    dphi = (phi(spec, s, r + h) - phi(spec, s, r - h)) / (2 * h)
    direct = (spec.n + 2 - 2 * spec.k) * phi(spec, s, r) + r * dphi
    assert psi(spec, s, r) == pytest.approx(direct, rel=1e-7)
    r2, s2 = 0.4, 1.1
    dphi1 = (phi(spec, r2 + h, s2) - phi(spec, r2 - h, s2)) / (2 * h)
    direct = (spec.n + 2 - 2 * spec.k) * phi(spec, r2, s2) + r2 * dphi1
    assert psi_tilde(spec, r2, s2) == pytest.approx(direct, rel=1e-7)


def test_psi_domains():
    spec = kernel_spec(2, 5)
    with pytest.raises(ValueError):
        psi(spec, 1.0, 1.0)
    with pytest.raises(ValueError):
        psi_tilde(spec, 1.2, 1.0)
    with pytest.raises(ValueError):
        psi_tilde(spec, 0.0, 1.0)


@pytest.mark.parametrize("k,n", VALID)
def test_psi_tilde_closed_form(k, n):
    rng = np.random.default_rng(7 * k + n)
    s = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), 100))
    r = s * rng.uniform(0.01, 1.0, 100)
    spec = kernel_spec(k, n)
    assert np.allclose(psi_tilde(spec, r, s), psi_tilde_closed(spec, r, s), rtol=1e-12, atol=0)


@pytest.mark.parametrize("k,n", VALID)
def test_psi_identity(k, n):
    rng = np.random.default_rng(11 * k + n)
    r = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), 100))
    s = r * rng.uniform(0.0, 0.999, 100)
    assert np.max(psi_identity_residual(kernel_spec(k, n), s, r)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(k_n=st.sampled_from(VALID), r=st.floats(1e-2, 1e2), frac=st.floats(0.0, 0.99))
def test_homogeneity(k_n, r, frac):
    k, n = k_n
    spec = kernel_spec(k, n)
    s = frac * r
    deg = -2 * spec.b
    a, b = psi(spec, s, r), psi(spec, 10 * s, 10 * r)
    assert b == pytest.approx(10**deg * a, rel=1e-12, abs=1e-300)
    a, b = psi_tilde(spec, s + 1e-3, r), psi_tilde(spec, 10 * (s + 1e-3), 10 * r)
    assert b == pytest.approx(10**deg * a, rel=1e-12)


def test_comparison_constant_k1_is_one():
    for n in range(1, 13):
        assert comparison_constant(kernel_spec(1, n)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 8, 12])
def test_comparison_constant_k2_closed_form(n):
    # 2b C F(-1, b+1; c; 1) = (n-2) / (2n(n-2)) * 2/(n+2) = 1/(n(n+2))
    assert comparison_constant(kernel_spec(2, n)) == pytest.approx(1 / (n * (n + 2)), rel=1e-13)


@pytest.mark.parametrize("k,n", [(2, 5), (3, 7), (4, 10), (5, 12)])
def test_comparison_constant_is_infimum(k, n):
    spec = kernel_spec(k, n)
    best = minimize_scalar(lambda x: psi_tilde(spec, x, 1.0), bounds=(1e-6, 1.0), method="bounded",
                           options={"xatol": 1e-12})
    c_est = comparison_constant(spec)
    # the minimiser sits at the endpoint r = s, which the bounded search only approaches
    assert best.fun == pytest.approx(c_est, rel=1e-6)
    assert best.fun >= c_est - 1e-15
    assert psi_tilde(spec, 1.0, 1.0) == pytest.approx(c_est, rel=1e-13)


@pytest.mark.parametrize("k,n", VALID)
def test_verify_conditions_passes(k, n):
    report = verify_conditions(kernel_spec(k, n), 300)
    assert report.passed
    assert report.min_scaled_psi_tilde >= report.C_est - 1e-10
    assert report.min_psi >= 0 or k == 1


def test_verify_conditions_k1_values():
    report = verify_conditions(kernel_spec(1, 9), 200)
    assert report.min_psi == 0.0
    assert report.min_scaled_psi_tilde == pytest.approx(1.0, rel=1e-13)
    assert report.C_est == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(ValueError):
        verify_conditions(kernel_spec(1, 9), 50)


def test_comparison_trajectory_trivial():
    grid = RadialGrid.uniform(64, 8.0)
    comp = comparison_trajectory(gaussian_odd(grid, 5, 0.0), kernel_spec(2, 5), np.linspace(0, 10, 11))
    assert np.all(comp.q == 1.0)
    assert math.isinf(comp.zero_time)
    with pytest.raises(ValueError):
        comparison_trajectory(gaussian_odd(grid, 5), kernel_spec(2, 5), np.array([1.0, 2.0]))


def test_comparison_trajectory_monotone():
    grid = RadialGrid.uniform(256, 8.0)
    comp = comparison_trajectory(gaussian_odd(grid, 5), kernel_spec(2, 5), np.linspace(0, 200, 41))
    q = comp.q
    assert np.all(np.diff(q, axis=0) <= 0)
    assert np.all(np.diff(q, axis=1) >= -1e-15)


def test_comparison_trajectory_reaches_zero():
    grid = RadialGrid.uniform(256, 8.0)
    # k = 1: the rate is |u_r|-sized, so the Liouville solution dies in finite time
    comp = comparison_trajectory(gaussian_odd(grid, 3, amplitude=20.0), kernel_spec(1, 3), np.linspace(0, 50, 51))
    assert math.isfinite(comp.zero_time)
    assert np.all(comp.q[comp.times > comp.zero_time] == 0.0)


def test_comparison_check_along_blowup(run_5_2):
    data, spec, traj, report = run_5_2
    comp = comparison_trajectory(data, spec, traj.times)
    chk = comparison_check(traj, comp, spec)
    assert np.allclose(chk.q[0], 1.0) and np.allclose(comp.q[0], 1.0)
    assert chk.passed and chk.max_violation <= 1e-2
    assert chk.q_min_decreasing
    assert report.T_est <= comp.zero_time


def test_comparison_check_grid_mismatch(run_5_2):
    data, spec, traj, _ = run_5_2
    comp = comparison_trajectory(data, spec, traj.times[:5])
    with pytest.raises(ValueError):
        comparison_check(traj, comp, spec)
