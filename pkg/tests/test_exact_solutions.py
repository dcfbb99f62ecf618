import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatsym.errors import DomainError
from heatsym.exact_solutions import (Branch, KernelSolution, SuperposedKernels, kernel_mesh,
                                     kernel_value, preimage_time_levels, reduced_Y3_residuals,
                                     solve_Y3, superposition_trajectories,
                                     superposition_trajectory_rhs, uniform_Y3_solution)
from heatsym.model_catalog import lookup, optimal_system, parse_key
from heatsym.symmetry import flow_point

K1 = KernelSolution(1.0, 1.0)


def test_kernel_values():
    assert kernel_value(K1, 0.0, 0.0) == 1.0
    assert kernel_value(K1, 1.0, 2.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2), rel=1e-15)
    assert kernel_value(K1, 1.0, 2.0) == pytest.approx(0.4288819, abs=1e-7)


@given(st.floats(0, 5), st.floats(-10, 10))
def test_kernel_symmetric(t, x):
    assert kernel_value(K1, t, x) == kernel_value(K1, t, -x)


def test_kernel_domain():
    with pytest.raises(DomainError):
        kernel_value(K1, -1.0, 0.0)
    with pytest.raises(DomainError):
        KernelSolution(0.0, 1.0)


def test_kernel_mesh():
    x0 = np.linspace(-1, 1, 5)
    assert np.array_equal(kernel_mesh(K1, x0, 0.0), x0)
    assert np.allclose(kernel_mesh(K1, x0, 1.0), 2 * x0)
    assert kernel_mesh(K1, 0.3, 0.5) == pytest.approx(0.45, rel=1e-15)
    shifted = KernelSolution(1.0, 1.0, a=2.0)
    assert kernel_mesh(shifted, 3.0, 1.0) == pytest.approx(4.0)


def test_kernel_solves_heat_equation(rng):
    k = KernelSolution(1.3, 0.7, a=0.4)
    t, x = rng.uniform(0.1, 2.0, 20), rng.uniform(-3, 3, 20)
    e = 1e-3
    u = lambda tt, xx: kernel_value(k, tt, xx)
    # fourth-order central differences
    ut = (-u(t + 2 * e, x) + 8 * u(t + e, x) - 8 * u(t - e, x) + u(t - 2 * e, x)) / (12 * e)
    uxx = (-u(t, x + 2 * e) + 16 * u(t, x + e) - 30 * u(t, x) + 16 * u(t, x - e)
           - u(t, x - 2 * e)) / (12 * e * e)
    assert np.max(np.abs(ut - uxx)) < 1e-6


def test_constant_layers_flow_onto_kernel():
    # the projective operator with parameter 1/(4 t0) carries the constant
    # solution on the pre-image levels to the kernel on its dilating mesh
    t0, tau, C = 2.0, 0.1, 1.5
    x5 = {g.label: g for g in lookup(parse_key("K=1,Q=0")).generators}["X5"]
    k = KernelSolution(C, t0)
    x0 = np.linspace(-3, 3, 7)
    for j, tj in enumerate(preimage_time_levels(tau, t0, 8)):
        for x in x0:
            tb, xb, ub = flow_point(x5, 1 / (4 * t0), (tj, x, C))
            assert tb == pytest.approx(j * tau, abs=1e-12)
            assert xb == pytest.approx(kernel_mesh(k, x, j * tau), abs=1e-12)
            assert ub == pytest.approx(kernel_value(k, j * tau, xb), rel=1e-11)


# --------------------------------------------------------- superposition

SP = SuperposedKernels(1.0, 1.0, 10.0, 10.0, -8.0, 8.0)


def test_single_kernel_velocity():
    sp = SuperposedKernels(1.0, 0.0, 3.0, 5.0, 1.0, -2.0)
    for t, x in ((0.0, 2.0), (1.5, -1.0)):
        assert superposition_trajectory_rhs(sp, t, x) == pytest.approx((x - 1.0) / (t + 3.0))


def test_odd_symmetry():
    assert abs(superposition_trajectory_rhs(SP, 0.7, 0.0)) < 1e-15


def test_velocity_matches_log_derivative():
    x, t, e = 4.0, 0.0, 1e-4
    v = superposition_trajectory_rhs(SP, t, x)
    lnU = lambda xx: math.log(SP.value(t, xx))
    fd = -2 * (lnU(x + e) - lnU(x - e)) / (2 * e)
    assert v == pytest.approx(fd, abs=1e-8)


@given(st.floats(0, 5), st.floats(-15, 15))
def test_velocity_log_derivative_property(t, x):
    w1, w2 = SP.parts(t, x)
    ux = -w1 * (x + 8) / (2 * (t + 10)) - w2 * (x - 8) / (2 * (t + 10))
    assert superposition_trajectory_rhs(SP, t, x) == pytest.approx(-2 * ux / (w1 + w2),
                                                                   rel=1e-12, abs=1e-12)


def test_trajectories_reduce_to_straight_lines():
    sp = SuperposedKernels(1.0, 0.0, 2.0, 2.0, 1.0, 0.0)
    X = superposition_trajectories(sp, [-1.0, 3.0], [0.0, 1.0, 2.0])
    assert np.allclose(X[:, 0], 1 + (-2.0) * (np.array([0, 1, 2]) + 2) / 2, rtol=1e-9)


def test_superposition_validation():
    with pytest.raises(DomainError):
        SuperposedKernels(0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        SuperposedKernels(1.0, -1.0, 1.0, 1.0, 0.0, 0.0)


# --------------------------------------------------------- reduced system

def test_reduced_constant_zero_branch():
    assert reduced_Y3_residuals([0, 1, 2], [1.0, 1.0, 1.0], 0.0, 0.1, "Zero") == (0.0, 0.0)


def test_reduced_forced_algebra():
    c, tau = 1.0, 0.1
    r1, r2 = reduced_Y3_residuals([0, 1, 2], [2.0, 2.0, 2.0], c, tau, Branch.ZERO)
    assert r1 == 0.0
    assert r2 == pytest.approx(math.exp(-2 * c * tau) - 1, rel=1e-14)


@pytest.mark.parametrize("branch", ["PlusHPlus", "MinusHMinus"])
def test_reduced_nonlinear_solve(branch):
    x, f = solve_Y3(1.0, 0.9, 0.1, 1.0, 0.05, branch, 8)
    r1, r2 = reduced_Y3_residuals(x, f, 1.0, 0.05, branch)
    assert np.max(np.abs(r1)) < 1e-10 and np.max(np.abs(r2)) < 1e-10
    assert np.all(np.diff(x) > 0)


@pytest.mark.parametrize("branch", ["PlusHPlus", "MinusHMinus"])
def test_uniform_closed_form(branch):
    x, f = uniform_Y3_solution(1.0, 0.05, 9, branch)
    assert np.ptp(np.diff(x)) < 1e-14
    r = reduced_Y3_residuals(x, f, 1.0, 0.05, branch)
    assert max(np.max(np.abs(r[0])), np.max(np.abs(r[1]))) < 1e-12


@pytest.mark.parametrize("branch", ["PlusHPlus", "MinusHMinus"])
def test_march_from_uniform_seed_stays_uniform(branch):
    xu, fu = uniform_Y3_solution(1.0, 0.05, 8, "PlusHPlus")
    x, f = solve_Y3(fu[0], fu[1], xu[1], 1.0, 0.05, branch, 8)
    # the minus branch is the mirror image: f = exp(-|x|) on a uniform grid
    assert np.ptp(np.diff(x)) < 1e-9
    assert np.allclose(f, np.exp(-np.abs(x)), rtol=1e-9)


def test_reduced_errors():
    with pytest.raises(DomainError):
        reduced_Y3_residuals([0, 1, 2], [1.0, -1.0, 1.0], 1.0, 0.1, "Zero")
    with pytest.raises(DomainError):
        solve_Y3(1.0, 0.9, 0.5, 1.0, 0.05, "Zero", 5)
    with pytest.raises(DomainError):
        uniform_Y3_solution(-1.0, 0.05, 5)
    with pytest.raises(ValueError):
        reduced_Y3_residuals([0, 1, 2], [1.0, 1.0, 1.0], 1.0, 0.1, "Sideways")


def test_optimal_system_facts():
    ys = {g.label: g for g in optimal_system(0.0)}
    # Y1: translation in x leaves the constant solution and an orthogonal mesh alone
    assert flow_point(ys["Y1"], 0.3, (1.0, 0.0, 2.0)) == pytest.approx((1.0, 0.3, 2.0))
    # Y2 only rescales u, so no nonzero solution is invariant under it
    assert flow_point(ys["Y2"], 0.3, (1.0, 0.0, 2.0))[2] == pytest.approx(2 * math.exp(0.3))
