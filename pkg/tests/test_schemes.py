import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatsym.audit import CATALOG_CONFIGS
from heatsym.errors import DomainError, MissingMassGrid, StabilityBreach, UnknownCase
from heatsym.exact_solutions import KernelSolution, kernel_mesh, kernel_value
from heatsym.meshes import Layer, init_mass_mesh, log_time_meth22, log_time_meth32, uniform_time
from heatsym.model_catalog import lookup, parse_key
from heatsym.schemes import (GEOMETRY, LOG32, MASS, MeshClass, SchemeId, SchemeParams,
                             explicit_update, mesh_residual, residual, run, sample_stencils,
                             scheme_defect, step)
from heatsym.stencil import Stencil, from_layers, orthogonal

IMPLICIT = {"SH54I"}


def initial_layer(sid, p):
    prof = lambda x: 1.0 + 0.5 * np.exp(-x ** 2)
    if sid == "SH31N":
        return init_mass_mesh(prof, -2.0, 0.1, 31)
    if GEOMETRY[SchemeId(sid)] is MeshClass.ORTHOGONAL_NONUNIFORM_SPACE:
        x = np.sinh(np.linspace(-1.0, 1.0, 21))
    else:
        x = np.linspace(-2.0, 2.0, 21)
    if sid in ("TS5G", "TS5U"):
        return Layer(0.0, x, prof(x), s=x - x[0], rho=np.ones_like(x))
    return Layer(0.0, x, prof(x))


def time_levels(sid, p, layer, steps=10):
    h = float(np.min(np.diff(layer.x)))
    T = 0.1 * h * h * steps
    m = p.model
    if sid in ("SH22", "SH24"):
        return log_time_meth22(m.delta, T, steps)
    if sid in {s.value for s in LOG32}:
        return log_time_meth32(m.delta, m.sigma_eff, T, steps)
    return uniform_time(T, steps)


def scheme_configs():
    for key, mp, extra in CATALOG_CONFIGS:
        m = parse_key(key, **mp)
        p = SchemeParams(model=m, **extra)
        for sid in lookup(m).schemes:
            yield pytest.param(sid, p, id=f"{sid}-{key}-{mp}-{sorted(k for k in extra)}")


@pytest.mark.parametrize("sid,p", list(scheme_configs()))
def test_stepped_layers_solve_scheme(sid, p):
    lay = initial_layer(sid, p)
    layers = run(sid, p, lay, time_levels(sid, p, lay))
    tol = 1e-10 if sid in IMPLICIT or (sid == "SH31N" and p.weight_alpha < 1) else 1e-12
    for a, b in zip(layers[:-1], layers[1:]):
        s = from_layers(a, b)
        assert np.max(np.abs(residual(sid, p, s))) < tol
        assert np.max(np.abs(mesh_residual(sid, p, s))) < tol
        assert np.max(scheme_defect(sid, p, s)) < 1e-10


# ------------------------------------------------------- residual examples

def test_constant_solution_sh12():
    p = SchemeParams(parse_key("K=any,Q=0"), K_fn=lambda u: 1.0 + 0 * u)
    assert residual("SH12", p, orthogonal(0.0, 0.01, 0.0, 0.1, *[1.7] * 6)) == 0.0


def test_exponential_source_constant_profile():
    tau = 0.01
    m = parse_key("K=1,Q=+-e^u", sign=1.0)
    assert residual("SH51", m, orthogonal(0.0, tau, 0.0, 0.1, 0, 0, 0, tau, tau, tau)) == 0.0


def test_linear_scheme_arithmetic():
    tau, h = 0.001, 0.1
    s = orthogonal(0.0, tau, 0.0, h, 0.0, 1.0, 0.0, 0.0, 1 - 2 * tau / h ** 2, 0.0)
    # exact up to the rounding of a difference quotient over tau
    assert abs(residual("EQ55A", parse_key("K=1,Q=0"), s)) < 1e-12


def test_power_scheme_explicit_solve(rng):
    m = parse_key("K=u^s,Q=0", sigma=1.0)
    st_ = sample_stencils("SH31", m, 50, rng)
    # F is a difference quotient over tau; tau*F/u_hat is the update defect
    assert np.max(np.abs(residual("SH31", m, st_)) * st_.tau / st_.u_hat) < 1e-14


def test_moving_mesh_constant_profile():
    m = parse_key("K=1,Q=0")
    s = Stencil(t=0.0, tau=0.01, x=0.0, h_plus=0.1, h_minus=0.1, h_plus_hat=0.1,
                h_minus_hat=0.1, dx=0.0, u=2.0, u_plus=2.0, u_minus=2.0, u_hat=2.0,
                u_hat_plus=2.0, u_hat_minus=2.0)
    assert mesh_residual("SH54E", m, s) == 0.0
    dx, uh = explicit_update("SH54E", m, s)
    assert dx == 0.0 and uh == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("tau,h", [(0.05, 0.2), (0.01, 0.1), (0.2, 0.5)])
def test_kernel_stencil_is_exact(tau, h):
    k = KernelSolution(1.0, 1.0)
    x0 = np.arange(-5.0, 5.0 + h / 2, h)
    lo = Layer(0.3, kernel_mesh(k, x0, 0.3), kernel_value(k, 0.3, kernel_mesh(k, x0, 0.3)))
    xu = kernel_mesh(k, x0, 0.3 + tau)
    up = Layer(0.3 + tau, xu, kernel_value(k, 0.3 + tau, xu))
    s = from_layers(lo, up)
    m = parse_key("K=1,Q=0")
    assert np.max(np.abs(mesh_residual("SH54E", m, s))) < 1e-10
    assert np.max(np.abs(residual("SH54E", m, s))) < 1e-10


def test_power_mesh_equation_linear_profile():
    m = parse_key("K=u^s,Q=0", sigma=1.0)
    tau, hp, hm, u, g = 0.01, 0.1, 0.13, 2.0, 0.5
    s = Stencil(t=0.0, tau=tau, x=0.0, h_plus=hp, h_minus=hm, h_plus_hat=hp, h_minus_hat=hm,
                dx=0.0, u=u, u_plus=u + g * hp, u_minus=u - g * hm, u_hat=u,
                u_hat_plus=u + g * hp, u_hat_minus=u - g * hm)
    dx, _ = explicit_update("SH31A", m, s)
    assert abs(dx / tau + (g * hp + g * hm) / (hp + hm)) < 1e-14


def test_residual_domain_errors():
    m = parse_key("K=u^s,Q=0", sigma=2.0)
    with pytest.raises(DomainError):
        residual("SH31", m, orthogonal(0.0, 0.01, 0.0, 0.1, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        residual("SH31", m, orthogonal(0.0, 0.0, 0.0, 0.1, *[1.0] * 6))
    with pytest.raises(MissingMassGrid):
        residual("SH31N", m, orthogonal(0.0, 0.01, 0.0, 0.1, *[1.0] * 6))


# ----------------------------------------------------------- consistency

def _kernel_stencil(h, lam=0.25, t=0.3, x=0.7):
    k = KernelSolution(1.0, 1.0)
    tau = lam * h * h
    v = lambda tt, xx: kernel_value(k, tt, xx)
    return orthogonal(t, tau, x, h, v(t, x - h), v(t, x), v(t, x + h),
                      v(t + tau, x - h), v(t + tau, x), v(t + tau, x + h))


ODE_CASES = [
    ("SH51", "K=1,Q=+-e^u", dict(sign=1.0), lambda t: -np.log(np.exp(-0.2) - t)),
    ("SH52", "K=1,Q=+-u^n", dict(n=3.0, sign=-1.0), lambda t: (1.2 ** -2 + 2 * t) ** -0.5),
    ("SH23", "K=e^u,Q=+-e^{au}", dict(alpha=2.0, sign=1.0),
     lambda t: -np.log(np.exp(-0.4) - 2 * t) / 2),
    ("SH33", "K=u^s,Q=+-u^n", dict(sigma=2.0, n=3.0, sign=-1.0),
     lambda t: (1.2 ** -2 + 2 * t) ** -0.5),
]


def _ratios(res):
    return [res[i] / res[i + 1] for i in range(len(res) - 1)]


def test_consistency_heat_kernel():
    m = parse_key("K=1,Q=0")
    res = [abs(residual("EQ55A", m, _kernel_stencil(h))) for h in (0.2, 0.1, 0.05)]
    assert all(3.2 <= r <= 4.8 for r in _ratios(res))
    p = SchemeParams(parse_key("K=any,Q=0"), K_fn=lambda u: 1.0 + 0 * u)
    res = [abs(residual("SH12", p, _kernel_stencil(h))) for h in (0.2, 0.1, 0.05)]
    assert all(3.2 <= r <= 4.8 for r in _ratios(res))


@pytest.mark.parametrize("sid,key,mp,sol", ODE_CASES, ids=[c[0] for c in ODE_CASES])
def test_consistency_source_ode(sid, key, mp, sol):
    m = parse_key(key, **mp)
    res = []
    for h in (0.2, 0.1, 0.05):
        tau, t = 0.25 * h * h, 0.1
        a, b = sol(t), sol(t + tau)
        res.append(abs(residual(sid, m, orthogonal(t, tau, 0.3, h, a, a, a, b, b, b))))
    assert all(3.2 <= r <= 4.8 for r in _ratios(res))


# ------------------------------------------------------------ steppers

def test_constant_layer_is_stationary():
    m = parse_key("K=e^u,Q=0")
    lay = Layer(0.0, np.linspace(0, 1, 11), np.full(11, 0.7))
    out = run("SH21", m, lay, uniform_time(0.01, 10))
    assert all(np.all(l.u == 0.7) for l in out)


def test_linear_step_pattern():
    m = parse_key("K=1,Q=0")
    lay = Layer(0.0, [0.0, 0.1, 0.2, 0.3, 0.4], [0, 0, 1, 0, 0])
    u = step("EQ55A", m, lay, 0.25 * 0.01).layer.u
    assert np.allclose(u[1:4], [0.25, 0.5, 0.25], atol=1e-15)


def test_moving_scheme_follows_kernel():
    k = KernelSolution(1.0, 1.0)
    x0 = np.linspace(-6.0, 6.0, 41)
    ends = lambda t: ((kernel_mesh(k, x0[0], t), kernel_value(k, t, kernel_mesh(k, x0[0], t))),
                      (kernel_mesh(k, x0[-1], t), kernel_value(k, t, kernel_mesh(k, x0[-1], t))))
    p = SchemeParams(parse_key("K=1,Q=0"), boundary_fn=ends)
    layers = run("SH54E", p, Layer(0.0, x0, kernel_value(k, 0.0, x0)), uniform_time(1.0, 20))
    for l in layers:
        assert np.max(np.abs(l.x - kernel_mesh(k, x0, l.t))) < 1e-11
        assert np.max(np.abs(l.u - kernel_value(k, l.t, l.x))) < 1e-11


def test_implicit_kernel_run_stays_close():
    k = KernelSolution(1.0, 1.0)
    x0 = np.linspace(-6.0, 6.0, 41)
    from heatsym.studies import kernel_ends
    p = SchemeParams(parse_key("K=1,Q=0"), boundary_fn=kernel_ends(k, x0[0], x0[-1]))
    layers = run("SH54I", p, Layer(0.0, x0, kernel_value(k, 0.0, x0)), uniform_time(0.5, 10))
    last = layers[-1]
    assert np.max(np.abs(last.u - kernel_value(k, last.t, last.x))) < 5e-3


def test_implicit_run_with_pinned_ends():
    k = KernelSolution(1.0, 1.0)
    x0 = np.linspace(-6.0, 6.0, 41)
    p = SchemeParams(parse_key("K=1,Q=0"))
    layers = run("SH54I", p, Layer(0.0, x0, kernel_value(k, 0.0, x0)), uniform_time(0.02, 4))
    assert len(layers) == 5 and np.all(np.diff(layers[-1].x) > 0)


def test_density_update_keeps_compatibility():
    x = np.linspace(-2.0, 2.0, 21)
    lay = Layer(0.0, x, 1.0 + 0.5 * np.exp(-x ** 2), s=x - x[0], rho=np.ones_like(x))
    p = SchemeParams(parse_key("K=1,Q=0"))
    new = step("TS5G", p, lay, 0.002).layer
    # interval density times interval length is carried over unchanged
    assert np.allclose(new.rho[:-1] * np.diff(new.x), lay.rho[:-1] * np.diff(lay.x),
                       rtol=1e-13)


def test_mass_scheme_hat_conserves():
    from heatsym.conservation import first_moment_defect, total_mass
    hat = lambda x: 1.0 + 0.5 * max(0.0, 1 - abs(x))
    lay = init_mass_mesh(hat, -3.0, 0.1, 52)
    p = SchemeParams(parse_key("K=u^s,Q=0", sigma=1.0), weight_alpha=1.0)
    layers = run("SH31N", p, lay, uniform_time(0.02, 10))
    for a, b in zip(layers[:-1], layers[1:]):
        assert total_mass(b) == total_mass(a)
        assert first_moment_defect(a, b, p) < 1e-10


def test_overflow_is_reported():
    m = parse_key("K=1,Q=0")
    x = np.linspace(0.0, 1.0, 21)
    lay = Layer(0.0, x, np.sin(np.pi * x) + 0.01 * np.cos(40 * np.pi * x))
    with pytest.raises(StabilityBreach):
        run("EQ55A", m, lay, uniform_time(10 * 0.0025 * 200, 200))


def test_parameter_validation():
    m = parse_key("K=u^s,Q=0", sigma=1.0)
    with pytest.raises(DomainError):
        SchemeParams(m, weight_alpha=1.5)
    with pytest.raises(DomainError):
        SchemeParams(m, boundary="periodic")
    lay = Layer(0.0, np.linspace(0, 1, 5), np.ones(5))
    with pytest.raises(DomainError):
        step("SH31", m, lay, 0.0)
    with pytest.raises(DomainError):
        step("SH12", parse_key("K=any,Q=0"), lay, 0.01)
    with pytest.raises(DomainError):
        step("SH31", parse_key("K=u^s,Q=0"), lay, 0.01)


def test_copy_ends_policy():
    m = parse_key("K=1,Q=0")
    x = np.linspace(0, 1, 11)
    lay = Layer(0.0, x, np.sin(np.pi * x) + 1)
    new = step("EQ55A", SchemeParams(m, boundary="copy-ends"), lay, 0.002).layer
    assert new.u[0] == new.u[1] and new.u[-1] == new.u[-2]
    new = step("EQ55A", SchemeParams(m), lay, 0.002).layer
    assert new.u[0] == lay.u[0] and new.u[-1] == lay.u[-1]


@given(st.floats(0.5, 3.0), st.floats(0.02, 0.2))
def test_sh21_scale_shift_commutes(c, lam):
    # shifting u by c and rescaling x by e^{c/2} maps SH21 solutions to solutions
    m = parse_key("K=e^u,Q=0")
    x = np.linspace(0, 1, 11)
    lay = Layer(0.0, x, 0.3 * np.sin(np.pi * x))
    tau = lam * 0.01 * np.exp(-0.3)
    a = step("SH21", m, lay, tau).layer
    b = step("SH21", m, Layer(0.0, x * np.exp(c / 2), lay.u + c), tau).layer
    assert np.allclose(b.u - c, a.u, atol=1e-12)
