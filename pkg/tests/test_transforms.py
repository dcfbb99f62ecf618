import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatsym.errors import DomainError, InadmissibleImage
from heatsym.meshes import Layer, log_time_meth22, log_time_meth32
from heatsym.model_catalog import lookup, parse_key
from heatsym.schemes import run
from heatsym.studies import max_residual, transform_equivalence
from heatsym.transforms import (HALF_STRIP, Transform, TransformId, apply, apply_inverse,
                                compose, transform_layer, transform_solution)


def test_fixed_point_at_zero_time():
    assert apply("CH22", (0.0, 0.4, 1.3), delta=1) == (0.0, 0.4, 1.3)


def test_constant_source_map_value():
    t, x, u = apply("CH22", (math.log(2), 0.4, 1.3), delta=1)
    assert t == pytest.approx(1.0, rel=1e-15)
    assert x == 0.4
    assert u == pytest.approx(1.3 - math.log(2), rel=1e-15)


def test_hyperbolic_map_at_origin():
    assert apply("CH44A", (0.2, 0.0, 5.0)) == (0.2, 0.0, 5.0)


def test_ch32_inverse_time():
    tr = Transform("CH32", delta=1, sigma=2.0)
    for tb in (0.1, 1.0, 3.0):
        assert tr.unmap_t(tb) == pytest.approx(0.5 * math.log(1 + 2 * tb), rel=1e-14)


def test_ch56_inverse_then_forward():
    t, x, u = apply_inverse("CH56", (3.0, 0.0, 0.0), delta=-1)
    assert u == -3.0
    assert apply("CH56", (t, x, u), delta=-1)[2] == 0.0


ALL = [Transform("CH22", delta=1), Transform("CH22", delta=-1),
       Transform("CH32", delta=1, sigma=2.0), Transform("CH32", delta=-1, sigma=-4 / 3),
       Transform("CH44A"), Transform("CH44B"), Transform("CH55", delta=1),
       Transform("CH56", delta=-1)]


@pytest.mark.parametrize("tr", ALL, ids=str)
def test_roundtrip_many_points(tr, rng):
    t = rng.uniform(0.0, 0.5, 1000)
    x = rng.uniform(-2.5, 2.5, 1000)
    u = rng.uniform(0.1, 3.0, 1000)
    back = tr.apply_inverse(*tr.apply(t, x, u))
    for a, b in zip(back, (t, x, u)):
        assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))) < 1e-13


@given(st.floats(0.0, 1.0), st.floats(-2.5, 2.5), st.floats(0.05, 5.0),
       st.sampled_from(ALL))
def test_roundtrip_property(t, x, u, tr):
    back = tr.apply_inverse(*tr.apply(t, x, u))
    assert np.allclose(back, (t, x, u), rtol=1e-13, atol=1e-13)


def test_strip_guard():
    with pytest.raises(InadmissibleImage):
        apply("CH44B", (0.0, HALF_STRIP, 1.0))
    with pytest.raises(DomainError):
        apply("CH44B", (0.0, -2.8, 1.0))
    with pytest.raises(InadmissibleImage):
        apply_inverse("CH44A", (0.0, 2.0, 1.0))


@pytest.mark.parametrize("kw", [dict(kind="CH56", delta=0), dict(kind="CH22"),
                                dict(kind="CH32", delta=1), dict(kind="CH32", delta=1, sigma=0),
                                dict(kind="CH44A", delta=1), dict(kind="CH99")])
def test_parameter_validation(kw):
    with pytest.raises(DomainError):
        Transform(**kw)


def test_no_preimage_time():
    with pytest.raises(InadmissibleImage):
        Transform("CH22", delta=-1).unmap_t(1.5)


def test_layer_transform_keeps_flat_time():
    lay = Layer(0.3, np.linspace(-1, 1, 5), np.ones(5))
    img = transform_layer(Transform("CH32", delta=1, sigma=1.0), lay)
    assert img.t == pytest.approx(math.expm1(0.3))
    assert np.allclose(transform_layer(Transform("CH32", delta=1, sigma=1.0), img,
                                       inverse=True).u, lay.u, rtol=1e-15)


def test_composition_order():
    a, b = Transform("CH32", delta=1, sigma=-4 / 3), Transform("CH44A")
    p = (0.2, 0.5, 1.5)
    assert compose(a, b).apply(*p) == pytest.approx(b.apply(*a.apply(*p)))
    assert np.allclose(compose(a, b).apply_inverse(*compose(a, b).apply(*p)), p, rtol=1e-14)


# ------------------------------------------------------- scheme equivalences

X = np.linspace(-4.0, 4.0, 21)
BUMP = Layer(0.0, X, 1.0 + 0.5 * np.exp(-X ** 2))
XC = np.linspace(-1.5, 1.5, 11)
BUMP_C = Layer(0.0, XC, 1.0 + 0.5 * np.exp(-XC ** 2))


@pytest.mark.parametrize("d", [1, -1])
def test_sh22_to_sh21(d):
    m = parse_key("K=e^u,Q=d", delta=d)
    rows = transform_equivalence("SH22", m, Layer(0.0, X, 0.5 * np.exp(-X ** 2)),
                                 log_time_meth22(d, 1.0, 50))
    (r,) = rows
    assert r.target == "SH21" and r.target_residual < 1e-10


@pytest.mark.parametrize("sigma", [1.0, 2.0])
@pytest.mark.parametrize("d", [1, -1])
def test_sh32_to_sh31(sigma, d):
    m = parse_key("K=u^s,Q=d*u", delta=d, sigma=sigma)
    (r,) = transform_equivalence("SH32", m, BUMP, log_time_meth32(d, sigma, 1.0, 50))
    assert r.target == "SH31" and r.target_residual < 1e-10


@pytest.mark.parametrize("sigma,d,sign", [(1.0, 1, 1.0), (2.0, -1, -1.0)])
def test_sh34_to_sh33(sigma, d, sign):
    m = parse_key("K=u^s,Q=+-u^{s+1}+d*u", sigma=sigma, delta=d, sign=sign)
    (r,) = transform_equivalence("SH34", m, BUMP, log_time_meth32(d, sigma, 0.2, 50))
    assert r.target == "SH33" and r.target_residual < 1e-10


def test_sh24_to_sh23():
    m = parse_key("K=e^u,Q=+-e^u+d", sign=-1.0, delta=1)
    (r,) = transform_equivalence("SH24", m, Layer(0.0, X, 0.5 * np.exp(-X ** 2)),
                                 log_time_meth22(1, 0.2, 50))
    assert r.target == "SH23" and r.target_residual < 1e-10


@pytest.mark.parametrize("key,sid", [("K=u^-4/3,Q=+u^-1/3+d*u", "SH45A"),
                                     ("K=u^-4/3,Q=-u^-1/3+d*u", "SH45B")])
@pytest.mark.parametrize("d", [1, -1])
def test_critical_mixed_source_both_orders(key, sid, d):
    m = parse_key(key, delta=d)
    rows = transform_equivalence(sid, m, BUMP_C, log_time_meth32(d, -4 / 3, 0.2, 50))
    assert {r.target for r in rows} == {"SH42", "SH44A" if sid == "SH45A" else "SH44B"}
    assert all(r.target_residual < 1e-10 for r in rows)
    # chaining the remaining map lands on the source-free scheme either way
    layers = run(sid, m, BUMP_C, log_time_meth32(d, -4 / 3, 0.2, 50))
    space = Transform("CH44A" if sid == "SH45A" else "CH44B")
    time = Transform("CH32", delta=d, sigma=-4 / 3)
    free = parse_key("K=u^-4/3,Q=0")
    for chain in (compose(time, space), compose(space, time)):
        assert max_residual("SH41", free, transform_solution(chain, layers)) < 1e-10


def test_sh42_to_sh41():
    m = parse_key("K=u^-4/3,Q=d*u", delta=1)
    (r,) = transform_equivalence("SH42", m, BUMP_C, log_time_meth32(1, -4 / 3, 0.2, 50))
    assert r.target == "SH41" and r.target_residual < 1e-10


def test_critical_source_to_free():
    for key, sid in (("K=u^-4/3,Q=+u^-1/3", "SH44A"), ("K=u^-4/3,Q=-u^-1/3", "SH44B")):
        m = parse_key(key)
        from heatsym.meshes import uniform_time
        (r,) = transform_equivalence(sid, m, BUMP_C, uniform_time(0.05, 20))
        assert r.target == "SH41" and r.target_residual < 1e-10


def test_image_fails_wrong_target():
    # the untransformed solution does not satisfy the target scheme
    m = parse_key("K=e^u,Q=d", delta=1)
    layers = run("SH22", m, Layer(0.0, X, 0.5 * np.exp(-X ** 2)), log_time_meth22(1, 1.0, 50))
    assert max_residual("SH21", lookup("K=e^u,Q=0").model, layers) > 1e-4


def test_linear_source_maps():
    m = parse_key("K=1,Q=d*u", delta=1)
    (tr, tgt), = lookup(m).transform_targets()
    assert tr.kind is TransformId.CH55 and lookup(tgt).key == "K=1,Q=0"
