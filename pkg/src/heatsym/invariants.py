"""Catalogued difference invariants and their numerical verification.

Each :class:`InvariantList` bundles the difference invariants used to build
the schemes of one case, the stencil geometry they live on and the operators
that must annihilate them.  :func:`check_all` measures the directional
derivative of every expression along every operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model_catalog import (_ops_31n, _ops_ts4, lookup, parse_key)
from .stencil import Stencil
from .symmetry import SymmetryGenerator, invariant_directional_defect

SQ3 = np.sqrt(3.0)
INVARIANT_TOL = 1e-7

Expr = Callable[[Stencil], object]


@dataclass(frozen=True)
class InvariantList:
    label: str
    key: str
    params: dict
    geometry: str  # "orthogonal", "moving", "mass" or "density"
    expressions: tuple  # (name, Expr) pairs
    operators: Optional[Callable] = field(default=None, repr=False)

    @property
    def model(self):
        return parse_key(self.key, **self.params)

    def generators(self) -> list:
        if self.operators is not None:
            return list(self.operators(self.model))
        return list(lookup(self.model).generators)


# ---------------------------------------------------------------- helpers

def _diffs(additive: bool):
    """Differences (additive groups) or ratios (scaling groups) of values."""
    if additive:
        return [("u_hat-u", lambda s: s.u_hat - s.u),
                ("u_plus-u", lambda s: s.u_plus - s.u),
                ("u-u_minus", lambda s: s.u - s.u_minus),
                ("u_hat_plus-u_hat", lambda s: s.u_hat_plus - s.u_hat),
                ("u_hat-u_hat_minus", lambda s: s.u_hat - s.u_hat_minus)]
    return [("u_hat/u", lambda s: s.u_hat / s.u),
            ("u_plus/u", lambda s: s.u_plus / s.u),
            ("u_minus/u", lambda s: s.u_minus / s.u),
            ("u_hat_plus/u_hat", lambda s: s.u_hat_plus / s.u_hat),
            ("u_hat_minus/u_hat", lambda s: s.u_hat_minus / s.u_hat)]


def _lu(a, b, h):
    return np.log(a / b) / h


def _crit_lists(sign: int):
    """Critical-source invariants; hyperbolic for sign +1, circular for -1."""
    if sign > 0:
        cot, sn, tag = (lambda z: 1 / np.tanh(z)), np.sinh, "h"
    else:
        cot, sn, tag = (lambda z: 1 / np.tan(z)), np.sin, ""
    sum_cot = lambda s: cot(s.h_plus / SQ3) + cot(s.h_minus / SQ3)
    return sum_cot, sn, tag


def _root_time(m, upper: bool = False):
    """Time scale of log meshes seen from the lower or the upper layer.

    Lower: ``sqrt|e^{d s tau} - 1|``.  Upper: ``sqrt|1 - e^{-d s tau}|``; values
    on the upper layer scale with the upper time, so the factor is re-based.
    """
    ds = m.delta * m.sigma_eff
    if upper:
        return lambda s: np.sqrt(np.abs(np.expm1(-ds * s.tau)))
    return lambda s: np.sqrt(np.abs(np.expm1(ds * s.tau)))


# ------------------------------------------------------------------ lists

def _lists() -> list:
    out = []
    add = out.append

    add(InvariantList("op11", "K=any,Q=any", {}, "orthogonal", (
        ("tau", lambda s: s.tau), ("h", lambda s: s.h_plus),
        ("u", lambda s: s.u), ("u_plus", lambda s: s.u_plus),
        ("u_minus", lambda s: s.u_minus), ("u_hat", lambda s: s.u_hat),
        ("u_hat_minus", lambda s: s.u_hat_minus), ("u_hat_plus", lambda s: s.u_hat_plus))))

    add(InvariantList("op12", "K=any,Q=0", {}, "orthogonal", (
        ("h^2/tau", lambda s: s.h_plus ** 2 / s.tau),
        ("u", lambda s: s.u), ("u_plus", lambda s: s.u_plus),
        ("u_minus", lambda s: s.u_minus), ("u_hat", lambda s: s.u_hat),
        ("u_hat_plus", lambda s: s.u_hat_plus), ("u_hat_minus", lambda s: s.u_hat_minus))))

    d21 = tuple(_diffs(True)[1:])
    add(InvariantList("op21", "K=e^u,Q=0", {}, "orthogonal", (
        ("e^u tau/h^2", lambda s: np.exp(s.u) * s.tau / s.h_plus ** 2),
        ("u_hat-u", lambda s: s.u_hat - s.u)) + d21))

    for d in (1, -1):
        add(InvariantList(f"op22[d={d:+d}]", "K=e^u,Q=d", {"delta": d}, "orthogonal", (
            ("e^u(e^{d tau}-1)/h^2",
             lambda s, d=d: np.exp(s.u) * np.expm1(d * s.tau) / s.h_plus ** 2),
            ("u_hat-u-d tau", lambda s, d=d: s.u_hat - s.u - d * s.tau)) + d21))

    for a in (2.0, -0.5):
        add(InvariantList(f"op23[a={a:g}]", "K=e^u,Q=+-e^{au}", {"alpha": a, "sign": 1},
                          "orthogonal", (
            ("tau^{(a-1)/(2a)}/h",
             lambda s, a=a: s.tau ** ((a - 1) / (2 * a)) / s.h_plus),
            ("e^{au} tau", lambda s, a=a: np.exp(a * s.u) * s.tau),
            ("u_hat-u", lambda s: s.u_hat - s.u)) + d21))

    for d in (1, -1):
        add(InvariantList(f"op24[d={d:+d}]", "K=e^u,Q=+-e^u+d", {"delta": d, "sign": 1},
                          "orthogonal", (
            ("e^u(e^{d tau}-1)", lambda s, d=d: np.exp(s.u) * np.expm1(d * s.tau)),
            ("h", lambda s: s.h_plus),
            ("u_hat-u-d tau", lambda s, d=d: s.u_hat - s.u - d * s.tau)) + d21))

    sg = 1.5
    add(InvariantList("op31", "K=u^s,Q=0", {"sigma": sg}, "orthogonal", (
        ("u^s tau/h^2", lambda s, sg=sg: s.u ** sg * s.tau / s.h_plus ** 2),
        *_diffs(False))))

    add(InvariantList("op31-moving", "K=u^s,Q=0", {"sigma": sg}, "moving", (
        ("u^s tau/h+^2", lambda s, sg=sg: s.u ** sg * s.tau / s.h_plus ** 2),
        *_diffs(False),
        ("h-/h+", lambda s: s.h_minus / s.h_plus),
        ("h^-/h+", lambda s: s.h_minus_hat / s.h_plus),
        ("h^+/h+", lambda s: s.h_plus_hat / s.h_plus),
        ("dx/h+", lambda s: s.dx / s.h_plus))))

    add(InvariantList("op31-mass", "K=u^s,Q=0", {"sigma": sg}, "mass", (
        ("u^s tau/hx+^2", lambda s, sg=sg: s.u ** sg * s.tau / s.h_plus ** 2),
        *_diffs(False),
        ("hx-/hx+", lambda s: s.h_minus / s.h_plus),
        ("hx^-/hx+", lambda s: s.h_minus_hat / s.h_plus),
        ("hx^+/hx+", lambda s: s.h_plus_hat / s.h_plus),
        ("dx/hx+", lambda s: s.dx / s.h_plus),
        ("hs/(u hx+)", lambda s: s.hs_plus / (s.u * s.h_plus))), _ops_31n))

    for d in (1, -1):
        for sg in (1.0, -0.5):
            add(InvariantList(f"op32[d={d:+d},s={sg:g}]", "K=u^s,Q=d*u",
                              {"sigma": sg, "delta": d}, "orthogonal", (
                ("u^s(e^{ds tau}-1)/h^2",
                 lambda s, d=d, sg=sg: s.u ** sg * np.expm1(d * sg * s.tau) / s.h_plus ** 2),
                ("d ln(u_hat/u)-tau", lambda s, d=d: d * np.log(s.u_hat / s.u) - s.tau),
                *_diffs(False)[1:])))

    for sg, n in ((1.5, 3.0), (-0.5, 2.0)):
        add(InvariantList(f"op33[s={sg:g},n={n:g}]", "K=u^s,Q=+-u^n",
                          {"sigma": sg, "n": n, "sign": 1}, "orthogonal", (
            ("tau^{(n-s-1)/(2(n-1))}/h",
             lambda s, sg=sg, n=n: s.tau ** ((n - sg - 1) / (2 * (n - 1))) / s.h_plus),
            ("tau u^{n-1}", lambda s, n=n: s.tau * s.u ** (n - 1)),
            *_diffs(False))))

    for d in (1, -1):
        add(InvariantList(f"op34[d={d:+d}]", "K=u^s,Q=+-u^{s+1}+d*u",
                          {"sigma": 1.5, "delta": d, "sign": 1}, "orthogonal", (
            ("u^s(e^{ds tau}-1)", lambda s, d=d: s.u ** 1.5 * np.expm1(d * 1.5 * s.tau)),
            ("h", lambda s: s.h_plus),
            ("d ln(u_hat/u)-tau", lambda s, d=d: d * np.log(s.u_hat / s.u) - s.tau),
            *_diffs(False)[1:])))

    harm = lambda s: s.h_plus * s.h_minus / (s.h_plus + s.h_minus)
    ratios41 = (("u_hat/u", lambda s: s.u_hat / s.u),
                ("u_hat_plus/u_plus", lambda s: s.u_hat_plus / s.u_plus),
                ("u_hat_minus/u_minus", lambda s: s.u_hat_minus / s.u_minus))
    add(InvariantList("op41", "K=u^-4/3,Q=0", {}, "nonuniform", ratios41 + (
        ("(u+ u)^{1/3} h+/sqrt(tau)",
         lambda s: np.cbrt(s.u_plus * s.u) * s.h_plus / np.sqrt(s.tau)),
        ("(u- u)^{1/3} h-/sqrt(tau)",
         lambda s: np.cbrt(s.u_minus * s.u) * s.h_minus / np.sqrt(s.tau)),
        ("u^{2/3} harm(h)/sqrt(tau)",
         lambda s: np.cbrt(s.u) ** 2 * harm(s) / np.sqrt(s.tau)))))

    for d in (1, -1):
        m = parse_key("K=u^-4/3,Q=d*u", delta=d)
        rt, rth = _root_time(m), _root_time(m, upper=True)
        add(InvariantList(f"op42[d={d:+d}]", "K=u^-4/3,Q=d*u", {"delta": d}, "nonuniform", (
            ("d ln(u_hat/u)-tau", lambda s, d=d: d * np.log(s.u_hat / s.u) - s.tau),
            ("u^{2/3} harm(h)/rt", lambda s, rt=rt: np.cbrt(s.u) ** 2 * harm(s) / rt(s)),
            ("(u+ u)^{1/3} h+/rt",
             lambda s, rt=rt: np.cbrt(s.u_plus * s.u) * s.h_plus / rt(s)),
            ("(u- u)^{1/3} h-/rt",
             lambda s, rt=rt: np.cbrt(s.u_minus * s.u) * s.h_minus / rt(s)),
            ("(u^+ u^)^{1/3} h+/rt^",
             lambda s, rt=rth: np.cbrt(s.u_hat_plus * s.u_hat) * s.h_plus / rt(s)),
            ("(u^- u^)^{1/3} h-/rt^",
             lambda s, rt=rth: np.cbrt(s.u_hat_minus * s.u_hat) * s.h_minus / rt(s)))))

    for sign in (1, -1):
        sum_cot, sn, tag = _crit_lists(sign)
        key = "K=u^-4/3,Q=+u^-1/3" if sign > 0 else "K=u^-4/3,Q=-u^-1/3"
        add(InvariantList(f"op44[a={sign:+d}]", key, {}, "nonuniform", ratios41 + (
            (f"sqrt(tau) u^(-2/3) sum cot{tag}",
             lambda s, c=sum_cot: np.sqrt(s.tau) / np.cbrt(s.u) ** 2 * c(s)),
            (f"(u u+)^(1/3) sin{tag}(h+)/sqrt(tau)",
             lambda s, f=sn: np.cbrt(s.u * s.u_plus) * f(s.h_plus / SQ3) / np.sqrt(s.tau)),
            (f"(u u-)^(1/3) sin{tag}(h-)/sqrt(tau)",
             lambda s, f=sn: np.cbrt(s.u * s.u_minus) * f(s.h_minus / SQ3) / np.sqrt(s.tau)))))

    for sign in (1, -1):
        sum_cot, sn, tag = _crit_lists(sign)
        key = "K=u^-4/3,Q=+u^-1/3+d*u" if sign > 0 else "K=u^-4/3,Q=-u^-1/3+d*u"
        for d in (1, -1):
            m = parse_key(key, delta=d)
            rt, rth = _root_time(m), _root_time(m, upper=True)
            add(InvariantList(f"op45[a={sign:+d},d={d:+d}]", key, {"delta": d}, "nonuniform", (
                ("d ln(u_hat/u)-tau", lambda s, d=d: d * np.log(s.u_hat / s.u) - s.tau),
                (f"rt u^(-2/3) sum cot{tag}",
                 lambda s, c=sum_cot, rt=rt: rt(s) / np.cbrt(s.u) ** 2 * c(s)),
                (f"(u u+)^(1/3) sin{tag}(h+)/rt",
                 lambda s, f=sn, rt=rt: np.cbrt(s.u * s.u_plus) * f(s.h_plus / SQ3) / rt(s)),
                (f"(u u-)^(1/3) sin{tag}(h-)/rt",
                 lambda s, f=sn, rt=rt: np.cbrt(s.u * s.u_minus) * f(s.h_minus / SQ3) / rt(s)),
                (f"(u^ u^+)^(1/3) sin{tag}(h+)/rt^",
                 lambda s, f=sn, rt=rth: np.cbrt(s.u_hat * s.u_hat_plus)
                 * f(s.h_plus / SQ3) / rt(s)),
                (f"(u^ u^-)^(1/3) sin{tag}(h-)/rt^",
                 lambda s, f=sn, rt=rth: np.cbrt(s.u_hat * s.u_hat_minus)
                 * f(s.h_minus / SQ3) / rt(s)))))

    add(InvariantList("op51", "K=1,Q=+-e^u", {"sign": 1}, "orthogonal", (
        ("h^2/tau", lambda s: s.h_plus ** 2 / s.tau),
        ("tau e^u", lambda s: s.tau * np.exp(s.u)),
        *_diffs(True))))

    add(InvariantList("op52", "K=1,Q=+-u^n", {"n": 3.0, "sign": 1}, "orthogonal", (
        ("h^2/tau", lambda s: s.h_plus ** 2 / s.tau),
        ("tau u^{n-1}", lambda s: s.tau * s.u ** 2),
        *_diffs(False))))

    for d in (1, -1):
        add(InvariantList(f"op53[d={d:+d}]", "K=1,Q=d*u*ln(u)", {"delta": d}, "moving",
                          _op53_exprs(d)))

    add(InvariantList("op54", "K=1,Q=0", {}, "moving", _op54_exprs(mass=False)))
    add(InvariantList("ts4", "K=1,Q=0", {}, "density", _op54_exprs(mass=True), _ops_ts4))
    return out


def _op53_exprs(d):
    def lx(s):  # (ln u)_x, (ln u)_xbar
        return _lu(s.u_plus, s.u, s.h_plus), _lu(s.u, s.u_minus, s.h_minus)

    def lxh(s):
        return (_lu(s.u_hat_plus, s.u_hat, s.h_plus_hat),
                _lu(s.u_hat, s.u_hat_minus, s.h_minus_hat))

    def I8(s):
        a, b = lx(s)
        w = s.h_plus + s.h_minus
        return d * s.dx + 2 * np.expm1(d * s.tau) * (s.h_minus / w * a + s.h_plus / w * b)

    def I9(s):
        a, b = lxh(s)
        w = s.h_plus_hat + s.h_minus_hat
        return d * s.dx - 2 * np.expm1(-d * s.tau) * (
            s.h_minus_hat / w * a + s.h_plus_hat / w * b)

    def I10(s):
        return d * s.dx ** 2 - 4 * np.expm1(-d * s.tau) * (
            np.log(s.u_hat) - np.exp(d * s.tau) * np.log(s.u))

    return (("I1", lambda s: s.tau), ("I2", lambda s: s.h_plus), ("I3", lambda s: s.h_minus),
            ("I4", lambda s: s.h_plus_hat), ("I5", lambda s: s.h_minus_hat),
            ("I6", lambda s: lx(s)[0] - lx(s)[1]), ("I7", lambda s: lxh(s)[0] - lxh(s)[1]),
            ("I8", I8), ("I9", I9), ("I10", I10))


def _op54_exprs(mass: bool):
    """Invariants of the linear heat operators on a moving six-point stencil.

    With ``mass`` the density ratios and mass-to-space step ratios are
    appended (the x-steps play the role of ``h``).
    """
    def I5(s):
        hp, hm = s.h_plus, s.h_minus
        return hp ** 2 / (4 * s.tau) - hp ** 2 / (hp + hm) * (
            np.log(s.u_plus / s.u) / hp + np.log(s.u_minus / s.u) / hm)

    def I6(s):
        hp, hm = s.h_plus_hat, s.h_minus_hat
        return hp ** 2 / (4 * s.tau) + hp ** 2 / (hp + hm) * (
            np.log(s.u_hat_plus / s.u_hat) / hp + np.log(s.u_hat_minus / s.u_hat) / hm)

    def I7(s):
        hp, hm = s.h_plus, s.h_minus
        return s.dx * hp / s.tau + 2 * hp / (hp + hm) * (
            hm / hp * np.log(s.u_plus / s.u) - hp / hm * np.log(s.u_minus / s.u))

    def I8(s):
        hp, hm = s.h_plus_hat, s.h_minus_hat
        return s.dx * hp / s.tau + 2 * hp / (hp + hm) * (
            hm / hp * np.log(s.u_hat_plus / s.u_hat) - hp / hm * np.log(s.u_hat_minus / s.u_hat))

    ex = (("I1", lambda s: s.h_plus / s.h_minus),
          ("I2", lambda s: s.h_plus_hat / s.h_minus_hat),
          ("I3", lambda s: s.h_plus_hat * s.h_plus / s.tau),
          ("I4", lambda s: np.sqrt(s.tau) / s.h_plus * s.u_hat / s.u
           * np.exp(s.dx ** 2 / (4 * s.tau))),
          ("I5", I5), ("I6", I6), ("I7", I7), ("I8", I8))
    if not mass:
        return ex
    # density ratios carry the matching x-step ratio: rho scales like 1/h_x
    return ex + (("I9", lambda s: s.rho_hat_minus * s.h_minus_hat / (s.rho_minus * s.h_minus)),
                 ("I10", lambda s: s.rho_hat * s.h_plus_hat / (s.rho * s.h_plus)),
                 ("I11", lambda s: s.rho_hat_plus * s.h_plus_hat / (s.rho_plus * s.h_plus)),
                 ("I12", lambda s: s.hs_plus / (s.rho * s.h_plus)),
                 ("I13", lambda s: s.hs_minus / (s.rho_minus * s.h_minus)))


INVARIANT_LISTS = tuple(_lists())


def _printed_variants() -> list:
    """Forms as printed that are not invariant, with the operator that breaks them.

    Entries are ``(label, key, params, geometry, name, expr, generator)``.
    Kept so the corrections above stay justified by a failing check.
    """
    from .symmetry import generator
    out = []
    m42 = parse_key("K=u^-4/3,Q=d*u", delta=1)
    rt = _root_time(m42)
    x4 = [g for g in lookup(m42).generators if g.label == "X4"][0]
    out.append(("op42", "K=u^-4/3,Q=d*u", {"delta": 1}, "nonuniform",
                "(u^+ u^)^{1/3} h+/sqrt(e^{ds tau}-1)",
                lambda s: np.cbrt(s.u_hat_plus * s.u_hat) * s.h_plus / rt(s), x4))
    m45 = parse_key("K=u^-4/3,Q=+u^-1/3+d*u", delta=1)
    rt45 = _root_time(m45)
    x3 = [g for g in lookup(m45).generators if g.label == "X3"][0]
    out.append(("op45", "K=u^-4/3,Q=+u^-1/3+d*u", {"delta": 1}, "nonuniform",
                "(u^ u^+)^(1/3) sinh(h+)/sqrt(e^{ds tau}-1)",
                lambda s: np.cbrt(s.u_hat * s.u_hat_plus) * np.sinh(s.h_plus / SQ3)
                / rt45(s), x3))
    x5 = [g for g in _ops_ts4() if g.label == "X5"][0]
    out.append(("ts4", "K=1,Q=0", {}, "density", "rho^/rho",
                lambda s: s.rho_hat / s.rho, x5))
    x5m = [g for g in _ops_31n(parse_key("K=u^s,Q=0", sigma=1.5)) if g.label == "X5"][0]
    out.append(("op31-mass", "K=u^s,Q=0", {"sigma": 1.5}, "mass", "hs/hx+",
                lambda s: s.hs_plus / s.h_plus, x5m))
    x3p = generator("X3", xi_t=lambda t, x, u: 4 * t / 3, eta=lambda t, x, u: 2 * u)
    out.append(("op44", "K=u^-4/3,Q=+u^-1/3", {}, "nonuniform",
                "sqrt(tau) u^(-2/3) sum coth under t-scaling with 2u du",
                lambda s: np.sqrt(s.tau) / np.cbrt(s.u) ** 2
                * (1 / np.tanh(s.h_plus / SQ3) + 1 / np.tanh(s.h_minus / SQ3)), x3p))
    return out


PRINTED_VARIANTS = tuple(_printed_variants())


# --------------------------------------------------------------- sampling

def generic_stencils(geometry: str, n: int, rng: np.random.Generator) -> Stencil:
    """Unit-scaled random stencils of the requested geometry.

    ``orthogonal``: uniform steps and no node motion.  ``nonuniform``: fixed
    nodes with unequal steps.  ``moving``: flat layers with independent steps
    and a shift.  ``mass``/``density`` add a Lagrangian coordinate (and node
    densities) to a moving stencil.
    """
    t = rng.uniform(0.2, 1.0, n)
    tau = rng.uniform(0.05, 0.3, n)
    x = rng.uniform(-1.0, 1.0, n)
    hp = rng.uniform(0.2, 0.6, n)
    if geometry == "orthogonal":
        hm = hph = hmh = hp
        dx = np.zeros(n)
    elif geometry == "nonuniform":
        hm = rng.uniform(0.2, 0.6, n)
        hph, hmh, dx = hp, hm, np.zeros(n)
    else:
        hm, hph, hmh = (rng.uniform(0.2, 0.6, n) for _ in range(3))
        dx = rng.uniform(-0.2, 0.2, n)
    vals = [rng.uniform(0.7, 1.5, n) for _ in range(6)]
    st = Stencil(t=t, tau=tau, x=x, h_plus=hp, h_minus=hm, h_plus_hat=hph, h_minus_hat=hmh,
                 dx=dx, u_minus=vals[0], u=vals[1], u_plus=vals[2], u_hat_minus=vals[3],
                 u_hat=vals[4], u_hat_plus=vals[5])
    if geometry in ("mass", "density"):
        st = st.replace(s=rng.uniform(0.0, 1.0, n), hs_plus=rng.uniform(0.1, 0.4, n),
                        hs_minus=rng.uniform(0.1, 0.4, n), ds=np.zeros(n))
    if geometry == "density":
        r = [rng.uniform(0.7, 1.5, n) for _ in range(6)]
        st = st.replace(rho_minus=r[0], rho=r[1], rho_plus=r[2], rho_hat_minus=r[3],
                        rho_hat=r[4], rho_hat_plus=r[5])
    return st


@dataclass(frozen=True)
class InvariantCheck:
    label: str
    expression: str
    generator: str
    defect: float

    @property
    def ok(self) -> bool:
        return self.defect < INVARIANT_TOL


def check_expression(expr: Expr, gen: SymmetryGenerator, geometry: str,
                     n: int = 16, seed: int = 0) -> float:
    """Largest directional defect of one expression over random stencils."""
    st = generic_stencils(geometry, n, np.random.default_rng(seed))
    return invariant_directional_defect(expr, gen, st)


def check_list(lst: InvariantList, n: int = 16, seed: int = 0) -> list:
    st = generic_stencils(lst.geometry, n, np.random.default_rng(seed))
    out = []
    for gen in lst.generators():
        for name, expr in lst.expressions:
            out.append(InvariantCheck(lst.label, name, gen.label,
                                      invariant_directional_defect(expr, gen, st)))
    return out


def check_all(n: int = 16, seed: int = 0) -> list:
    """Every expression of every catalogued list against every operator."""
    return [c for lst in INVARIANT_LISTS for c in check_list(lst, n, seed)]
