"""Lie point symmetry generators, their flows and stencil-level checks.

A generator ``X = xi_t d/dt + xi_x d/dx + eta d/du`` is stored as closed-form
coefficient callables.  Its finite transformations are obtained by integrating
the Lie equations ``dz/de = (xi_t, xi_x, eta)(z)`` numerically.  Mass-coordinate
operators may also move ``s`` and a density ``rho``.

Closed-form group actions are only used as independent oracles in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, FlowBlowup, InadmissibleImage, LayerSkew
from .stencil import LOWER, UPPER, Stencil

Coefficient = Callable[..., object]

FLOW_RTOL = 1e-13
FLOW_ATOL = 1e-15
OVERFLOW_GUARD = 1e100
SKEW_TOL = 1e-9
MESH_TOL = 1e-8


def zero(*args):
    return 0.0 * np.asarray(args[0], dtype=float)


@dataclass(frozen=True)
class SymmetryGenerator:
    """Infinitesimal operator of a one-parameter point group.

    ``xi_t``, ``xi_x`` and ``eta`` take ``(t, x, u)``.  The optional ``xi_s``
    and ``eta_rho`` take ``(t, x, u, s, rho)`` and act on mass-coordinate data.
    """

    xi_t: Coefficient
    xi_x: Coefficient
    eta: Coefficient
    label: str
    xi_s: Optional[Coefficient] = None
    eta_rho: Optional[Coefficient] = None

    def coefficients(self, t, x, u, s=None, rho=None):
        t = np.asarray(t, dtype=float)
        s = 0.0 * t if s is None else s
        rho = 0.0 * t if rho is None else rho
        out = [self.xi_t(t, x, u), self.xi_x(t, x, u), self.eta(t, x, u),
               zero(t) if self.xi_s is None else self.xi_s(t, x, u, s, rho),
               zero(t) if self.eta_rho is None else self.eta_rho(t, x, u, s, rho)]
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), t.shape) for c in out])

    def __repr__(self) -> str:
        return f"SymmetryGenerator({self.label!r})"


def generator(label: str, xi_t=None, xi_x=None, eta=None, xi_s=None,
              eta_rho=None) -> SymmetryGenerator:
    """Build a generator, treating missing coefficients as zero."""
    return SymmetryGenerator(xi_t or zero, xi_x or zero, eta or zero, label,
                             xi_s, eta_rho)


def flow_points(gen: SymmetryGenerator, eps: float, points: np.ndarray,
                rtol: float = FLOW_RTOL) -> np.ndarray:
    """Displacements of many points along the flow of ``gen``.

    Parameters
    ----------
    points : ndarray, shape (5, ...)
        Rows ``t, x, u, s, rho``.
    eps : float
        Group parameter.

    Returns
    -------
    ndarray of the same shape as ``points`` holding ``z(eps) - z(0)``.
    """
    p = np.asarray(points, dtype=float)
    shape = p.shape
    flat = p.reshape(5, -1)
    if eps == 0.0:
        return np.zeros(shape)

    def rhs(_e, d):
        z = flat + d.reshape(5, -1)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > OVERFLOW_GUARD:
            raise FlowBlowup(f"flow of {gen.label} left the overflow guard")
        return gen.coefficients(*z).ravel()

    with np.errstate(over="raise", invalid="raise"):
        try:
            sol = solve_ivp(rhs, (0.0, float(eps)), np.zeros(flat.size),
                            method="DOP853", rtol=rtol, atol=FLOW_ATOL)
        except FloatingPointError as exc:
            raise FlowBlowup(f"flow of {gen.label} overflowed: {exc}") from exc
    if not sol.success:
        raise FlowBlowup(f"flow of {gen.label} failed at eps={eps}: {sol.message}")
    d = sol.y[:, -1]
    if not np.all(np.isfinite(d)) or np.max(np.abs(flat.ravel() + d)) > OVERFLOW_GUARD:
        raise FlowBlowup(f"flow of {gen.label} left the overflow guard")
    return d.reshape(shape)


def flow_point(gen: SymmetryGenerator, eps: float, point) -> tuple:
    """Image ``(t, x, u)`` of one point under the flow of ``gen``."""
    t, x, u = (float(v) for v in point)
    p = np.array([t, x, u, 0.0, 0.0]).reshape(5, 1)
    d = flow_points(gen, eps, p)[:, 0]
    return (t + d[0], x + d[1], u + d[2])


def flow_stencil(gen: SymmetryGenerator, eps: float, s: Stencil) -> Stencil:
    """Transform every node of a stencil (or batch) by the flow of ``gen``.

    Raises
    ------
    LayerSkew
        If the images of one layer no longer share a time level.
    """
    pts = s.node_points()
    d = flow_points(gen, eps, pts)
    t_new = pts[0] + d[0]
    scale = np.maximum(1.0, np.abs(t_new))
    for layer in (LOWER, UPPER):
        spread = np.abs(t_new[list(layer)] - t_new[layer[1]]) / scale[layer[1]]
        if np.max(spread) > SKEW_TOL:
            raise LayerSkew(f"{gen.label} tilts a time layer by {np.max(spread):.3g}")
    return s.displaced(d)


@dataclass(frozen=True)
class MeshConditionReport:
    uniform_t: bool
    uniform_x: bool
    orthogonal: bool
    flat_layers: bool
    max_defects: tuple

    @property
    def all_orthogonal_uniform(self) -> bool:
        return self.uniform_t and self.uniform_x and self.orthogonal and self.flat_layers


def default_mesh_samples(n: int = 32, seed: int = 0) -> Stencil:
    """Unit-scaled orthogonal stencils used to probe the mesh conditions."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.2, 1.0, n)
    tau = rng.uniform(0.05, 0.3, n)
    h = rng.uniform(0.1, 0.5, n)
    x = rng.uniform(-1.0, 1.0, n)
    u = rng.uniform(0.5, 2.0, (6, n))
    return Stencil(t=t, tau=tau, x=x, h_plus=h, h_minus=h, h_plus_hat=h, h_minus_hat=h,
                   dx=np.zeros(n), u_minus=u[0], u=u[1], u_plus=u[2],
                   u_hat_minus=u[3], u_hat=u[4], u_hat_plus=u[5])


def check_mesh_conditions(gen: SymmetryGenerator,
                          samples: Optional[Stencil] = None) -> MeshConditionReport:
    """Evaluate the four discrete mesh-preservation conditions for ``gen``.

    The conditions are (ct) time uniformity, (ch) space uniformity, (cht)
    orthogonality and (cht2) flatness of time layers, each written with
    forward/backward differences of the generator coefficients taken on the
    sample stencils.
    """
    st = (samples if samples is not None else default_mesh_samples()).asarrays()
    t, tau, x, hp, hm = st.t, st.tau, st.x, st.h_plus, st.h_minus
    u, up, um, uh, uhp = st.u, st.u_plus, st.u_minus, st.u_hat, st.u_hat_plus
    u_back = 2.0 * u - uh
    xt, xx = gen.xi_t, gen.xi_x

    def ev(f, a, b, c):
        return np.broadcast_to(np.asarray(f(a, b, c), dtype=float), t.shape)

    ct = (ev(xt, t + tau, x, uh) - 2.0 * ev(xt, t, x, u) + ev(xt, t - tau, x, u_back)) / tau**2
    dp = (ev(xx, t, x + hp, up) - ev(xx, t, x, u)) / hp
    dm = (ev(xx, t, x, u) - ev(xx, t, x - hm, um)) / hm
    ch = 2.0 * (dp - dm) / (hp + hm)
    cht = ((ev(xt, t, x + hp, up) - ev(xt, t, x, u)) / hp
           + (ev(xx, t + tau, x, uh) - ev(xx, t, x, u)) / tau)
    cht2 = ((ev(xt, t + tau, x + hp, uhp) - ev(xt, t + tau, x, uh))
            - (ev(xt, t, x + hp, up) - ev(xt, t, x, u))) / (hp * tau)
    defects = tuple(float(np.max(np.abs(d))) for d in (ct, ch, cht, cht2))
    ok = [d < MESH_TOL for d in defects]
    return MeshConditionReport(ok[0], ok[1], ok[2], ok[3], defects)


def invariant_directional_defect(expr: Callable[[Stencil], object],
                                 gen: SymmetryGenerator, s: Stencil,
                                 step: float = 1e-3) -> float:
    """Derivative of ``expr`` along the flow of ``gen`` at ``eps = 0``.

    Central differences at ``step`` and ``step/2`` are combined by Richardson
    extrapolation.  Returns the largest magnitude over the batch.
    """
    def f(e):
        return np.asarray(expr(flow_stencil(gen, e, s)), dtype=float)

    d1 = (f(step) - f(-step)) / (2 * step)
    d2 = (f(step / 2) - f(-step / 2)) / step
    return float(np.max(np.abs((4 * d2 - d1) / 3)))


def normalized(terms: Sequence, floor=0.0) -> np.ndarray:
    """``|sum(terms)| / max(max|term|, floor)``; a zero scale gives zero defect."""
    shape = np.broadcast_shapes(*(np.shape(v) for v in terms))
    arr = np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in terms])
    total = np.abs(np.sum(arr, axis=0))
    scale = np.maximum(np.max(np.abs(arr), axis=0), floor)
    return np.where(scale > 0, total / np.where(scale > 0, scale, 1.0), total)


def invariance_defect(scheme, params, gen: SymmetryGenerator, s: Stencil,
                      eps: float, check_input: bool = True) -> float:
    """Normalized residual of ``scheme`` on the image of ``s`` under the flow.

    Every equation of the scheme (value equation, mesh equation and any
    auxiliary relation) is divided by the largest of its additive terms, and
    the required mesh geometry (orthogonality, uniform steps) is measured on
    the image.  The largest of these numbers over the batch is returned.

    Raises
    ------
    InadmissibleImage
        The image has a nonpositive step or leaves the scheme's domain.

    Parameters
    ----------
    scheme : SchemeId
    params : SchemeParams or HeatModel
    s : Stencil
        Stencil (or batch) that satisfies the scheme.
    """
    from . import schemes as _schemes

    p = _schemes.as_params(params)
    if check_input:
        d0 = _schemes.scheme_defect(scheme, p, s)
        if np.max(d0) > 1e-9:
            raise ValueError(f"input stencil does not satisfy {scheme}: defect {np.max(d0):.3g}")
    image = flow_stencil(gen, eps, s)
    steps = [image.tau, image.h_plus, image.h_minus, image.h_plus_hat, image.h_minus_hat]
    if any(np.any(np.asarray(v) <= 0) for v in steps):
        raise InadmissibleImage(f"{gen.label} at eps={eps} produces a nonpositive step")
    try:
        d = _schemes.scheme_defect(scheme, p, image)
    except DomainError as exc:
        raise InadmissibleImage(f"{gen.label} at eps={eps}: {exc}") from exc
    if not np.all(np.isfinite(d)):
        raise InadmissibleImage(f"{gen.label} at eps={eps} gives a non-finite residual")
    return float(np.max(d))
