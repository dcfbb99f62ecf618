"""Invariant difference schemes: residuals, explicit/implicit steps and drivers.

Every scheme is a list of equations on a six-point stencil.  Each equation is
kept as a list of additive terms so that residuals can be normalized by the
size of their largest term.  The first equation is the value equation ``F``;
moving and mass-coordinate schemes add a mesh equation ``Omega`` and, where
the model carries them, auxiliary relations (conservation of cell heat, the
mass/density compatibility, the density update).

Steps advance a whole :class:`~heatsym.meshes.Layer`.  Explicit schemes are
vectorised over interior nodes; the implicit variant of the linear moving
scheme and the implicit branch of the mass-coordinate scheme use damped Newton
iterations.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import (DomainError, SolverDiverged, StabilityBreach, UnknownCase,
                     MissingMassGrid)
from .meshes import Layer, TimeMesh
from .model_catalog import HeatModel, MeshClass, lookup
from .stencil import Stencil, from_layers
from .symmetry import normalized

SQ3 = math.sqrt(3.0)
OVERFLOW_GUARD = 1e100


class SchemeId(str, enum.Enum):
    SH11 = "SH11"
    SH12 = "SH12"
    SH21 = "SH21"
    SH22 = "SH22"
    SH23 = "SH23"
    SH24 = "SH24"
    SH31 = "SH31"
    SH31A = "SH31A"
    SH31N = "SH31N"
    SH32 = "SH32"
    SH33 = "SH33"
    SH34 = "SH34"
    SH41 = "SH41"
    SH42 = "SH42"
    SH44A = "SH44A"
    SH44B = "SH44B"
    SH45A = "SH45A"
    SH45B = "SH45B"
    SH51 = "SH51"
    SH52 = "SH52"
    SH53 = "SH53"
    SH54E = "SH54E"
    SH54I = "SH54I"
    EQ55A = "EQ55A"
    TS5G = "TS5G"
    TS5U = "TS5U"


S = SchemeId

GEOMETRY = {
    S.SH11: MeshClass.ORTHOGONAL_UNIFORM, S.SH12: MeshClass.ORTHOGONAL_UNIFORM,
    S.SH21: MeshClass.ORTHOGONAL_UNIFORM, S.SH22: MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME,
    S.SH23: MeshClass.ORTHOGONAL_UNIFORM, S.SH24: MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME,
    S.SH31: MeshClass.ORTHOGONAL_UNIFORM, S.SH31A: MeshClass.MOVING_FLAT_LAYERS,
    S.SH31N: MeshClass.MASS_COORDINATE, S.SH32: MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME,
    S.SH33: MeshClass.ORTHOGONAL_UNIFORM, S.SH34: MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME,
    S.SH41: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE, S.SH42: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE,
    S.SH44A: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE, S.SH44B: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE,
    S.SH45A: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE, S.SH45B: MeshClass.ORTHOGONAL_NONUNIFORM_SPACE,
    S.SH51: MeshClass.ORTHOGONAL_UNIFORM, S.SH52: MeshClass.ORTHOGONAL_UNIFORM,
    S.SH53: MeshClass.MOVING_FLAT_LAYERS, S.SH54E: MeshClass.MOVING_FLAT_LAYERS,
    S.SH54I: MeshClass.MOVING_FLAT_LAYERS, S.EQ55A: MeshClass.ORTHOGONAL_UNIFORM,
    S.TS5G: MeshClass.MASS_COORDINATE, S.TS5U: MeshClass.MASS_COORDINATE,
}

ORTHOGONAL = {k for k, v in GEOMETRY.items() if v in (
    MeshClass.ORTHOGONAL_UNIFORM, MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME,
    MeshClass.ORTHOGONAL_NONUNIFORM_SPACE)}
MOVING = {S.SH31A, S.SH53, S.SH54E, S.SH54I, S.TS5G, S.TS5U}
MASS = {S.SH31N, S.TS5G, S.TS5U}
# schemes whose formulas need u > 0
POSITIVE = {S.SH31, S.SH31A, S.SH31N, S.SH32, S.SH33, S.SH34, S.SH41, S.SH42, S.SH44A,
            S.SH44B, S.SH45A, S.SH45B, S.SH52, S.SH53, S.SH54E, S.SH54I, S.TS5G, S.TS5U}
# log-time schemes that come in an exact-image and a printed logarithmic form
LOG32 = {S.SH32, S.SH34, S.SH42, S.SH45A, S.SH45B}


@dataclass(frozen=True)
class SchemeParams:
    """Numerical parameters of a scheme run.

    Parameters
    ----------
    model : HeatModel
        Concrete model (all case parameters bound).
    weight_alpha : float
        Explicit weight of the mass-coordinate scheme (1 = explicit).
    K_fn, Q_fn : callable, optional
        Coefficients for the arbitrary-K/Q cases.
    boundary : {"dirichlet", "copy-ends"}
        End-node policy of ``step``.
    boundary_fn : callable, optional
        ``t -> ((x_left, u_left), (x_right, u_right))`` giving exact end data
        under the Dirichlet policy.  Without it end nodes are frozen.
    track_residual : bool
        Evaluate the step residual reported in ``StepResult.max_residual``;
        switch off for long refinement studies.
    log_time_form : bool
        Use the printed logarithmic time difference
        ``sigma*u*(delta*ln(u_hat/u) - tau)/(e^{delta sigma tau} - 1)`` instead of
        the exact image ``sigma*delta*(u_hat e^{-delta tau} - u)/(e^{delta sigma tau} - 1)``.
    """

    model: HeatModel
    weight_alpha: float = 1.0
    K_fn: Optional[Callable] = None
    Q_fn: Optional[Callable] = None
    boundary: str = "dirichlet"
    boundary_fn: Optional[Callable] = None
    log_time_form: bool = False
    newton_tol: float = 1e-13
    max_iter: int = 50
    track_residual: bool = True

    def __post_init__(self):
        if not 0.0 <= self.weight_alpha <= 1.0:
            raise DomainError("weight_alpha must lie in [0, 1]")
        b = self.boundary.lower().replace("_", "-")
        if b in ("copyends",):
            b = "copy-ends"
        if b not in ("dirichlet", "copy-ends"):
            raise DomainError(f"unknown boundary policy {self.boundary!r}")
        object.__setattr__(self, "boundary", b)

    def K(self, u):
        if self.K_fn is not None:
            return np.asarray(self.K_fn(u), dtype=float) * np.ones_like(np.asarray(u, float))
        return self.model.K(u)

    def Q(self, u):
        if self.Q_fn is not None:
            return np.asarray(self.Q_fn(u), dtype=float) * np.ones_like(np.asarray(u, float))
        return self.model.Q(u)


def as_params(p) -> SchemeParams:
    return p if isinstance(p, SchemeParams) else SchemeParams(model=p)


@dataclass(frozen=True)
class StepResult:
    layer: Layer
    iterations: int
    max_residual: float


# ------------------------------------------------------------------ pieces

def _sig(p: SchemeParams) -> float:
    return p.model.sigma_eff


def _flux_terms(K, st: Stencil) -> list:
    """Conservative three-point diffusion with midpoint conductivities."""
    hbar = 0.5 * (st.h_plus + st.h_minus)
    fp = K(0.5 * (st.u_plus + st.u)) * (st.u_plus - st.u) / st.h_plus
    fm = K(0.5 * (st.u + st.u_minus)) * (st.u - st.u_minus) / st.h_minus
    return [fp / hbar, -fm / hbar]


def _lap_terms(st: Stencil) -> list:
    hbar = 0.5 * (st.h_plus + st.h_minus)
    return [(st.u_plus - st.u) / st.h_plus / hbar, -(st.u - st.u_minus) / st.h_minus / hbar]


def _critical_terms(st: Stencil) -> list:
    """Diffusion part of the K = u^(-4/3) schemes, written with f = u^(-1/3)."""
    f, fp, fm = st.u ** (-1 / 3), st.u_plus ** (-1 / 3), st.u_minus ** (-1 / 3)
    c = 1.5 * (st.h_plus + st.h_minus) / (st.h_plus * st.h_minus)
    return [-c * (fp - f) / st.h_plus, c * (f - fm) / st.h_minus]


def _critical_hyp_terms(st: Stencil) -> list:
    f, fp, fm = st.u ** (-1 / 3), st.u_plus ** (-1 / 3), st.u_minus ** (-1 / 3)
    ap, am = st.h_plus / SQ3, st.h_minus / SQ3
    c = 0.5 * (1 / np.tanh(ap) + 1 / np.tanh(am))
    return [-c * (fp - f * np.cosh(ap)) / np.sinh(ap), c * (f * np.cosh(am) - fm) / np.sinh(am)]


def _critical_trig_terms(st: Stencil) -> list:
    f, fp, fm = st.u ** (-1 / 3), st.u_plus ** (-1 / 3), st.u_minus ** (-1 / 3)
    ap, am = st.h_plus / SQ3, st.h_minus / SQ3
    c = 0.5 * (1 / np.tan(ap) + 1 / np.tan(am))
    return [-c * (fp - f * np.cos(ap)) / np.sin(ap), c * (f * np.cos(am) - fm) / np.sin(am)]


def _rhs_terms(sid: SchemeId, p: SchemeParams, st: Stencil) -> list:
    """Right-hand side terms ``R`` of an orthogonal scheme ``L(u_hat, u) = R``."""
    m = p.model
    if sid is S.SH11:
        return _flux_terms(p.K, st) + [p.Q(st.u)]
    if sid is S.SH12:
        return _flux_terms(p.K, st)
    if sid in (S.SH21, S.SH22):
        return _flux_terms(np.exp, st)
    if sid is S.SH23:
        return _flux_terms(np.exp, st) + [m.sign * np.exp(m.exp_alpha * st.u)]
    if sid is S.SH24:
        return _flux_terms(np.exp, st) + [m.sign * np.exp(st.u)]
    if sid in (S.SH31, S.SH32):
        sg = _sig(p)
        return _flux_terms(lambda v: v ** sg, st)
    if sid is S.SH33:
        sg = _sig(p)
        return _flux_terms(lambda v: v ** sg, st) + [m.sign * st.u ** m.n]
    if sid is S.SH34:
        sg = _sig(p)
        return _flux_terms(lambda v: v ** sg, st) + [m.sign * st.u ** (sg + 1)]
    if sid in (S.SH41, S.SH42):
        return _critical_terms(st)
    if sid in (S.SH44A, S.SH45A):
        return _critical_hyp_terms(st)
    if sid in (S.SH44B, S.SH45B):
        return _critical_trig_terms(st)
    if sid is S.SH51:
        return _lap_terms(st) + [m.sign * np.exp(st.u)]
    if sid is S.SH52:
        return _lap_terms(st) + [m.sign * st.u ** m.n]
    if sid is S.EQ55A:
        return _lap_terms(st)
    raise UnknownCase(f"{sid} is not an orthogonal scheme")


def _time_kind(sid: SchemeId, p: SchemeParams) -> str:
    if sid in (S.SH22, S.SH24):
        return "log22"
    if sid in LOG32:
        return "log32" if p.log_time_form else "exp32"
    return "linear"


def _lhs(kind: str, p: SchemeParams, st: Stencil):
    if kind == "linear":
        return (st.u_hat - st.u) / st.tau
    d = p.model.delta
    if kind == "log22":
        return (d * (st.u_hat - st.u) - st.tau) / np.expm1(d * st.tau)
    sg = _sig(p)
    em1 = np.expm1(d * sg * st.tau)
    if kind == "exp32":
        return sg * d * (st.u_hat * np.exp(-d * st.tau) - st.u) / em1
    return sg * st.u * (d * np.log(st.u_hat / st.u) - st.tau) / em1


def _solve_lhs(kind: str, p: SchemeParams, st: Stencil, R):
    """Invert ``L(u_hat, u) = R`` for ``u_hat``."""
    if kind == "linear":
        return st.u + st.tau * R
    d = p.model.delta
    if kind == "log22":
        return st.u + d * (st.tau + np.expm1(d * st.tau) * R)
    sg = _sig(p)
    em1 = np.expm1(d * sg * st.tau)
    if kind == "exp32":
        return np.exp(d * st.tau) * (st.u + d * em1 * R / sg)
    return st.u * np.exp(d * (st.tau + em1 * R / (sg * st.u)))


# ------------------------------------------------------------- moving pieces

def _ln_slopes(u, up, um, hp, hm):
    return np.log(up / u) / hp, np.log(u / um) / hm


def _sh53_parts(p: SchemeParams, st: Stencil):
    d = p.model.delta
    gx, gxb = _ln_slopes(st.u, st.u_plus, st.u_minus, st.h_plus, st.h_minus)
    hs = st.h_plus + st.h_minus
    em1 = np.expm1(d * st.tau)
    mesh = [d * st.dx, 2 * em1 * (st.h_minus / hs * gx + st.h_plus / hs * gxb)]
    lhs2 = 4 * (-np.expm1(-d * st.tau)) * (np.log(st.u_hat) - np.exp(d * st.tau) * np.log(st.u))
    rhs2 = 8 / d * em1 ** 2 / hs * (gx - gxb)
    value = [d * st.dx ** 2, lhs2, -rhs2]
    return value, mesh


# the printed value equations compare against the constant 1; carrying it as a
# +1/-1 pair keeps it in the normalization scale without changing the sum
_UNIT = [1.0, -1.0]


def _sh54_mesh_rhs(u, up, um, hp, hm, tau):
    return 2 * tau / (hp + hm) * (-(hm / hp) * np.log(up / u) + (hp / hm) * np.log(um / u))


def _sh54_value_rhs(u, up, um, hp, hm, tau):
    return 4 * tau / (hp + hm) * (np.log(up / u) / hp + np.log(um / u) / hm)


def _sh54e_parts(st: Stencil):
    a = _sh54_mesh_rhs(st.u, st.u_plus, st.u_minus, st.h_plus, st.h_minus, st.tau)
    b = _sh54_value_rhs(st.u, st.u_plus, st.u_minus, st.h_plus, st.h_minus, st.tau)
    lhs = np.expm1(2 * np.log(st.u / st.u_hat) - st.dx ** 2 / (2 * st.tau))
    return [lhs, b] + _UNIT, [st.dx, -a]


def _sh54i_parts(st: Stencil):
    a = _sh54_mesh_rhs(st.u_hat, st.u_hat_plus, st.u_hat_minus, st.h_plus_hat,
                       st.h_minus_hat, st.tau)
    b = _sh54_value_rhs(st.u_hat, st.u_hat_plus, st.u_hat_minus, st.h_plus_hat,
                        st.h_minus_hat, st.tau)
    lhs = np.expm1(2 * np.log(st.u_hat / st.u) + st.dx ** 2 / (2 * st.tau))
    return [lhs, -b] + _UNIT, [st.dx, -a]


def _ts5_rhs(sid: SchemeId, st: Stencil):
    lp, lm = np.log(st.u_plus / st.u), np.log(st.u_minus / st.u)
    r, rm, tau = st.rho, st.rho_minus, st.tau
    if sid is S.TS5U:
        hs = st.hs_plus
        a = 2 * tau * (-r ** 2 * lp + rm ** 2 * lm) / (hs * (r + rm))
        b = 4 * tau * r * rm / (hs ** 2 * (r + rm)) * (r * lp + rm * lm)
        return a, b
    hp, hm = st.hs_plus, st.hs_minus
    den = hp / r + hm / rm
    a = 2 * tau * (-(hm / hp) * (r / rm) * lp + (hp / hm) * (rm / r) * lm) / den
    b = 4 * tau * (r / hp * lp + rm / hm * lm) / den
    return a, b


def _ts5_parts(sid: SchemeId, st: Stencil):
    a, b = _ts5_rhs(sid, st)
    lhs = np.expm1(2 * np.log(st.u / st.u_hat) - st.dx ** 2 / (2 * st.tau))
    aux = [
        [st.rho_hat * st.h_plus_hat, -st.rho * st.h_plus],
        [st.rho_hat_minus * st.h_minus_hat, -st.rho_minus * st.h_minus],
        [st.rho * st.h_plus, -st.hs_plus],
        [st.rho_minus * st.h_minus, -st.hs_minus],
    ]
    return [lhs, b] + _UNIT, [st.dx, -a], aux


def _sh31a_parts(p: SchemeParams, st: Stencil):
    sg = _sig(p)
    dp = (st.u_plus ** sg - st.u ** sg) / st.h_plus
    dm = (st.u ** sg - st.u_minus ** sg) / st.h_minus
    mesh = [st.dx / st.tau, (dp + dm) / (2 * sg)]
    value = [0.5 * (st.u_hat + st.u_hat_plus) * st.h_plus_hat,
             -0.5 * (st.u + st.u_plus) * st.h_plus]
    return value, mesh


def _sh31n_parts(p: SchemeParams, st: Stencil):
    sg, a = _sig(p), p.weight_alpha
    q = sg + 1
    hs = st.hs_plus
    P = lambda v: v ** q
    lap = (P(st.u_plus) - 2 * P(st.u) + P(st.u_minus)) / hs ** 2
    laph = (P(st.u_hat_plus) - 2 * P(st.u_hat) + P(st.u_hat_minus)) / hs ** 2
    value = [(1 / st.u_hat - 1 / st.u) / st.tau, a / q * lap, (1 - a) / q * laph]
    cd = (P(st.u_plus) - P(st.u_minus)) / (2 * hs)
    cdh = (P(st.u_hat_plus) - P(st.u_hat_minus)) / (2 * hs)
    mesh = [st.dx / st.tau, a / q * cd, (1 - a) / q * cdh]
    aux = [
        [st.h_plus / hs, -0.5 * (1 / st.u + 1 / st.u_plus)],
        [st.h_minus / hs, -0.5 * (1 / st.u_minus + 1 / st.u)],
        [st.h_plus_hat / hs, -0.5 * (1 / st.u_hat + 1 / st.u_hat_plus)],
        [st.h_minus_hat / hs, -0.5 * (1 / st.u_hat_minus + 1 / st.u_hat)],
    ]
    return value, mesh, aux


# ------------------------------------------------------------ public residuals

def equations(scheme, params, s: Stencil) -> list:
    """All equations of a scheme on ``s`` as lists of additive terms.

    Returns ``[value_terms, mesh_terms, *aux_terms]``; orthogonal schemes
    return only the value equation.
    """
    sid = SchemeId(scheme)
    p = as_params(params)
    _check_stencil(sid, s)
    if sid in ORTHOGONAL:
        return [[_lhs(_time_kind(sid, p), p, s)] + [-r for r in _rhs_terms(sid, p, s)]]
    if sid is S.SH53:
        v, m = _sh53_parts(p, s)
        return [v, m]
    if sid is S.SH54E:
        return list(_sh54e_parts(s))
    if sid is S.SH54I:
        return list(_sh54i_parts(s))
    if sid in (S.TS5G, S.TS5U):
        _need_mass(s, density=True)
        v, m, aux = _ts5_parts(sid, s)
        return [v, m] + aux
    if sid is S.SH31A:
        v, m = _sh31a_parts(p, s)
        return [v, m]
    if sid is S.SH31N:
        _need_mass(s)
        v, m, aux = _sh31n_parts(p, s)
        return [v, m] + aux
    raise UnknownCase(str(sid))


def _check_stencil(sid: SchemeId, s: Stencil):
    for name in ("tau", "h_plus", "h_minus", "h_plus_hat", "h_minus_hat"):
        if np.any(np.asarray(getattr(s, name)) <= 0):
            raise DomainError(f"stencil step {name} must be positive")
    if sid in POSITIVE:
        for name in ("u", "u_plus", "u_minus", "u_hat", "u_hat_plus", "u_hat_minus"):
            if np.any(np.asarray(getattr(s, name)) <= 0):
                raise DomainError(f"{sid.value} needs positive values, {name} is not")


def _need_mass(s: Stencil, density: bool = False):
    if not s.has_mass:
        raise MissingMassGrid("this scheme needs mass-coordinate data on the stencil")
    if density and not s.has_density:
        raise MissingMassGrid("this scheme needs a density on the stencil")


def residual(scheme, params, s: Stencil):
    """Raw defect ``F(s)`` of the value equation (float for a single stencil)."""
    eqs = equations(scheme, params, s)
    return _squeeze(sum(eqs[0]))


def mesh_residual(scheme, params, s: Stencil):
    """Raw defect of the mesh equation; zero for orthogonal schemes."""
    eqs = equations(scheme, params, s)
    if len(eqs) < 2:
        return _squeeze(0.0 * np.asarray(s.u, dtype=float))
    return _squeeze(sum(eqs[1]))


def _squeeze(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def geometry_defect(scheme, s: Stencil) -> np.ndarray:
    """Departure of ``s`` from the mesh geometry the scheme is defined on."""
    sid = SchemeId(scheme)
    g = GEOMETRY[sid]
    st = s.asarrays()
    scale = np.maximum(np.abs(st.h_plus), np.abs(st.h_minus))
    parts = [np.zeros(st.size)]
    if sid in ORTHOGONAL:
        parts += [np.abs(st.dx) / scale, np.abs(st.h_plus_hat - st.h_plus) / scale,
                  np.abs(st.h_minus_hat - st.h_minus) / scale]
        if g is not MeshClass.ORTHOGONAL_NONUNIFORM_SPACE:
            parts.append(np.abs(st.h_plus - st.h_minus) / scale)
    if sid in MASS and st.has_mass:
        ss = np.maximum(np.abs(st.hs_plus), np.abs(st.hs_minus))
        if st.ds is not None:
            parts.append(np.abs(st.ds) / ss)
        if sid in (S.SH31N, S.TS5U):
            parts.append(np.abs(st.hs_plus - st.hs_minus) / ss)
    return np.max(np.stack(parts), axis=0)


def _equation_defects(sid: SchemeId, params, s: Stencil) -> list:
    eqs = equations(sid, params, s)
    out = [normalized(e) for e in eqs]
    if sid not in ORTHOGONAL:
        # node drift is measured against the local step, so a drift that is
        # zero up to rounding does not read as an O(1) relative error
        out[1] = normalized(eqs[1], np.maximum(s.h_plus, s.h_minus))
    return out


def scheme_defect(scheme, params, s: Stencil) -> np.ndarray:
    """Per-stencil maximum of normalized equation defects and geometry defect."""
    sid = SchemeId(scheme)
    parts = _equation_defects(sid, params, s) + [geometry_defect(sid, s)]
    n = max(np.size(v) for v in parts)
    return np.max(np.stack([np.broadcast_to(v, (n,)) for v in parts]), axis=0)


# ------------------------------------------------------------------ solvers

def explicit_update(scheme, params, s: Stencil):
    """Upper-centre unknowns of an explicit scheme from lower-layer data.

    Returns ``u_hat`` for orthogonal schemes and ``(dx, u_hat)`` for moving and
    mass-coordinate schemes whose value equation is explicit.
    """
    sid = SchemeId(scheme)
    p = as_params(params)
    if sid in ORTHOGONAL:
        R = sum(_rhs_terms(sid, p, s))
        return _solve_lhs(_time_kind(sid, p), p, s, R)
    if sid is S.SH53:
        d = p.model.delta
        gx, gxb = _ln_slopes(s.u, s.u_plus, s.u_minus, s.h_plus, s.h_minus)
        hs = s.h_plus + s.h_minus
        em1 = np.expm1(d * s.tau)
        dx = -2 * d * em1 * (s.h_minus / hs * gx + s.h_plus / hs * gxb)
        rhs2 = 8 / d * em1 ** 2 / hs * (gx - gxb)
        lnu = np.exp(d * s.tau) * np.log(s.u) + (rhs2 - d * dx ** 2) / (4 * -np.expm1(-d * s.tau))
        return dx, np.exp(lnu)
    if sid in (S.SH54E, S.TS5G, S.TS5U):
        if sid is S.SH54E:
            a = _sh54_mesh_rhs(s.u, s.u_plus, s.u_minus, s.h_plus, s.h_minus, s.tau)
            b = _sh54_value_rhs(s.u, s.u_plus, s.u_minus, s.h_plus, s.h_minus, s.tau)
        else:
            a, b = _ts5_rhs(sid, s)
        R = 1 - b
        if np.any(R <= 0):
            raise StabilityBreach("time step too large: nonpositive right-hand side")
        return a, s.u * np.exp(-a ** 2 / (4 * s.tau)) / np.sqrt(R)
    if sid is S.SH31A:
        sg = _sig(p)
        dp = (s.u_plus ** sg - s.u ** sg) / s.h_plus
        dm = (s.u ** sg - s.u_minus ** sg) / s.h_minus
        return -s.tau * (dp + dm) / (2 * sg), None
    if sid is S.SH31N:
        if p.weight_alpha != 1.0:
            raise DomainError("the mass-coordinate scheme is implicit unless weight_alpha = 1")
        sg = _sig(p)
        q, hs = sg + 1, s.hs_plus
        lap = (s.u_plus ** q - 2 * s.u ** q + s.u_minus ** q) / hs ** 2
        inv = 1 / s.u - s.tau / q * lap
        if np.any(inv <= 0):
            raise StabilityBreach("time step too large: 1/u_hat is not positive")
        dx = -s.tau / q * (s.u_plus ** q - s.u_minus ** q) / (2 * hs)
        return dx, 1 / inv
    raise UnknownCase(f"{sid} has no explicit update")


# --------------------------------------------------------------- layer steps

def _check_model(sid: SchemeId, p: SchemeParams):
    m = p.model
    if sid is S.SH11 and (p.K_fn is None or p.Q_fn is None):
        raise DomainError("SH11 needs K_fn and Q_fn")
    if sid is S.SH12 and p.K_fn is None:
        raise DomainError("SH12 needs K_fn")
    if sid in (S.SH11, S.SH12):
        return
    entry = lookup(m)
    if sid.value not in entry.schemes:
        raise UnknownCase(f"{sid.value} does not belong to case {entry.key}")
    if not m.is_concrete:
        raise DomainError(f"model parameters {m.free_parameters} are not bound")


def _lower_stencil(layer: Layer, tau: float) -> Stencil:
    """Interior stencils with only the lower layer filled in."""
    x, u = layer.x, layer.u
    nan = np.full(len(x) - 2, np.nan)
    kw = dict(t=np.full(len(x) - 2, layer.t), tau=np.full(len(x) - 2, tau), x=x[1:-1],
              h_plus=x[2:] - x[1:-1], h_minus=x[1:-1] - x[:-2],
              h_plus_hat=nan, h_minus_hat=nan, dx=nan, u=u[1:-1], u_plus=u[2:],
              u_minus=u[:-2], u_hat=nan, u_hat_plus=nan, u_hat_minus=nan)
    if layer.s is not None:
        s = layer.s
        kw.update(s=s[1:-1], hs_plus=s[2:] - s[1:-1], hs_minus=s[1:-1] - s[:-2], ds=0 * nan)
    if layer.rho is not None:
        r = layer.rho
        kw.update(rho_minus=r[:-2], rho=r[1:-1], rho_plus=r[2:])
    return Stencil(**kw)


def _ends(p: SchemeParams, layer: Layer, t_new: float):
    if p.boundary_fn is None:
        return None
    (xl, ul), (xr, ur) = p.boundary_fn(t_new)
    return float(xl), float(ul), float(xr), float(ur)


def _finish(sid: SchemeId, layer: Layer, t_new, x_new, u_new, rho_new=None,
            iterations=0, p=None) -> StepResult:
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(u_new))):
        raise StabilityBreach(f"{sid.value} produced non-finite values")
    if np.max(np.abs(u_new)) > OVERFLOW_GUARD:
        raise StabilityBreach(f"{sid.value} exceeded the overflow guard; tau is too large")
    if np.any(np.diff(x_new) <= 0):
        raise StabilityBreach(f"{sid.value} produced crossing nodes")
    if sid in POSITIVE and np.any(u_new <= 0):
        raise StabilityBreach(f"{sid.value} produced nonpositive values")
    new = Layer(t_new, x_new, u_new, s=layer.s, rho=rho_new)
    res = 0.0
    if p is not None and p.track_residual and len(layer) > 2:
        st = from_layers(layer, new)
        d = _equation_defects(sid, p, st)
        if sid is S.SH31A:
            d = d[1:]
        elif sid in (S.SH31N, S.TS5G, S.TS5U):
            d = d[:2]
        res = float(max(np.max(v) for v in d))
    return StepResult(new, iterations, res)


def step(scheme, params, layer: Layer, tau: float) -> StepResult:
    """Advance one time layer by ``tau``.

    Raises
    ------
    StabilityBreach
        Crossing nodes, nonpositive values where positivity is required, or
        non-finite output.
    SolverDiverged
        An implicit solve did not converge.
    """
    sid = SchemeId(scheme)
    p = as_params(params)
    _check_model(sid, p)
    if tau <= 0:
        raise DomainError("tau must be positive")
    if len(layer) < 3:
        raise DomainError("a layer needs at least three nodes")
    t_new = layer.t + tau
    if sid in ORTHOGONAL:
        return _step_orthogonal(sid, p, layer, tau, t_new)
    if sid in (S.SH53, S.SH54E, S.TS5G, S.TS5U):
        return _step_moving_explicit(sid, p, layer, tau, t_new)
    if sid is S.SH54I:
        return _step_sh54i(p, layer, tau, t_new)
    if sid is S.SH31A:
        return _step_sh31a(p, layer, tau, t_new)
    if sid is S.SH31N:
        return _step_sh31n(p, layer, tau, t_new)
    raise UnknownCase(str(sid))


def _step_orthogonal(sid, p, layer, tau, t_new):
    st = _lower_stencil(layer, tau)
    with np.errstate(all="ignore"):
        uh = explicit_update(sid, p, st)
    u_new = layer.u.copy()
    u_new[1:-1] = uh
    ends = _ends(p, layer, t_new)
    if p.boundary == "copy-ends":
        u_new[0], u_new[-1] = u_new[1], u_new[-2]
    elif ends is not None:
        u_new[0], u_new[-1] = ends[1], ends[3]
    return _finish(sid, layer, t_new, layer.x.copy(), u_new, layer.rho, p=p)


def _apply_moving_ends(p, layer, t_new, x_new, u_new):
    ends = _ends(p, layer, t_new)
    if p.boundary == "copy-ends":
        x_new[0] = layer.x[0] + (x_new[1] - layer.x[1])
        x_new[-1] = layer.x[-1] + (x_new[-2] - layer.x[-2])
        u_new[0], u_new[-1] = u_new[1], u_new[-2]
    elif ends is not None:
        x_new[0], u_new[0], x_new[-1], u_new[-1] = ends


def _step_moving_explicit(sid, p, layer, tau, t_new):
    if sid in (S.TS5G, S.TS5U) and (layer.s is None or layer.rho is None):
        raise MissingMassGrid(f"{sid.value} needs s and rho on the layer")
    st = _lower_stencil(layer, tau)
    with np.errstate(all="ignore"):
        dx, uh = explicit_update(sid, p, st)
    x_new, u_new = layer.x.copy(), layer.u.copy()
    x_new[1:-1] += dx
    u_new[1:-1] = uh
    _apply_moving_ends(p, layer, t_new, x_new, u_new)
    rho_new = None
    if sid in (S.TS5G, S.TS5U):
        if np.any(np.diff(x_new) <= 0):
            raise StabilityBreach(f"{sid.value} produced crossing nodes")
        rho_new = layer.rho.copy()
        rho_new[:-1] = layer.rho[:-1] * np.diff(layer.x) / np.diff(x_new)
    return _finish(sid, layer, t_new, x_new, u_new, rho_new, p=p)


def _step_sh31a(p, layer, tau, t_new):
    st = _lower_stencil(layer, tau)
    dx, _ = explicit_update(S.SH31A, p, st)
    x_new, u_new = layer.x.copy(), layer.u.copy()
    x_new[1:-1] += dx
    ends = _ends(p, layer, t_new)
    if p.boundary == "copy-ends":
        x_new[0] = layer.x[0] + dx[0]
        x_new[-1] = layer.x[-1] + dx[-1]
    elif ends is not None:
        x_new[0], x_new[-1] = ends[0], ends[2]
        u_new[0] = ends[1]
    if np.any(np.diff(x_new) <= 0):
        raise StabilityBreach("SH31A produced crossing nodes")
    # cell heat (u_i + u_{i+1}) h_i / 2 is carried over, sweeping from the left end
    heat = (layer.u[:-1] + layer.u[1:]) * np.diff(layer.x)
    hh = np.diff(x_new)
    for i in range(len(x_new) - 1):
        u_new[i + 1] = heat[i] / hh[i] - u_new[i]
    return _finish(S.SH31A, layer, t_new, x_new, u_new, p=p)


def _solve_sh54i_guess(p, layer, tau, t_new):
    st = _lower_stencil(layer, tau)
    with np.errstate(all="ignore"):
        dx, uh = explicit_update(S.SH54E, p, st)
    x_new, u_new = layer.x.copy(), layer.u.copy()
    if np.all(np.isfinite(uh)) and np.all(np.isfinite(dx)):
        x_new[1:-1] += dx
        u_new[1:-1] = uh
    if np.any(np.diff(x_new) <= 0):
        x_new, u_new = layer.x.copy(), layer.u.copy()
    return x_new, u_new


def _step_sh54i(p, layer, tau, t_new):
    n = len(layer)
    x0, u0 = layer.x, layer.u
    xg, ug = _solve_sh54i_guess(p, layer, tau, t_new)
    ends = _ends(p, layer, t_new)

    def assemble(v):
        xn, un = xg.copy(), ug.copy()
        xn[1:-1] = v[: n - 2]
        un[1:-1] = np.exp(v[n - 2:])
        if p.boundary == "copy-ends":
            xn[0] = x0[0] + (xn[1] - x0[1])
            xn[-1] = x0[-1] + (xn[-2] - x0[-2])
            un[0], un[-1] = un[1], un[-2]
        elif ends is not None:
            xn[0], un[0], xn[-1], un[-1] = ends
        else:
            xn[0], un[0], xn[-1], un[-1] = x0[0], u0[0], x0[-1], u0[-1]
        return xn, un

    def G(v):
        xn, un = assemble(v)
        hp, hm = xn[2:] - xn[1:-1], xn[1:-1] - xn[:-2]
        if np.any(hp <= 0) or np.any(hm <= 0):
            return None
        lp, lm = np.log(un[2:] / un[1:-1]), np.log(un[:-2] / un[1:-1])
        dx = xn[1:-1] - x0[1:-1]
        r1 = dx - 2 * tau / (hp + hm) * (-(hm / hp) * lp + (hp / hm) * lm)
        arg = 1 + 4 * tau / (hp + hm) * (lp / hp + lm / hm)
        if np.any(arg <= 0):
            return None
        r2 = 2 * np.log(un[1:-1] / u0[1:-1]) + dx ** 2 / (2 * tau) - np.log(arg)
        return np.concatenate([r1 / np.maximum(hp, hm), r2])

    v = np.concatenate([xg[1:-1], np.log(ug[1:-1])])
    m = n - 2
    with np.errstate(all="ignore"):
        g = G(v)
        if g is None:
            # the explicit predictor can crowd nodes against pinned ends
            v = np.concatenate([x0[1:-1], np.log(u0[1:-1])])
            g = G(v)
        if g is None:
            raise StabilityBreach("SH54I initial guess is inadmissible")
        it = 0
        while np.max(np.abs(g)) > p.newton_tol:
            if it >= p.max_iter:
                raise SolverDiverged(f"SH54I Newton stalled at {np.max(np.abs(g)):.3g}")
            J = np.zeros((2 * m, 2 * m))
            for color in range(3):
                idx = np.arange(color, m, 3)
                for off in (0, m):
                    e = 1e-7 * np.maximum(1.0, np.abs(v[idx + off]))
                    vp = v.copy()
                    vp[idx + off] += e
                    gp = G(vp)
                    if gp is None:
                        raise StabilityBreach("SH54I Jacobian probe left the admissible set")
                    dg = (gp - g)
                    for k, j in enumerate(idx):
                        rows = [r for r in (j - 1, j, j + 1) if 0 <= r < m]
                        rows = rows + [r + m for r in rows]
                        J[rows, j + off] = dg[rows] / e[k]
            delta = np.linalg.solve(J, -g)
            lam, norm0 = 1.0, np.max(np.abs(g))
            while True:
                gn = G(v + lam * delta)
                if gn is not None and np.max(np.abs(gn)) < norm0 * (1 - 1e-4 * lam) + 1e-15:
                    break
                lam *= 0.5
                if lam < 1e-10:
                    raise SolverDiverged("SH54I line search failed")
            v, g = v + lam * delta, gn
            it += 1
    xn, un = assemble(v)
    return _finish(S.SH54I, layer, t_new, xn, un, iterations=it, p=p)


def _step_sh31n(p, layer, tau, t_new):
    if layer.s is None:
        raise MissingMassGrid("SH31N needs the mass coordinate s on the layer")
    s = layer.s
    hs_all = np.diff(s)
    hs = hs_all[0]
    if np.max(np.abs(hs_all - hs)) > 1e-12 * abs(hs):
        raise DomainError("SH31N needs a uniform mass grid")
    sg, a = _sig(p), p.weight_alpha
    q = sg + 1
    u0 = layer.u
    n = len(layer)
    ends = _ends(p, layer, t_new)
    copy = p.boundary == "copy-ends"
    gl, gr = (u0[0], u0[-1]) if ends is None else (ends[1], ends[3])
    lap0 = (u0[2:] ** q - 2 * u0[1:-1] ** q + u0[:-2] ** q) / hs ** 2

    def full(v):
        un = np.empty(n)
        un[1:-1] = v
        un[0], un[-1] = (v[0], v[-1]) if copy else (gl, gr)
        return un

    def G(v):
        un = full(v)
        laph = (un[2:] ** q - 2 * un[1:-1] ** q + un[:-2] ** q) / hs ** 2
        return (1 / v - 1 / u0[1:-1]) / tau + a / q * lap0 + (1 - a) / q * laph

    it = 0
    if a == 1.0:
        inv = 1 / u0[1:-1] - tau / q * lap0
        if np.any(inv <= 0):
            raise StabilityBreach("time step too large: 1/u_hat is not positive")
        v = 1 / inv
    else:
        inv = 1 / u0[1:-1] - tau / q * lap0
        v = np.where(inv > 0, 1 / np.where(inv > 0, inv, 1.0), u0[1:-1])
        m = n - 2
        with np.errstate(all="ignore"):
            g = G(v)
            scale = 1 / (tau * u0[1:-1])
            while np.max(np.abs(g) / scale) > p.newton_tol:
                if it >= p.max_iter:
                    raise SolverDiverged(f"SH31N Newton stalled at {np.max(np.abs(g) / scale):.3g}")
                dP = q * v ** sg * (1 - a) / q / hs ** 2
                diag = -1 / (tau * v ** 2) - 2 * dP
                if copy:
                    diag[0] += dP[0]
                    diag[-1] += dP[-1]
                ab = np.zeros((3, m))
                ab[0, 1:] = dP[1:]
                ab[1] = diag
                ab[2, :-1] = dP[:-1]
                delta = solve_banded((1, 1), ab, -g)
                lam = 1.0
                while np.any(v + lam * delta <= 0):
                    lam *= 0.5
                    if lam < 1e-12:
                        raise SolverDiverged("SH31N update left u > 0")
                v = v + lam * delta
                g = G(v)
                it += 1
    un = full(v)
    if np.any(un <= 0) or not np.all(np.isfinite(un)):
        raise StabilityBreach("SH31N produced nonpositive values")
    P0, Pn = u0 ** q, un ** q
    dx = -tau / q * (a * (P0[2:] - P0[:-2]) + (1 - a) * (Pn[2:] - Pn[:-2])) / (2 * hs)
    x_new = layer.x.copy()
    x_new[1:-1] += dx
    # end nodes carry boundary data; place them by the mass/length relation
    x_new[0] = x_new[1] - 0.5 * hs * (1 / un[0] + 1 / un[1])
    x_new[-1] = x_new[-2] + 0.5 * hs * (1 / un[-2] + 1 / un[-1])
    return _finish(S.SH31N, layer, t_new, x_new, un, iterations=it, p=p)


def run(scheme, params, layer0: Layer, times) -> list:
    """Integrate from ``layer0`` over the time levels ``times``.

    ``times`` is a :class:`TimeMesh` or an increasing array whose first entry
    equals ``layer0.t``.
    """
    t = times.t if isinstance(times, TimeMesh) else np.asarray(times, dtype=float)
    if abs(t[0] - layer0.t) > 1e-12 * max(1.0, abs(t[0])):
        raise DomainError("time mesh must start at the initial layer time")
    layers = [layer0]
    for k in range(1, len(t)):
        res = step(scheme, params, layers[-1], t[k] - t[k - 1])
        layers.append(res.layer.with_(t=t[k]))
    return layers


# ----------------------------------------------------------------- sampling

def sample_stencils(scheme, params, n: int, rng: np.random.Generator) -> Stencil:
    """Random admissible stencils satisfying every equation of the scheme.

    The lower layer samples a smooth positive profile on a unit-scaled mesh;
    the unknown upper values come from the scheme itself.
    """
    sid = SchemeId(scheme)
    p = as_params(params)
    t = rng.uniform(0.1, 0.5, n)
    x = rng.uniform(-0.5, 0.5, n)
    hp = rng.uniform(0.05, 0.15, n)
    hm = hp.copy() if GEOMETRY[sid] in (MeshClass.ORTHOGONAL_UNIFORM,
                                        MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME) \
        else rng.uniform(0.05, 0.15, n)
    tau = rng.uniform(0.05, 0.2, n) * np.minimum(hp, hm) ** 2
    amp = rng.uniform(0.7, 1.5, n)
    w = rng.uniform(1.0, 3.0, n)
    ph = rng.uniform(0, 2 * np.pi, n)

    def prof(z):
        return amp * (1 + 0.3 * np.sin(w * z + ph))

    if sid in ORTHOGONAL:
        um, u, up = prof(x - hm), prof(x), prof(x + hp)
        st = Stencil(t=t, tau=tau, x=x, h_plus=hp, h_minus=hm, h_plus_hat=hp,
                     h_minus_hat=hm, dx=np.zeros(n), u=u, u_plus=up, u_minus=um,
                     u_hat=u, u_hat_plus=up, u_hat_minus=um)
        uh = explicit_update(sid, p, st)
        if sid in POSITIVE:
            return st.replace(u_hat=uh, u_hat_plus=up * uh / u, u_hat_minus=um * uh / u)
        return st.replace(u_hat=uh, u_hat_plus=up + uh - u, u_hat_minus=um + uh - u)

    jitter = lambda: rng.uniform(0.9, 1.1, n)
    if sid in (S.SH53, S.SH54E, S.SH31A):
        um, u, up = prof(x - hm), prof(x), prof(x + hp)
        st = Stencil(t=t, tau=tau, x=x, h_plus=hp, h_minus=hm, h_plus_hat=hp * jitter(),
                     h_minus_hat=hm * jitter(), dx=np.zeros(n), u=u, u_plus=up, u_minus=um,
                     u_hat=u, u_hat_plus=up, u_hat_minus=um)
        dx, uh = explicit_update(sid, p, st)
        if sid is S.SH31A:
            uh = u * rng.uniform(0.95, 1.05, n)
            uhp = (u + up) * hp / st.h_plus_hat - uh
            return st.replace(dx=dx, u_hat=uh, u_hat_plus=uhp, u_hat_minus=um * uh / u)
        return st.replace(dx=dx, u_hat=uh, u_hat_plus=up * uh / u, u_hat_minus=um * uh / u)
    if sid is S.SH54I:
        uhm, uh, uhp = prof(x - hm), prof(x), prof(x + hp)
        hph, hmh = hp * jitter(), hm * jitter()
        dx = _sh54_mesh_rhs(uh, uhp, uhm, hph, hmh, tau)
        R = 1 + _sh54_value_rhs(uh, uhp, uhm, hph, hmh, tau)
        u = uh * np.exp(dx ** 2 / (4 * tau)) / np.sqrt(R)
        return Stencil(t=t, tau=tau, x=x - dx, h_plus=hp, h_minus=hm, h_plus_hat=hph,
                       h_minus_hat=hmh, dx=dx, u=u, u_plus=uhp * u / uh,
                       u_minus=uhm * u / uh, u_hat=uh, u_hat_plus=uhp, u_hat_minus=uhm)
    if sid in (S.TS5G, S.TS5U):
        s0 = rng.uniform(0.0, 1.0, n)
        hsp = rng.uniform(0.05, 0.15, n)
        hsm = hsp.copy() if sid is S.TS5U else rng.uniform(0.05, 0.15, n)
        r, rm, rp = (rng.uniform(0.7, 1.5, n) for _ in range(3))
        hxp, hxm = hsp / r, hsm / rm
        tau = rng.uniform(0.05, 0.2, n) * np.minimum(hxp, hxm) ** 2
        um, u, up = prof(x - hxm), prof(x), prof(x + hxp)
        hph, hmh = hxp * jitter(), hxm * jitter()
        st = Stencil(t=t, tau=tau, x=x, h_plus=hxp, h_minus=hxm, h_plus_hat=hph,
                     h_minus_hat=hmh, dx=np.zeros(n), u=u, u_plus=up, u_minus=um,
                     u_hat=u, u_hat_plus=up, u_hat_minus=um, s=s0, hs_plus=hsp,
                     hs_minus=hsm, ds=np.zeros(n), rho_minus=rm, rho=r, rho_plus=rp)
        dx, uh = explicit_update(sid, p, st)
        return st.replace(dx=dx, u_hat=uh, u_hat_plus=up * uh / u, u_hat_minus=um * uh / u,
                          rho_hat=r * hxp / hph, rho_hat_minus=rm * hxm / hmh,
                          rho_hat_plus=rp * rng.uniform(0.9, 1.1, n))
    if sid is S.SH31N:
        s0 = rng.uniform(0.0, 1.0, n)
        hs = rng.uniform(0.05, 0.15, n)
        um, u, up = prof(s0 - hs), prof(s0), prof(s0 + hs)
        tau = rng.uniform(0.05, 0.2, n) * hs ** 2 * np.minimum(np.minimum(u, up), um) ** 2
        st = Stencil(t=t, tau=tau, x=x, h_plus=0.5 * hs * (1 / u + 1 / up),
                     h_minus=0.5 * hs * (1 / um + 1 / u), h_plus_hat=hs, h_minus_hat=hs,
                     dx=np.zeros(n), u=u, u_plus=up, u_minus=um, u_hat=u, u_hat_plus=up,
                     u_hat_minus=um, s=s0, hs_plus=hs, hs_minus=hs, ds=np.zeros(n))
        a, sg = p.weight_alpha, _sig(p)
        q = sg + 1
        if a == 1.0:
            dx, uh = explicit_update(sid, p, st)
            uhp, uhm = up * uh / u, um * uh / u
        else:
            uhp, uhm = up * rng.uniform(0.97, 1.03, n), um * rng.uniform(0.97, 1.03, n)
            lap = (up ** q - 2 * u ** q + um ** q) / hs ** 2
            uh = u.copy()
            for _ in range(100):
                g = (1 / uh - 1 / u) / tau + a / q * lap + (1 - a) / q * (
                    uhp ** q - 2 * uh ** q + uhm ** q) / hs ** 2
                dg = -1 / (tau * uh ** 2) - 2 * (1 - a) * uh ** sg / hs ** 2
                d = -g / dg
                uh = uh + d
                if np.max(np.abs(d / uh)) < 1e-16:
                    break
            dx = -tau / q * (a * (up ** q - um ** q) + (1 - a) * (uhp ** q - uhm ** q)) / (2 * hs)
        return st.replace(dx=dx, u_hat=uh, u_hat_plus=uhp, u_hat_minus=uhm,
                          h_plus_hat=0.5 * hs * (1 / uh + 1 / uhp),
                          h_minus_hat=0.5 * hs * (1 / uhm + 1 / uh))
    raise UnknownCase(str(sid))
