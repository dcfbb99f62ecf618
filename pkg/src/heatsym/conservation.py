"""Discrete conservation laws of the mass-coordinate scheme and heat totals.

On a Lagrangian grid with uniform step ``h_s`` the scheme conserves the total
mass ``sum h_s`` identically, and the first moment ``sum x_i h_s`` changes
only through boundary fluxes of ``P = u^(sigma+1)``:

    sum (x_hat_i - x_i) h_s = -(tau/q) [a (P_{N+1}+P_N)/2 + (1-a)(P^_{N+1}+P^_N)/2]
                              +(tau/q) [a (P_{-1}+P_0)/2 + (1-a)(P^_{-1}+P^_0)/2]

with ``q = sigma + 1`` and the scheme weight ``a``.  Physical nodes are
``0..N``; the array ends of a layer (indices ``-1`` and ``N+1``) hold the
boundary ghost values written by the stepper.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import LayerMismatch, MissingMassGrid
from .meshes import Layer
from .schemes import SchemeParams, as_params


class Law(str, enum.Enum):
    TOTAL_MASS = "TotalMass"
    FIRST_MOMENT = "FirstMoment"
    TOTAL_HEAT_ORTHOGONAL = "TotalHeatOrthogonal"


@dataclass(frozen=True)
class ConservationReport:
    law: Law
    per_step_defect: np.ndarray = field(repr=False)
    max_defect: float

    @classmethod
    def from_defects(cls, law, defects) -> "ConservationReport":
        d = np.asarray(defects, dtype=float)
        return cls(Law(law), d, float(np.max(d)) if d.size else 0.0)

    def rows(self):
        """``(step, defect)`` pairs, steps counted from 1."""
        return [(k + 1, float(v)) for k, v in enumerate(self.per_step_defect)]


def _mass(layer: Layer) -> np.ndarray:
    if layer.s is None:
        raise MissingMassGrid("layer has no mass coordinate")
    return layer.s


def total_mass(layer: Layer) -> float:
    """``sum h_s`` over the grid intervals (0 for a single node)."""
    s = _mass(layer)
    return float(np.sum(np.diff(s)))


def first_moment(layer: Layer) -> float:
    """``sum x_i h_s`` over the physical (non-ghost) nodes."""
    s = _mass(layer)
    hs = np.diff(s)
    if hs.size == 0:
        return 0.0
    return float(np.sum(layer.x[1:-1]) * hs[0])


def moment_flux(prev: Layer, nxt: Layer, params) -> float:
    """Right-hand side of the first-moment balance between two layers."""
    p = as_params(params)
    q = p.model.sigma_eff + 1.0
    a = p.weight_alpha
    tau = nxt.t - prev.t
    P, Ph = prev.u ** q, nxt.u ** q
    right = a * (P[-1] + P[-2]) / 2 + (1 - a) * (Ph[-1] + Ph[-2]) / 2
    left = a * (P[0] + P[1]) / 2 + (1 - a) * (Ph[0] + Ph[1]) / 2
    return float(-tau / q * right + tau / q * left)


def first_moment_defect(prev: Layer, nxt: Layer, params: SchemeParams) -> float:
    """``|change of sum x_i h_s - boundary flux|`` for one mass-coordinate step.

    Raises
    ------
    MissingMassGrid
        A layer lacks ``s``.
    LayerMismatch
        The layers do not share the same mass grid.
    """
    s0, s1 = _mass(prev), _mass(nxt)
    if s0.shape != s1.shape or not np.array_equal(np.diff(s0), np.diff(s1)):
        raise LayerMismatch("consecutive layers must share the mass steps h_s")
    hs = np.diff(s0)
    if hs.size < 2:
        raise LayerMismatch("the balance needs two ghost nodes and one physical node")
    lhs = float(np.sum(nxt.x[1:-1] - prev.x[1:-1]) * hs[0])
    return abs(lhs - moment_flux(prev, nxt, params))


def total_heat_orthogonal(layer: Layer) -> float:
    """Trapezoidal total ``int u dx`` on one layer."""
    if len(layer) < 2:
        return 0.0
    return float(trapezoid(layer.u, layer.x))


def boundary_heat_flux(layer: Layer, K: Callable) -> tuple:
    """Midpoint fluxes ``K((u_+ + u)/2) (u_+ - u)/h`` at the two end cells."""
    x, u = layer.x, layer.u
    left = K(0.5 * (u[0] + u[1])) * (u[1] - u[0]) / (x[1] - x[0])
    right = K(0.5 * (u[-1] + u[-2])) * (u[-1] - u[-2]) / (x[-1] - x[-2])
    return float(left), float(right)


def heat_balance_defect(prev: Layer, nxt: Layer, K: Callable) -> float:
    """Heat budget defect of a flux-form orthogonal step with frozen end values.

    For ``u_hat - u = (tau/h)(F_{i+1/2} - F_{i-1/2})`` on a uniform mesh the
    trapezoidal total changes by ``tau (F_right - F_left)`` exactly.
    """
    fl, fr = boundary_heat_flux(prev, K)
    dH = total_heat_orthogonal(nxt) - total_heat_orthogonal(prev)
    return abs(dH - (nxt.t - prev.t) * (fr - fl))


def mass_report(layers: Sequence[Layer]) -> ConservationReport:
    m0 = total_mass(layers[0])
    return ConservationReport.from_defects(
        Law.TOTAL_MASS, [abs(total_mass(l) - m0) for l in layers[1:]])


def moment_report(layers: Sequence[Layer], params) -> ConservationReport:
    return ConservationReport.from_defects(
        Law.FIRST_MOMENT,
        [first_moment_defect(a, b, params) for a, b in zip(layers[:-1], layers[1:])])


def heat_report(layers: Sequence[Layer], K: Optional[Callable] = None) -> ConservationReport:
    """Per-step heat drift; with ``K`` the boundary flux is subtracted."""
    if K is None:
        h = [total_heat_orthogonal(l) for l in layers]
        d = np.abs(np.diff(h))
    else:
        d = [heat_balance_defect(a, b, K) for a, b in zip(layers[:-1], layers[1:])]
    return ConservationReport.from_defects(Law.TOTAL_HEAT_ORTHOGONAL, d)
