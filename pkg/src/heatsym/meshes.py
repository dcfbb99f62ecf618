"""Time meshes, spatial layers and the Lagrangian (mass) grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NonpositiveDensity


@dataclass(frozen=True)
class TimeMesh:
    """Strictly increasing time levels ``t_0 = 0 < t_1 < ... < t_k = T``."""

    t: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("time levels must be strictly increasing")
        object.__setattr__(self, "t", t)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.t)

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self):
        return iter(self.t)


@dataclass(frozen=True)
class Layer:
    """Grid values on one time level.

    ``s`` holds the mass coordinate and ``rho`` a node-attached density (the
    density of the interval to the right of each node) when present.
    """

    t: float
    x: np.ndarray
    u: np.ndarray
    s: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if x.shape != u.shape or x.ndim != 1:
            raise DomainError("x and u must be 1-d arrays of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise DomainError("layer nodes must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", float(self.t))
        for name in ("s", "rho"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != x.shape:
                    raise DomainError(f"{name} must match the node count")
                object.__setattr__(self, name, v)
        if self.rho is not None and np.any(self.rho <= 0):
            raise NonpositiveDensity("density must be positive")

    def __len__(self) -> int:
        return self.x.size

    def with_(self, **changes) -> "Layer":
        kw = dict(t=self.t, x=self.x, u=self.u, s=self.s, rho=self.rho, meta=self.meta)
        kw.update(changes)
        return Layer(**kw)


def uniform_time(T: float, k: int) -> TimeMesh:
    if T <= 0 or k < 1:
        raise DomainError("need T > 0 and k >= 1")
    return TimeMesh(np.linspace(0.0, T, k + 1), "uniform")


def log_time_meth22(delta: float, T: float, k: int) -> TimeMesh:
    """Levels ``t_n = delta*ln(1 + (n/k)(e^{delta T} - 1))`` for the constant-source case.

    These are the pre-images of a uniform mesh under the time change
    ``t -> delta (e^{delta t} - 1)``.
    """
    _check(delta, T, k)
    n = np.arange(k + 1)
    t = delta * np.log1p(n / k * math.expm1(delta * T))
    t[-1] = T
    return TimeMesh(t, "meth22")


def log_time_meth32(delta: float, sigma: float, T: float, k: int) -> TimeMesh:
    """Levels ``t_n = (delta/sigma)*ln(1 + (n/k)(e^{delta sigma T} - 1))``."""
    _check(delta, T, k)
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    n = np.arange(k + 1)
    arg = n / k * math.expm1(delta * sigma * T)
    if np.any(1.0 + arg <= 0):
        raise DomainError("logarithm argument is not positive")
    t = delta / sigma * np.log1p(arg)
    t[-1] = T
    return TimeMesh(t, "meth32")


def _check(delta, T, k):
    if delta not in (1, -1):
        raise DomainError("delta must be +1 or -1")
    if T <= 0 or k < 1:
        raise DomainError("need T > 0 and k >= 1")


def uniform_space(x_left: float, x_right: float, n_nodes: int) -> np.ndarray:
    if n_nodes < 3 or x_right <= x_left:
        raise DomainError("need at least 3 nodes on a nonempty interval")
    return np.linspace(x_left, x_right, n_nodes)


def mass_nodes(u0: Callable[[float], float], x0: float, hs: float,
               n_nodes: int) -> np.ndarray:
    """Physical nodes of a uniform mass grid.

    Nodes satisfy ``(x_{i+1} - x_i)/hs = (1/u0(x_i) + 1/u0(x_{i+1}))/2``,
    each step found by a bracketed root search.

    Raises
    ------
    NonpositiveDensity
        If ``u0`` is not positive at a node.
    """
    if hs <= 0 or n_nodes < 1:
        raise DomainError("need hs > 0 and at least one node")
    x = np.empty(n_nodes)
    x[0] = x0
    for i in range(n_nodes - 1):
        ui = float(u0(x[i]))
        if not ui > 0:
            raise NonpositiveDensity(f"u0({x[i]}) = {ui} is not positive")

        def g(d, xi=x[i], ui=ui):
            uj = float(u0(xi + d))
            if not uj > 0:
                raise NonpositiveDensity(f"u0({xi + d}) = {uj} is not positive")
            return d / hs - 0.5 * (1.0 / ui + 1.0 / uj)

        hi = hs / ui
        for _ in range(200):
            if g(hi) > 0:
                break
            hi *= 2.0
        else:
            raise NonpositiveDensity("could not bracket the next mass node")
        x[i + 1] = x[i] + brentq(g, 0.0, hi, xtol=1e-15 * max(1.0, abs(x[i])), rtol=1e-15,
                                 maxiter=500)
    if not float(u0(x[-1])) > 0:
        raise NonpositiveDensity("u0 is not positive on the mass grid")
    return x


def init_mass_mesh(u0: Callable[[float], float], x0: float, hs: float, n_nodes: int,
                   t: float = 0.0, s0: float = 0.0) -> Layer:
    """Layer on a uniform mass grid with ``s_i = s0 + i*hs`` and ``u_i = u0(x_i)``."""
    x = mass_nodes(u0, x0, hs, n_nodes)
    u = np.array([float(u0(v)) for v in x])
    return Layer(t, x, u, s=s0 + hs * np.arange(n_nodes))
