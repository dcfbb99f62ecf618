"""Exact reference solutions of the linear heat equation and their meshes.

* The dilating Gaussian ``u = C sqrt(t0/(t+t0)) exp(-(x-a)^2/(4(t+t0)))``,
  which the explicit moving-mesh scheme reproduces exactly on the nodes
  ``x_i(t) = a + (x_i(0) - a)(t+t0)/t0``.
* Two superposed Gaussians with their mixed node velocity.
* The reduced difference system of solutions ``u = e^{ct} f(x)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolverDiverged


@dataclass(frozen=True)
class KernelSolution:
    """``C (t0/(t+t0))^{1/2} exp(-(x-a)^2 / (4(t+t0)))``."""

    C: float = 1.0
    t0: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if not self.C > 0 or not self.t0 > 0:
            raise DomainError("kernel needs C > 0 and t0 > 0")

    def __call__(self, t, x):
        return kernel_value(self, t, x)

    def velocity(self, t, x):
        """Node velocity ``-2 u_x/u = (x - a)/(t + t0)``."""
        return (np.asarray(x, dtype=float) - self.a) / (np.asarray(t, dtype=float) + self.t0)

    def log_dx(self, t, x):
        return -(np.asarray(x, dtype=float) - self.a) / (2 * (np.asarray(t, dtype=float) + self.t0))


def _check_time(k: KernelSolution, t):
    if np.any(np.asarray(t, dtype=float) <= -k.t0):
        raise DomainError("kernel is defined for t > -t0")


def kernel_value(k: KernelSolution, t, x):
    _check_time(k, t)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    s = t + k.t0
    out = k.C * np.sqrt(k.t0 / s) * np.exp(-(x - k.a) ** 2 / (4 * s))
    return float(out) if out.ndim == 0 else out


def kernel_mesh(k: KernelSolution, x0, t):
    """Nodes at time ``t`` of the dilating mesh that starts at ``x0``."""
    _check_time(k, t)
    x0 = np.asarray(x0, dtype=float)
    out = k.a + (x0 - k.a) * ((t + k.t0) / k.t0)
    return float(out) if out.ndim == 0 else out


def preimage_time_levels(tau: float, t0: float, k: int) -> np.ndarray:
    """Levels ``t_j = j tau t0/(t0 + j tau)`` mapped to ``j tau`` by the
    projective flow with parameter ``1/(4 t0)``."""
    j = np.arange(k + 1, dtype=float)
    return j * tau * t0 / (t0 + j * tau)


@dataclass(frozen=True)
class SuperposedKernels:
    """``alpha U1 + beta U2`` for two unit-amplitude Gaussians.

    ``U(t, x) = (t + t_k)^{-1/2} exp(-(x - c_k)^2/(4(t + t_k)))``.
    """

    alpha: float
    beta: float
    t1: float
    t2: float
    a: float
    b: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise DomainError("weights must be nonnegative and not both zero")
        if not (self.t1 > 0 and self.t2 > 0):
            raise DomainError("t1 and t2 must be positive")

    def parts(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        u1 = np.exp(-(x - self.a) ** 2 / (4 * (t + self.t1))) / np.sqrt(t + self.t1)
        u2 = np.exp(-(x - self.b) ** 2 / (4 * (t + self.t2))) / np.sqrt(t + self.t2)
        return self.alpha * u1, self.beta * u2

    def value(self, t, x):
        w1, w2 = self.parts(t, x)
        return w1 + w2


def superposition_trajectory_rhs(sp: SuperposedKernels, t, x):
    """Node velocity of the superposed solution.

    The velocities ``(x - a)/(t + t1)`` and ``(x - b)/(t + t2)`` of the two
    components are averaged with weights ``alpha U1`` and ``beta U2``.
    """
    w1, w2 = sp.parts(t, x)
    den = w1 + w2
    if np.any(den <= 0) or not np.all(np.isfinite(den)):
        raise DomainError("superposed solution vanishes; velocity undefined")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    v = (w1 * (x - sp.a) / (t + sp.t1) + w2 * (x - sp.b) / (t + sp.t2)) / den
    return float(v) if np.ndim(v) == 0 else v


def superposition_trajectories(sp: SuperposedKernels, x0, times, rtol: float = 1e-11):
    """Integrate node trajectories of the superposed solution.

    Returns an array of shape ``(len(times), len(x0))``.
    """
    from scipy.integrate import solve_ivp

    times = np.asarray(times, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    sol = solve_ivp(lambda t, y: superposition_trajectory_rhs(sp, t, y),
                    (times[0], times[-1]), x0, method="DOP853", t_eval=times,
                    rtol=rtol, atol=1e-12)
    if not sol.success:
        raise SolverDiverged(sol.message)
    return sol.y.T


# ------------------------------------------------------------- reduced system

class Branch(str, enum.Enum):
    MINUS_H_MINUS = "MinusHMinus"
    ZERO = "Zero"
    PLUS_H_PLUS = "PlusHPlus"


def _shift(branch: Branch, hp, hm, fp, f, fm):
    if branch is Branch.MINUS_H_MINUS:
        return -hm, fm
    if branch is Branch.PLUS_H_PLUS:
        return hp, fp
    return 0.0 * hp, f


def reduced_Y3_residuals(x, f, c: float, tau: float, branch) -> tuple:
    """Residuals of the reduced system for ``u = e^{ct} f(x)``.

    Parameters
    ----------
    x, f : array_like
        Nodes and values; stencils are centred on every interior node.  With
        three nodes the result is a pair of floats.
    branch : Branch or str
        Selects ``dx`` among ``-h_minus``, ``0`` and ``h_plus``, so that the
        upper-layer value coincides with a grid value.

    Returns
    -------
    (r_mesh, r_value)
        ``dx - 2tau/(h+ + h-) (-(h-/h+) ln(f+/f) + (h+/h-) ln(f-/f))`` and
        ``(f/f(x+dx))^2 exp(-2c tau - dx^2/(2tau)) - 1
        + 4tau/(h+ + h-) (ln(f+/f)/h+ + ln(f-/f)/h-)``.
    """
    br = Branch(getattr(branch, "value", branch))
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.shape != f.shape or x.size < 3:
        raise DomainError("need at least three nodes with matching values")
    if np.any(f <= 0):
        raise DomainError("f must be positive")
    if tau <= 0:
        raise DomainError("tau must be positive")
    hp, hm = x[2:] - x[1:-1], x[1:-1] - x[:-2]
    if np.any(hp <= 0) or np.any(hm <= 0):
        raise DomainError("nodes must be strictly increasing")
    fm, f0, fp = f[:-2], f[1:-1], f[2:]
    lp, lm = np.log(fp / f0), np.log(fm / f0)
    dx, fshift = _shift(br, hp, hm, fp, f0, fm)
    w = 2 * tau / (hp + hm)
    r1 = dx - w * (-(hm / hp) * lp + (hp / hm) * lm)
    r2 = np.expm1(2 * np.log(f0 / fshift) - 2 * c * tau - dx ** 2 / (2 * tau)) \
        + 2 * w * (lp / hp + lm / hm)
    if r1.size == 1:
        return float(r1[0]), float(r2[0])
    return r1, r2


def uniform_Y3_solution(c: float, tau: float, n_nodes: int, branch="PlusHPlus"):
    """Closed-form solution of the reduced system on a uniform grid.

    With ``h = 2 tau sqrt(c)`` (``c > 0``) the geometric profile
    ``f_i = exp(-+2 c tau i)``, i.e. ``f = exp(-+sqrt(c) x)``, satisfies both
    equations exactly; the sign follows the branch.
    """
    br = Branch(getattr(branch, "value", branch))
    if c <= 0 or br is Branch.ZERO:
        raise DomainError("a nonconstant uniform solution needs c > 0 and a shifted branch")
    h = 2 * tau * math.sqrt(c)
    i = np.arange(n_nodes, dtype=float)
    sgn = -1.0 if br is Branch.PLUS_H_PLUS else 1.0
    return h * i, np.exp(sgn * 2 * c * tau * i)


def _value_given_step(H, h, lm, c, tau):
    """Second residual of the forward branch after eliminating ``ln(f+/f)``."""
    w = 2 * tau / (H + h)
    lp = (H / h) * ((H / h) * lm - H / w)
    return np.expm1(-2 * lp - 2 * c * tau - H ** 2 / (2 * tau)) + 2 * w * (lp / H + lm / h), lp


def _march_forward(f0, f1, h, c, tau, n_nodes, tol):
    x, f = [0.0, h], [f0, f1]
    grid = np.logspace(-3, 3, 1201)
    for _ in range(n_nodes - 2):
        hm = x[-1] - x[-2]
        lm = math.log(f[-2] / f[-1])
        with np.errstate(all="ignore"):
            vals = _value_given_step(hm * grid, hm, lm, c, tau)[0]
        ok = np.isfinite(vals)
        roots = []
        for k in np.where(ok[:-1] & ok[1:] & (np.sign(vals[:-1]) != np.sign(vals[1:])))[0]:
            g = lambda H: _value_given_step(H, hm, lm, c, tau)[0]
            roots.append(brentq(g, hm * grid[k], hm * grid[k + 1], xtol=1e-15 * hm, rtol=1e-15))
        if not roots:
            raise SolverDiverged("the reduced system has no admissible next step")
        H = min(roots, key=lambda r: abs(math.log(r / hm)))
        lp = _value_given_step(H, hm, lm, c, tau)[1]
        x.append(x[-1] + H)
        f.append(f[-1] * math.exp(lp))
        r = reduced_Y3_residuals(x[-3:], f[-3:], c, tau, Branch.PLUS_H_PLUS)
        if max(abs(r[0]) / H, abs(r[1])) > tol:
            raise SolverDiverged(f"reduced system residual {max(map(abs, r)):.3g} above {tol:g}")
    return np.array(x), np.array(f)


def solve_Y3(f0: float, f1: float, h: float, c: float, tau: float, branch,
             n_nodes: int, tol: float = 1e-12):
    """March the reduced system node by node.

    Starting from two values a distance ``h`` apart, each stencil is closed by
    solving both equations for the next step ``h_+`` and value ``f_+``: the
    mesh equation is linear in ``ln(f_+/f)`` and is eliminated, leaving a
    scalar root search in ``h_+``.  A uniform grid cannot satisfy both
    equations at every node, so the returned grid is generally nonuniform.

    * ``PlusHPlus`` marches to the right from ``(0, f0), (h, f1)``.
    * ``MinusHMinus`` is its mirror image: it marches to the left from
      ``(0, f0), (-h, f1)``; nodes are returned in increasing order.
    * ``Zero`` forces ``ln(f_-/f) = h^2 (1 - e^{-2c tau})/(4 tau)`` at every
      node, which is consistent along a grid only for ``c = 0`` and
      ``f0 = f1`` (the constant solution).

    Returns
    -------
    (x, f) arrays of length ``n_nodes``.
    """
    br = Branch(getattr(branch, "value", branch))
    if n_nodes < 3:
        raise DomainError("need at least three nodes")
    if not (f0 > 0 and f1 > 0 and h > 0 and tau > 0):
        raise DomainError("need positive values, step and tau")
    if br is Branch.ZERO:
        if c != 0 or f0 != f1:
            raise DomainError("the Zero branch only carries the constant solution with c = 0")
        return h * np.arange(n_nodes), np.full(n_nodes, float(f0))
    x, f = _march_forward(f0, f1, h, c, tau, n_nodes, tol)
    if br is Branch.MINUS_H_MINUS:
        x, f = -x[::-1], f[::-1]
    return x, f
