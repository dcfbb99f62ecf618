"""Reusable numerical experiments: exact-solution runs and refinement studies."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import exact_solutions as E
from .errors import DomainError
from .meshes import Layer, uniform_time
from .model_catalog import parse_key
from .schemes import SchemeParams, as_params, run


# ------------------------------------------------------- moving-mesh kernel

def kernel_ends(k: E.KernelSolution, x_left: float, x_right: float) -> Callable:
    """Exact end data ``t -> ((x_l, u_l), (x_r, u_r))`` along kernel trajectories."""
    def fn(t):
        xl, xr = E.kernel_mesh(k, x_left, t), E.kernel_mesh(k, x_right, t)
        return (xl, E.kernel_value(k, t, xl)), (xr, E.kernel_value(k, t, xr))
    return fn


def kernel_moving_run(C: float = 1.0, t0: float = 1.0, x_left: float = -10.0,
                      x_right: float = 10.0, nodes: int = 101, tau: float = 0.05,
                      steps: int = 100, scheme: str = "SH54E"):
    """Run a moving linear scheme from the kernel with exact end data.

    Returns ``(layers, kernel)``.
    """
    k = E.KernelSolution(C, t0)
    x0 = np.linspace(x_left, x_right, nodes)
    p = SchemeParams(parse_key("K=1,Q=0"), boundary_fn=kernel_ends(k, x_left, x_right))
    layers = run(scheme, p, Layer(0.0, x0, E.kernel_value(k, 0.0, x0)),
                 uniform_time(tau * steps, steps))
    return layers, k


def kernel_errors(layers, k: E.KernelSolution) -> tuple:
    """Max nodewise value error and max node-position error over all layers."""
    x0 = layers[0].x
    eu = max(float(np.max(np.abs(l.u - E.kernel_value(k, l.t, l.x)))) for l in layers)
    ex = max(float(np.max(np.abs(l.x - E.kernel_mesh(k, x0, l.t)))) for l in layers)
    return eu, ex


# ------------------------------------------------------------ superposition

def superposition_ends(sp: E.SuperposedKernels, x_left: float, x_right: float) -> Callable:
    def fn(t):
        if t <= 0:
            xl, xr = x_left, x_right
        else:
            xl, xr = E.superposition_trajectories(sp, [x_left, x_right], [0.0, t])[-1]
        return (xl, sp.value(t, xl)), (xr, sp.value(t, xr))
    return fn


def superposition_run(sp: E.SuperposedKernels, x_left: float = -30.0, x_right: float = 30.0,
                      nodes: int = 101, T: float = 5.0, steps: int = 200,
                      scheme: str = "SH54E"):
    """Moving-mesh run from superposed kernels with exact end trajectories.

    Returns ``(layers, X)`` with ``X[j, i]`` the exact position of node ``i``
    at the time of layer ``j``.
    """
    x0 = np.linspace(x_left, x_right, nodes)
    p = SchemeParams(parse_key("K=1,Q=0"), boundary_fn=superposition_ends(sp, x_left, x_right),
                     track_residual=False)
    layers = run(scheme, p, Layer(0.0, x0, sp.value(0.0, x0)), uniform_time(T, steps))
    X = E.superposition_trajectories(sp, x0, [l.t for l in layers])
    return layers, X


def trajectory_error(layers, X, floor: float = 1.0) -> float:
    """Max of ``|x_num - x_exact| / max(|x_exact|, floor)`` over interior nodes."""
    Xn = np.array([l.x for l in layers])
    rel = np.abs(Xn - X) / np.maximum(np.abs(X), floor)
    return float(rel[:, 1:-1].max())


# -------------------------------------------------------------- refinement

@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    tau: float
    error: float
    order: float  # NaN on the coarsest level


@dataclass(frozen=True)
class Reference:
    """Exact reference ``u(t, x)`` for a refinement study on a fixed interval."""

    name: str
    scheme: str
    key: str
    params: dict
    solution: Callable
    x_left: float
    x_right: float
    h0: float
    T: float


def _kernel_ref():
    k = E.KernelSolution(1.0, 1.0)
    return lambda t, x: E.kernel_value(k, t, x)


class TransformedReference:
    """Fine-grid SH32 solution mapped by CH32 onto the source-free power case.

    Computed on first use.  Coarse grids of a dyadic study at the same
    ``lam`` are nested in the fine grid, so the reference is sampled, not
    interpolated.
    """

    def __init__(self, sigma: float = 1.0, delta: float = 1.0, x_left: float = -2.0,
                 x_right: float = 2.0, h: float = 0.0125, T: float = 0.5, lam: float = 0.25):
        self.sigma, self.delta = sigma, delta
        self.x_left, self.h, self.T, self.lam = x_left, h, T, lam
        self.n = int(round((x_right - x_left) / h)) + 1
        self.x = np.linspace(x_left, x_right, self.n)
        self._layers = None

    @staticmethod
    def initial(x):
        return 1.0 + 0.5 * np.exp(-np.asarray(x, dtype=float) ** 2)

    def layers(self) -> list:
        if self._layers is None:
            from .meshes import log_time_meth32
            from .transforms import Transform, transform_solution
            tr = Transform("CH32", delta=self.delta, sigma=self.sigma)
            steps = int(round(self.T / (self.lam * self.h ** 2)))
            T_src = float(tr.unmap_t(self.T))
            m = parse_key("K=u^s,Q=d*u", sigma=self.sigma, delta=self.delta)
            src = run("SH32", SchemeParams(m, track_residual=False),
                      Layer(0.0, self.x, self.initial(self.x)),
                      log_time_meth32(self.delta, self.sigma, T_src, steps))
            self._layers = transform_solution(tr, src)
        return self._layers

    def __call__(self, t, x):
        if np.all(np.asarray(t) == 0.0):
            return self.initial(x)
        lay = self.layers()
        dt = self.T / (len(lay) - 1)
        j = int(round(float(t) / dt))
        i = np.rint((np.asarray(x, dtype=float) - self.x_left) / self.h).astype(int)
        if (abs(lay[j].t - float(t)) > 1e-9 * max(1.0, abs(float(t)))
                or np.any(np.abs(self.x[i] - x) > 1e-9) or np.any(i < 0) or np.any(i >= self.n)):
            raise DomainError("grid is not nested in the transformed reference")
        return lay[j].u[i]


REFERENCES = {
    "kernel": Reference("kernel", "EQ55A", "K=1,Q=0", {}, _kernel_ref(),
                        -10.0, 10.0, 0.2, 1.0),
    "stationary-exp": Reference("stationary-exp", "SH51", "K=1,Q=-e^u", {},
                                lambda t, x: np.log(2.0 / x ** 2), 1.0, 2.0, 0.1, 0.5),
    "stationary-power": Reference("stationary-power", "SH52", "K=1,Q=-u^n", {"n": 3.0},
                                  lambda t, x: np.sqrt(2.0) / x, 1.0, 2.0, 0.1, 0.5),
    "power-transformed": Reference("power-transformed", "SH31", "K=u^s,Q=0", {"sigma": 1.0},
                                   TransformedReference(), -2.0, 2.0, 0.2, 0.5),
}


def refinement_study(ref: Reference, levels: int = 3, lam: float = 0.25,
                     params: Optional[SchemeParams] = None) -> list:
    """Dyadic refinements at fixed ``lam = tau/h^2`` with exact Dirichlet ends.

    ``levels`` counts refinements, so ``levels + 1`` grids are run.  The error
    is the max nodewise error at ``T``.
    """
    if levels < 1:
        raise DomainError("need at least one refinement")
    if lam <= 0:
        raise DomainError("lam must be positive")
    model = parse_key(ref.key, **ref.params)
    base = params if params is not None else SchemeParams(model)
    rows = []
    for lev in range(levels + 1):
        h = ref.h0 / 2 ** lev
        n = int(round((ref.x_right - ref.x_left) / h)) + 1
        x = np.linspace(ref.x_left, ref.x_right, n)
        steps = max(1, int(round(ref.T / (lam * h * h))))
        sol = ref.solution
        ends = lambda t, x=x, sol=sol: ((x[0], sol(t, x[0])), (x[-1], sol(t, x[-1])))
        p = replace(as_params(base), boundary="dirichlet", boundary_fn=ends,
                    track_residual=False)
        layers = run(ref.scheme, p, Layer(0.0, x, sol(0.0, x)), uniform_time(ref.T, steps))
        err = float(np.max(np.abs(layers[-1].u - sol(layers[-1].t, x))))
        order = float("nan") if not rows else float(np.log2(rows[-1].error / err))
        rows.append(ConvergenceRow(h, ref.T / steps, err, order))
    return rows


# -------------------------------------------------------------- transforms

def max_residual(scheme, params, layers) -> float:
    """Largest residual over every interior stencil of a discrete solution."""
    from .schemes import residual
    from .stencil import from_layers
    return max(float(np.max(np.abs(residual(scheme, params, from_layers(a, b)))))
               for a, b in zip(layers[:-1], layers[1:]))


@dataclass(frozen=True)
class EquivalenceRow:
    source: str
    transform: str
    target: str
    source_residual: float
    target_residual: float


def transform_equivalence(scheme, params, layer0: Layer, times) -> list:
    """Run ``scheme`` and check every linked transform image against its target scheme.

    Returns one :class:`EquivalenceRow` per transform link of the case.
    """
    from .model_catalog import lookup
    from .transforms import transform_solution
    p = as_params(params)
    layers = run(scheme, p, layer0, times)
    src = max_residual(scheme, p, layers)
    out = []
    for tr, tgt in lookup(p.model).transform_targets():
        target_scheme = lookup(tgt).schemes[0]
        img = transform_solution(tr, layers)
        out.append(EquivalenceRow(getattr(scheme, "value", scheme), str(tr), target_scheme,
                                  src, max_residual(target_scheme, tgt, img)))
    return out
