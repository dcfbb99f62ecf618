"""Six-point difference stencil shared by schemes, flows and audits.

A stencil holds one interior node of a lower time layer with its two spatial
neighbours and the three corresponding nodes of the next layer::

    upper:  (x+dx-h_minus_hat, u_hat_minus)  (x+dx, u_hat)  (x+dx+h_plus_hat, u_hat_plus)
    lower:  (x-h_minus, u_minus)             (x, u)         (x+h_plus, u_plus)

The lower layer sits at time ``t`` and the upper one at ``t + tau``.  Fields may
be floats or equally shaped numpy arrays; every routine here is vectorised so a
batch of stencils can be handled in one call.

Mass-coordinate stencils additionally carry the Lagrangian coordinate ``s`` with
its steps and an optional density ``rho`` attached to each node.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

# node order used by ``node_points``: lower (-, 0, +), upper (-, 0, +)
LOWER = (0, 1, 2)
UPPER = (3, 4, 5)


@dataclass(frozen=True)
class Stencil:
    t: object
    tau: object
    x: object
    h_plus: object
    h_minus: object
    h_plus_hat: object
    h_minus_hat: object
    dx: object
    u: object
    u_plus: object
    u_minus: object
    u_hat: object
    u_hat_plus: object
    u_hat_minus: object
    # mass coordinate (orthogonal in s: both layers share s and its steps)
    s: Optional[object] = None
    hs_plus: Optional[object] = None
    hs_minus: Optional[object] = None
    ds: Optional[object] = None
    # density attached to nodes, lower (-, 0, +) and upper (-, 0, +)
    rho_minus: Optional[object] = None
    rho: Optional[object] = None
    rho_plus: Optional[object] = None
    rho_hat_minus: Optional[object] = None
    rho_hat: Optional[object] = None
    rho_hat_plus: Optional[object] = None

    @property
    def has_mass(self) -> bool:
        return self.s is not None

    @property
    def has_density(self) -> bool:
        return self.rho is not None

    @property
    def size(self) -> int:
        return int(np.size(self.u))

    def replace(self, **changes) -> "Stencil":
        return dataclasses.replace(self, **changes)

    def asarrays(self) -> "Stencil":
        """Return a copy whose populated fields are 1-d float arrays."""
        n = max(np.size(getattr(self, f.name)) for f in dataclasses.fields(self)
                if getattr(self, f.name) is not None)
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = None if v is None else np.broadcast_to(
                np.asarray(v, dtype=float), (n,)).copy()
        return Stencil(**out)

    def take(self, idx) -> "Stencil":
        """Select stencils from a batch."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = None if v is None else np.asarray(v)[idx]
        return Stencil(**out)

    def node_points(self) -> np.ndarray:
        """Coordinates of the six nodes.

        Returns
        -------
        ndarray of shape (5, 6, n)
            Rows are ``t, x, u, s, rho``; absent ``s``/``rho`` are zero.
        """
        st = self.asarrays()
        n = st.size
        t_up = st.t + st.tau
        xc_up = st.x + st.dx
        t = np.stack([st.t, st.t, st.t, t_up, t_up, t_up])
        x = np.stack([st.x - st.h_minus, st.x, st.x + st.h_plus,
                      xc_up - st.h_minus_hat, xc_up, xc_up + st.h_plus_hat])
        u = np.stack([st.u_minus, st.u, st.u_plus,
                      st.u_hat_minus, st.u_hat, st.u_hat_plus])
        s = np.zeros((6, n))
        rho = np.zeros((6, n))
        if st.has_mass:
            ds = st.ds if st.ds is not None else 0.0
            s = np.stack([st.s - st.hs_minus, st.s, st.s + st.hs_plus,
                          st.s + ds - st.hs_minus, st.s + ds, st.s + ds + st.hs_plus])
        if st.has_density:
            rho = np.stack([_or(st.rho_minus, st.rho), st.rho, _or(st.rho_plus, st.rho),
                            _or(st.rho_hat_minus, st.rho), _or(st.rho_hat, st.rho),
                            _or(st.rho_hat_plus, st.rho)])
        return np.stack([t, x, u, s, rho])

    def displaced(self, d: np.ndarray) -> "Stencil":
        """Apply node displacements ``d`` (shape (5, 6, n)) to the stencil.

        Steps are updated from displacement differences so no precision is
        lost to large absolute coordinates.
        """
        st = self.asarrays()
        dt, dxn, du, dsn, drho = d
        changes = dict(
            t=st.t + dt[1],
            tau=st.tau + (dt[4] - dt[1]),
            x=st.x + dxn[1],
            h_plus=st.h_plus + (dxn[2] - dxn[1]),
            h_minus=st.h_minus + (dxn[1] - dxn[0]),
            h_plus_hat=st.h_plus_hat + (dxn[5] - dxn[4]),
            h_minus_hat=st.h_minus_hat + (dxn[4] - dxn[3]),
            dx=st.dx + (dxn[4] - dxn[1]),
            u_minus=st.u_minus + du[0], u=st.u + du[1], u_plus=st.u_plus + du[2],
            u_hat_minus=st.u_hat_minus + du[3], u_hat=st.u_hat + du[4],
            u_hat_plus=st.u_hat_plus + du[5],
        )
        if st.has_mass:
            ds = st.ds if st.ds is not None else 0.0
            changes.update(
                s=st.s + dsn[1],
                hs_plus=st.hs_plus + (dsn[2] - dsn[1]),
                hs_minus=st.hs_minus + (dsn[1] - dsn[0]),
                ds=ds + (dsn[4] - dsn[1]),
            )
        if st.has_density:
            for name, k in (("rho_minus", 0), ("rho", 1), ("rho_plus", 2),
                            ("rho_hat_minus", 3), ("rho_hat", 4), ("rho_hat_plus", 5)):
                v = getattr(st, name)
                if v is not None:
                    changes[name] = v + drho[k]
        return st.replace(**changes)


def _or(v, default):
    return default if v is None else v


def orthogonal(t, tau, x, h, u_minus, u, u_plus, u_hat_minus, u_hat, u_hat_plus,
               h_minus=None) -> Stencil:
    """Stencil on an orthogonal mesh (upper steps equal lower steps, dx = 0)."""
    hm = h if h_minus is None else h_minus
    return Stencil(t=t, tau=tau, x=x, h_plus=h, h_minus=hm, h_plus_hat=h,
                   h_minus_hat=hm, dx=0.0 * np.asarray(x, dtype=float),
                   u=u, u_plus=u_plus, u_minus=u_minus, u_hat=u_hat,
                   u_hat_plus=u_hat_plus, u_hat_minus=u_hat_minus)


def from_layers(lower, upper, nodes=None) -> Stencil:
    """Batch of stencils centred on the interior nodes of two adjacent layers.

    Parameters
    ----------
    lower, upper : Layer
        Consecutive time layers with the same node count.
    nodes : array of int, optional
        Centre indices; defaults to all interior nodes.
    """
    n = len(lower.x)
    i = np.arange(1, n - 1) if nodes is None else np.asarray(nodes)
    xl, xu = np.asarray(lower.x), np.asarray(upper.x)
    ul, uu = np.asarray(lower.u), np.asarray(upper.u)
    tau = upper.t - lower.t
    kw = dict(
        t=np.full(i.shape, float(lower.t)), tau=np.full(i.shape, float(tau)),
        x=xl[i], h_plus=xl[i + 1] - xl[i], h_minus=xl[i] - xl[i - 1],
        h_plus_hat=xu[i + 1] - xu[i], h_minus_hat=xu[i] - xu[i - 1],
        dx=xu[i] - xl[i],
        u=ul[i], u_plus=ul[i + 1], u_minus=ul[i - 1],
        u_hat=uu[i], u_hat_plus=uu[i + 1], u_hat_minus=uu[i - 1],
    )
    if lower.s is not None:
        s = np.asarray(lower.s)
        kw.update(s=s[i], hs_plus=s[i + 1] - s[i], hs_minus=s[i] - s[i - 1],
                  ds=np.asarray(upper.s)[i] - s[i])
    if lower.rho is not None:
        rl, ru = np.asarray(lower.rho), np.asarray(upper.rho)
        kw.update(rho_minus=rl[i - 1], rho=rl[i], rho_plus=rl[i + 1],
                  rho_hat_minus=ru[i - 1], rho_hat=ru[i], rho_hat_plus=ru[i + 1])
    return Stencil(**kw)
