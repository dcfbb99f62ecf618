"""Point changes of variables linking classification cases.

Each transform maps a case with a source term (or a critical source) onto a
simpler case:

* ``CH22``  ``u -> u - d t``, ``t -> d (e^{d t} - 1)``
* ``CH32``  ``u -> u e^{-d t}``, ``t -> (d/s)(e^{d s t} - 1)``
* ``CH44A`` ``u -> u cosh^3(x/sqrt3)``, ``x -> sqrt3 tanh(x/sqrt3)``
* ``CH44B`` ``u -> u cos^3(x/sqrt3)``, ``x -> sqrt3 tan(x/sqrt3)``
* ``CH55``  ``u -> u e^{-d t}``
* ``CH56``  ``u -> u - d t``

All maps are vectorised over numpy arrays and come with closed-form inverses.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, InadmissibleImage
from .meshes import Layer

SQ3 = math.sqrt(3.0)
HALF_STRIP = SQ3 * math.pi / 2


class TransformId(str, enum.Enum):
    CH22 = "CH22"
    CH32 = "CH32"
    CH44A = "CH44A"
    CH44B = "CH44B"
    CH55 = "CH55"
    CH56 = "CH56"


_NEEDS = {
    TransformId.CH22: ("delta",),
    TransformId.CH32: ("delta", "sigma"),
    TransformId.CH44A: (),
    TransformId.CH44B: (),
    TransformId.CH55: ("delta",),
    TransformId.CH56: ("delta",),
}


@dataclass(frozen=True)
class Transform:
    """A parametrised change of variables ``(t, x, u) -> (t', x', u')``.

    Parameters
    ----------
    kind : TransformId or str
    delta : {+1, -1}, optional
        Required by CH22, CH32, CH55 and CH56.
    sigma : float, optional
        Required by CH32; must be nonzero.
    """

    kind: TransformId
    delta: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        try:
            kind = TransformId(getattr(self.kind, "value", self.kind))
        except ValueError:
            raise DomainError(f"unknown transform {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        need = _NEEDS[kind]
        if "delta" in need:
            if self.delta not in (1, -1):
                raise DomainError(f"{kind.value} needs delta = +1 or -1, got {self.delta}")
            object.__setattr__(self, "delta", float(self.delta))
        elif self.delta is not None:
            raise DomainError(f"{kind.value} takes no delta")
        if "sigma" in need:
            if self.sigma is None or self.sigma == 0:
                raise DomainError(f"{kind.value} needs a nonzero sigma")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.sigma is not None:
            raise DomainError(f"{kind.value} takes no sigma")

    def __str__(self) -> str:
        extra = [f"{k}={getattr(self, k):g}" for k in _NEEDS[self.kind]]
        return self.kind.value + (f"({', '.join(extra)})" if extra else "")

    # ------------------------------------------------------------------ time
    def map_t(self, t):
        t = np.asarray(t, dtype=float)
        k, d = self.kind, self.delta
        if k is TransformId.CH22:
            return d * np.expm1(d * t)
        if k is TransformId.CH32:
            return d / self.sigma * np.expm1(d * self.sigma * t)
        return t

    def unmap_t(self, tb):
        tb = np.asarray(tb, dtype=float)
        k, d = self.kind, self.delta
        if k is TransformId.CH22:
            arg = d * tb
        elif k is TransformId.CH32:
            arg = d * self.sigma * tb
        else:
            return tb
        if np.any(arg <= -1.0):
            raise InadmissibleImage(f"{self} has no preimage for t = {tb}")
        if k is TransformId.CH22:
            return d * np.log1p(arg)
        return d / self.sigma * np.log1p(arg)

    # ----------------------------------------------------------------- space
    def _check_strip(self, x):
        if self.kind is TransformId.CH44B and np.any(np.abs(x) >= HALF_STRIP):
            raise InadmissibleImage(f"CH44B needs |x| < sqrt(3)*pi/2, got max |x| = "
                                    f"{np.max(np.abs(x)):.6g}")

    def map_x(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is TransformId.CH44A:
            return SQ3 * np.tanh(x / SQ3)
        if self.kind is TransformId.CH44B:
            self._check_strip(x)
            return SQ3 * np.tan(x / SQ3)
        return x

    def unmap_x(self, xb):
        xb = np.asarray(xb, dtype=float)
        if self.kind is TransformId.CH44A:
            if np.any(np.abs(xb) >= SQ3):
                raise InadmissibleImage("CH44A images lie in |x| < sqrt(3)")
            return SQ3 * np.arctanh(xb / SQ3)
        if self.kind is TransformId.CH44B:
            return SQ3 * np.arctan(xb / SQ3)
        return xb

    # ---------------------------------------------------------------- values
    def _factor(self, t, x):
        """Multiplicative factor of the value map (1 for additive maps)."""
        k = self.kind
        if k in (TransformId.CH32, TransformId.CH55):
            return np.exp(-self.delta * t)
        if k is TransformId.CH44A:
            return np.cosh(x / SQ3) ** 3
        if k is TransformId.CH44B:
            return np.cos(x / SQ3) ** 3
        return None

    def map_u(self, t, x, u):
        t, x, u = (np.asarray(v, dtype=float) for v in (t, x, u))
        if self.kind in (TransformId.CH22, TransformId.CH56):
            return u - self.delta * t
        self._check_strip(x)
        return u * self._factor(t, x)

    def unmap_u(self, t, x, ub):
        """Recover ``u`` from the image value, given the original ``(t, x)``."""
        t, x, ub = (np.asarray(v, dtype=float) for v in (t, x, ub))
        if self.kind in (TransformId.CH22, TransformId.CH56):
            return ub + self.delta * t
        self._check_strip(x)
        return ub / self._factor(t, x)

    # ----------------------------------------------------------------- points
    def apply(self, t, x, u) -> tuple:
        """Image ``(t', x', u')`` of a point (or arrays of points)."""
        self._check_strip(np.asarray(x, dtype=float))
        return self.map_t(t), self.map_x(x), self.map_u(t, x, u)

    def apply_inverse(self, tb, xb, ub) -> tuple:
        t = self.unmap_t(tb)
        x = self.unmap_x(xb)
        return t, x, self.unmap_u(t, x, ub)


def as_transform(tr, **params) -> Transform:
    if isinstance(tr, (Transform, Composition)):
        return tr
    return Transform(tr, **params)


@dataclass(frozen=True)
class Composition:
    """Transforms applied left to right: ``Composition((a, b))`` is ``b . a``."""

    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise DomainError("empty composition")
        object.__setattr__(self, "parts", tuple(self.parts))

    def apply(self, t, x, u) -> tuple:
        for p in self.parts:
            t, x, u = p.apply(t, x, u)
        return t, x, u

    def apply_inverse(self, t, x, u) -> tuple:
        for p in reversed(self.parts):
            t, x, u = p.apply_inverse(t, x, u)
        return t, x, u

    def __str__(self) -> str:
        return " then ".join(str(p) for p in self.parts)


def compose(*transforms) -> Composition:
    """Chain transforms in application order."""
    flat = []
    for tr in transforms:
        flat.extend(tr.parts if isinstance(tr, Composition) else [tr])
    return Composition(tuple(flat))


def apply(tr, point, **params) -> tuple:
    """Image of a single ``(t, x, u)`` triple as floats."""
    out = as_transform(tr, **params).apply(*point)
    return tuple(float(v) for v in out)


def apply_inverse(tr, point, **params) -> tuple:
    out = as_transform(tr, **params).apply_inverse(*point)
    return tuple(float(v) for v in out)


def transform_layer(tr, layer: Layer, inverse: bool = False) -> Layer:
    """Pointwise image of a layer.

    Mass-coordinate data (``s``, ``rho``) is not carried over: the maps change
    ``u`` and therefore the Lagrangian coordinate itself.
    """
    tr = as_transform(tr)
    n = len(layer)
    t = np.full(n, layer.t)
    f = tr.apply_inverse if inverse else tr.apply
    tt, xx, uu = f(t, layer.x, layer.u)
    tt = np.atleast_1d(tt)
    if n and np.ptp(tt) > 1e-12 * max(1.0, abs(float(tt[0]))):
        raise InadmissibleImage("the transform does not keep time layers flat")
    return Layer(float(tt[0]) if n else layer.t, xx, uu, meta=dict(layer.meta))


def transform_solution(tr, layers: Iterable[Layer], inverse: bool = False) -> list:
    """Transform every layer of a discrete solution."""
    return [transform_layer(tr, lay, inverse=inverse) for lay in layers]


def transform_mesh(tr, times: Sequence[float]) -> np.ndarray:
    """Image of a set of time levels."""
    tr = as_transform(tr)
    parts = tr.parts if isinstance(tr, Composition) else (tr,)
    t = np.asarray(times, dtype=float)
    for p in parts:
        t = p.map_t(t)
    return t
