"""Classification catalog for u_t = (K(u) u_x)_x + Q(u).

Each classified pair (K, Q) is a case carrying its admitted point symmetries,
the invariant schemes built for it, the mesh each scheme lives on and the
point transformations linking it to simpler cases.

Case keys are short strings such as ``"K=u^s,Q=0"`` or ``"K=e^u,Q=+-e^{au}"``.
Symbolic letters stand for free parameters: ``s`` = sigma, ``n`` = source
power, ``a`` = exponent alpha, ``d`` = delta.  A leading ``+``/``-`` on the
source fixes its sign; ``+-`` leaves it free.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import UnknownCase
from .symmetry import SymmetryGenerator, generator

SQ3 = math.sqrt(3.0)
K44 = 2.0 / SQ3


class KFamily(str, enum.Enum):
    ARBITRARY = "Arbitrary"
    EXPONENTIAL = "Exponential"
    POWER = "Power"
    POWER_MINUS_43 = "PowerMinus43"
    LINEAR = "Linear"


class QFamily(str, enum.Enum):
    ARBITRARY = "Arbitrary"
    ZERO = "Zero"
    CONSTANT = "Constant"
    EXP_SOURCE = "ExpSource"
    POWER_SOURCE = "PowerSource"
    LOG_SOURCE = "LogSource"
    LINEAR_SOURCE = "LinearSource"
    MIXED_EXP_CONST = "MixedExpConst"
    MIXED_POWER_LINEAR = "MixedPowerLinear"
    MIXED_CRITICAL = "MixedCritical"


class MeshClass(str, enum.Enum):
    ORTHOGONAL_UNIFORM = "OrthogonalUniform"
    ORTHOGONAL_UNIFORM_LOG_TIME = "OrthogonalUniformLogTime"
    ORTHOGONAL_NONUNIFORM_SPACE = "OrthogonalNonuniformSpace"
    MOVING_FLAT_LAYERS = "MovingFlatLayers"
    MASS_COORDINATE = "MassCoordinate"


# parameters each family reads
_K_PARAMS = {KFamily.POWER: ("sigma",)}
_Q_PARAMS = {
    QFamily.CONSTANT: ("delta",),
    QFamily.EXP_SOURCE: ("alpha", "sign"),
    QFamily.POWER_SOURCE: ("n", "sign"),
    QFamily.LOG_SOURCE: ("delta",),
    QFamily.LINEAR_SOURCE: ("delta",),
    QFamily.MIXED_EXP_CONST: ("sign", "delta"),
    QFamily.MIXED_POWER_LINEAR: ("sign", "delta"),
    QFamily.MIXED_CRITICAL: ("sign", "delta"),
}


@dataclass(frozen=True)
class HeatModel:
    """A nonlinear heat equation ``u_t = (K(u) u_x)_x + Q(u)``.

    Parameters left as ``None`` are free; a model with free parameters is a
    template for its whole case and cannot be evaluated numerically.
    ``sign`` is the +/- in front of the source term (for the critical source
    ``Q = alpha*u^(-1/3)`` it plays the role of ``alpha``).  ``alpha`` is the
    exponent of ``Q = +-exp(alpha*u)``.
    """

    k_family: KFamily
    q_family: QFamily
    sigma: Optional[float] = None
    n: Optional[float] = None
    delta: Optional[float] = None
    alpha: Optional[float] = None
    sign: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "k_family", KFamily(self.k_family))
        object.__setattr__(self, "q_family", QFamily(self.q_family))
        for name in ("delta", "sign"):
            v = getattr(self, name)
            if v is not None and v not in (1, -1):
                raise UnknownCase(f"{name} must be +1 or -1, got {v}")
        if self.sigma is not None and (self.sigma == 0 or abs(self.sigma + 4 / 3) < 1e-12):
            raise UnknownCase("the power family requires sigma != 0 and sigma != -4/3")
        if self.n is not None and self.n in (0, 1):
            raise UnknownCase("a power source needs n != 0 and n != 1")
        if self.alpha is not None and self.alpha == 0:
            raise UnknownCase("an exponential source needs alpha != 0")

    @property
    def free_parameters(self) -> tuple:
        return tuple(p for p in self.required_parameters if getattr(self, p) is None)

    @property
    def required_parameters(self) -> tuple:
        names = _K_PARAMS.get(self.k_family, ()) + _Q_PARAMS.get(self.q_family, ())
        if self.k_family is KFamily.LINEAR and self.q_family is QFamily.EXP_SOURCE:
            names = ("sign",)
        if self.k_family is KFamily.POWER_MINUS_43 and self.q_family is QFamily.POWER_SOURCE \
                and self.n is not None and abs(self.n + 1 / 3) < 1e-12:
            names = ("n", "sign")
        return names

    @property
    def is_concrete(self) -> bool:
        return not self.free_parameters

    @property
    def sigma_eff(self) -> float:
        """Exponent of K for the power families (-4/3 for the critical one)."""
        if self.k_family is KFamily.POWER_MINUS_43:
            return -4.0 / 3.0
        if self.k_family is KFamily.POWER:
            return float(self.sigma)
        if self.k_family is KFamily.LINEAR:
            return 0.0
        raise UnknownCase(f"{self.k_family.value} has no power exponent")

    @property
    def exp_alpha(self) -> float:
        return 1.0 if self.alpha is None else float(self.alpha)

    def bind(self, **params) -> "HeatModel":
        return replace(self, **params)

    # continuous coefficients, used for consistency checks and exact ODE data
    def K(self, u):
        u = np.asarray(u, dtype=float)
        k = self.k_family
        if k is KFamily.EXPONENTIAL:
            return np.exp(u)
        if k is KFamily.LINEAR:
            return np.ones_like(u)
        if k in (KFamily.POWER, KFamily.POWER_MINUS_43):
            return u ** self.sigma_eff
        raise UnknownCase("arbitrary K must be supplied as a function")

    def Q(self, u):
        u = np.asarray(u, dtype=float)
        q, sg, d = self.q_family, self.sign, self.delta
        if q is QFamily.ZERO:
            return np.zeros_like(u)
        if q is QFamily.CONSTANT:
            return d + 0.0 * u
        if q is QFamily.EXP_SOURCE:
            return sg * np.exp(self.exp_alpha * u)
        if q is QFamily.POWER_SOURCE:
            return sg * u ** self.n
        if q is QFamily.LOG_SOURCE:
            return d * u * np.log(u)
        if q is QFamily.LINEAR_SOURCE:
            return d * u
        if q is QFamily.MIXED_EXP_CONST:
            return sg * np.exp(u) + d
        if q is QFamily.MIXED_POWER_LINEAR:
            return sg * u ** (self.sigma_eff + 1) + d * u
        if q is QFamily.MIXED_CRITICAL:
            return sg * u ** (-1.0 / 3.0) + d * u
        raise UnknownCase("arbitrary Q must be supplied as a function")


# ---------------------------------------------------------------- generators

def _one(t, x, u):
    return 1.0 + 0.0 * np.asarray(t, dtype=float)


X_T = generator("X1", xi_t=_one)
X_X = generator("X2", xi_x=_one)


def _relabel(gen: SymmetryGenerator, label: str) -> SymmetryGenerator:
    return replace(gen, label=label)


def _ops_11(m):
    return [X_T, X_X]


def _ops_12(m):
    return [X_T, X_X, generator("X3", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x)]


def _ops_21(m):
    return _ops_12(m) + [generator("X4", xi_t=lambda t, x, u: t, eta=lambda t, x, u: -1 + 0 * t)]


def _ops_22(m):
    d = m.delta
    return [X_T, X_X,
            generator("X3", xi_t=lambda t, x, u: np.exp(-d * t),
                      eta=lambda t, x, u: d * np.exp(-d * t)),
            generator("X4", xi_x=lambda t, x, u: x, eta=lambda t, x, u: 2 + 0 * t)]


def _ops_23(m):
    a = m.exp_alpha
    return [X_T, X_X,
            generator("X3", xi_t=lambda t, x, u: 2 * a * t, xi_x=lambda t, x, u: (a - 1) * x,
                      eta=lambda t, x, u: -2 + 0 * t)]


def _ops_24(m):
    return _ops_22(m)[:3]


def _ops_31(m):
    s = m.sigma_eff
    return _ops_12(m) + [generator("X4", xi_x=lambda t, x, u: s * x, eta=lambda t, x, u: 2 * u)]


def _ops_31n(m):
    s = m.sigma_eff
    return [X_T, X_X,
            generator("X3", xi_s=lambda t, x, u, sc, r: 1 + 0 * t),
            generator("X4", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                      xi_s=lambda t, x, u, sc, r: sc),
            generator("X5", xi_x=lambda t, x, u: s * x, eta=lambda t, x, u: 2 * u,
                      xi_s=lambda t, x, u, sc, r: (s + 2) * sc)]


def _log_time_op(label, m):
    # e^{-delta*sigma*t} d/dt + delta e^{-delta*sigma*t} u d/du
    d, s = m.delta, m.sigma_eff
    return generator(label, xi_t=lambda t, x, u: np.exp(-d * s * t),
                     eta=lambda t, x, u: d * np.exp(-d * s * t) * u)


def _ops_32(m):
    s = m.sigma_eff
    return [X_T, X_X, generator("X3", xi_x=lambda t, x, u: s * x, eta=lambda t, x, u: 2 * u),
            _log_time_op("X4", m)]


def _ops_33(m):
    s, n = m.sigma_eff, m.n
    return [X_T, X_X,
            generator("X3", xi_t=lambda t, x, u: 2 * (n - 1) * t,
                      xi_x=lambda t, x, u: (n - s - 1) * x, eta=lambda t, x, u: -2 * u)]


def _ops_34(m):
    return [X_T, X_X, _log_time_op("X3", m)]


_X_PROJ = dict(xi_x=lambda t, x, u: x ** 2, eta=lambda t, x, u: -3 * x * u)
_X_DIL43 = dict(xi_x=lambda t, x, u: 2 * x, eta=lambda t, x, u: -3 * u)


def _ops_41(m):
    return _ops_12(m) + [generator("X4", **_X_DIL43), generator("X5", **_X_PROJ)]


def _ops_42(m):
    return [X_T, X_X, generator("X3", **_X_DIL43), _log_time_op("X4", m),
            generator("X5", **_X_PROJ)]


def _ops_43(m):
    return _ops_33(m)


def _critical_pair(sign):
    """Two x-dependent operators of the critical source case.

    For alpha = -1 the printed operators have complex coefficients; their real
    and imaginary parts are used instead.
    """
    if sign > 0:
        return [generator("X4", xi_x=lambda t, x, u: np.exp(K44 * x),
                          eta=lambda t, x, u: -SQ3 * np.exp(K44 * x) * u),
                generator("X5", xi_x=lambda t, x, u: np.exp(-K44 * x),
                          eta=lambda t, x, u: SQ3 * np.exp(-K44 * x) * u)]
    return [generator("X4", xi_x=lambda t, x, u: np.cos(K44 * x),
                      eta=lambda t, x, u: SQ3 * np.sin(K44 * x) * u),
            generator("X5", xi_x=lambda t, x, u: np.sin(K44 * x),
                      eta=lambda t, x, u: -SQ3 * np.cos(K44 * x) * u)]


def _ops_44(m):
    return [X_T, X_X,
            generator("X3", xi_t=lambda t, x, u: 4 * t / 3, eta=lambda t, x, u: u)
            ] + _critical_pair(m.sign)


def _ops_45(m):
    d = m.delta
    x3 = generator("X3", xi_t=lambda t, x, u: np.exp(4 * d * t / 3),
                   eta=lambda t, x, u: d * np.exp(4 * d * t / 3) * u)
    return [X_T, X_X, x3] + _critical_pair(m.sign)


def _ops_51(m):
    return [X_T, X_X, generator("X3", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                                eta=lambda t, x, u: -2 + 0 * t)]


def _ops_52(m):
    n = m.n
    return [X_T, X_X, generator("X3", xi_t=lambda t, x, u: 2 * (n - 1) * t,
                                xi_x=lambda t, x, u: (n - 1) * x,
                                eta=lambda t, x, u: -2 * u)]


def _ops_53(m):
    d = m.delta
    return [X_T, X_X,
            generator("X3", xi_x=lambda t, x, u: 2 * np.exp(d * t),
                      eta=lambda t, x, u: -d * np.exp(d * t) * x * u),
            generator("X4", eta=lambda t, x, u: np.exp(d * t) * u)]


def _ops_54(m=None):
    return [X_T, X_X,
            generator("X3", xi_x=lambda t, x, u: 2 * t, eta=lambda t, x, u: -x * u),
            generator("X4", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x),
            generator("X5", xi_t=lambda t, x, u: 4 * t ** 2, xi_x=lambda t, x, u: 4 * t * x,
                      eta=lambda t, x, u: -(x ** 2 + 2 * t) * u),
            generator("X6", eta=lambda t, x, u: u)]


def _ops_ts4(m=None):
    """Linear-case operators extended to the mass coordinate s and density rho."""
    return [X_T, X_X,
            generator("X3", xi_x=lambda t, x, u: 2 * t, eta=lambda t, x, u: -x * u),
            generator("X4", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                      xi_s=lambda t, x, u, s, r: s),
            generator("X5", xi_t=lambda t, x, u: 4 * t ** 2, xi_x=lambda t, x, u: 4 * t * x,
                      eta=lambda t, x, u: -(x ** 2 + 2 * t) * u,
                      eta_rho=lambda t, x, u, s, r: -4 * t * r),
            generator("X6", eta=lambda t, x, u: u)]


def _ops_55(m):
    # conjugate of the Q = 0 operators under u -> u exp(-delta t)
    d = m.delta
    return [generator("X1", xi_t=_one, eta=lambda t, x, u: d * u), X_X,
            generator("X3", xi_x=lambda t, x, u: 2 * t, eta=lambda t, x, u: -x * u),
            generator("X4", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                      eta=lambda t, x, u: 2 * d * t * u),
            generator("X5", xi_t=lambda t, x, u: 4 * t ** 2, xi_x=lambda t, x, u: 4 * t * x,
                      eta=lambda t, x, u: (4 * d * t ** 2 - x ** 2 - 2 * t) * u),
            generator("X6", eta=lambda t, x, u: u)]


def _ops_56(m):
    # conjugate of the Q = 0 operators under u -> u - delta t
    d = m.delta
    return [generator("X1", xi_t=_one), X_X,
            generator("X3", xi_x=lambda t, x, u: 2 * t,
                      eta=lambda t, x, u: -x * (u - d * t)),
            generator("X4", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                      eta=lambda t, x, u: 2 * d * t + 0 * u),
            generator("X5", xi_t=lambda t, x, u: 4 * t ** 2, xi_x=lambda t, x, u: 4 * t * x,
                      eta=lambda t, x, u: 4 * d * t ** 2 - (x ** 2 + 2 * t) * (u - d * t)),
            generator("X6", eta=lambda t, x, u: u - d * t)]


def optimal_system(c: float = 0.0) -> list:
    """Representatives Y1..Y6 of the one-dimensional subalgebras (Q = 0, K = 1)."""
    return [
        generator("Y1", xi_x=_one),
        generator("Y2", eta=lambda t, x, u: u),
        generator("Y3", xi_t=_one, eta=lambda t, x, u: c * u),
        generator("Y4", xi_t=_one, xi_x=lambda t, x, u: -2 * t, eta=lambda t, x, u: x * u),
        generator("Y5", xi_t=lambda t, x, u: 2 * t, xi_x=lambda t, x, u: x,
                  eta=lambda t, x, u: 2 * c * u),
        generator("Y6", xi_t=lambda t, x, u: 4 * t ** 2 + 1, xi_x=lambda t, x, u: 4 * t * x,
                  eta=lambda t, x, u: (c - x ** 2 - 2 * t) * u),
    ]


# ---------------------------------------------------------------- catalog

@dataclass(frozen=True)
class SchemeBinding:
    scheme: str
    mesh_class: MeshClass
    generator_labels: Optional[tuple] = None   # subset of the case operators
    operator_set: Optional[Callable] = None    # different coordinate space


@dataclass(frozen=True)
class TransformLink:
    kind: str
    target_key: str
    target_params: Callable  # model -> dict of target parameters
    transform_params: Callable  # model -> dict for the Transform


@dataclass(frozen=True)
class _Case:
    key: str
    k: KFamily
    q: QFamily
    label: str
    ops: Callable
    schemes: tuple
    transforms: tuple = ()
    fixed: dict = field(default_factory=dict)
    match: Callable = lambda m: True

    def template(self) -> HeatModel:
        return HeatModel(self.k, self.q, **self.fixed)


_OU = MeshClass.ORTHOGONAL_UNIFORM
_OUL = MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME
_ONS = MeshClass.ORTHOGONAL_NONUNIFORM_SPACE
_MFL = MeshClass.MOVING_FLAT_LAYERS
_MC = MeshClass.MASS_COORDINATE

K_, Q_ = KFamily, QFamily


def _crit(m):
    return m.n is not None and abs(m.n + 1 / 3) < 1e-12


def _d(m):
    return {"delta": m.delta}


def _ds(m):
    return {"delta": m.delta, "sigma": m.sigma_eff}


_CASES = (
    _Case("K=any,Q=any", K_.ARBITRARY, Q_.ARBITRARY, "op11", _ops_11,
          (SchemeBinding("SH11", _OU),)),
    _Case("K=any,Q=0", K_.ARBITRARY, Q_.ZERO, "op12", _ops_12,
          (SchemeBinding("SH12", _OU),)),
    _Case("K=e^u,Q=0", K_.EXPONENTIAL, Q_.ZERO, "op21", _ops_21,
          (SchemeBinding("SH21", _OU),)),
    _Case("K=e^u,Q=d", K_.EXPONENTIAL, Q_.CONSTANT, "op22", _ops_22,
          (SchemeBinding("SH22", _OUL),),
          (TransformLink("CH22", "K=e^u,Q=0", lambda m: {}, _d),)),
    _Case("K=e^u,Q=+-e^{au}", K_.EXPONENTIAL, Q_.EXP_SOURCE, "op23", _ops_23,
          (SchemeBinding("SH23", _OU),)),
    _Case("K=e^u,Q=+-e^u+d", K_.EXPONENTIAL, Q_.MIXED_EXP_CONST, "op24", _ops_24,
          (SchemeBinding("SH24", _OUL),),
          (TransformLink("CH22", "K=e^u,Q=+-e^{au}",
                         lambda m: {"alpha": 1.0, "sign": m.sign}, _d),)),
    _Case("K=u^s,Q=0", K_.POWER, Q_.ZERO, "op31", _ops_31,
          (SchemeBinding("SH31", _OU), SchemeBinding("SH31A", _MFL),
           SchemeBinding("SH31N", _MC, operator_set=_ops_31n))),
    _Case("K=u^s,Q=d*u", K_.POWER, Q_.LINEAR_SOURCE, "op32", _ops_32,
          (SchemeBinding("SH32", _OUL),),
          (TransformLink("CH32", "K=u^s,Q=0", lambda m: {"sigma": m.sigma}, _ds),)),
    _Case("K=u^s,Q=+-u^n", K_.POWER, Q_.POWER_SOURCE, "op33", _ops_33,
          (SchemeBinding("SH33", _OU),)),
    _Case("K=u^s,Q=+-u^{s+1}+d*u", K_.POWER, Q_.MIXED_POWER_LINEAR, "op34", _ops_34,
          (SchemeBinding("SH34", _OUL),),
          (TransformLink("CH32", "K=u^s,Q=+-u^n",
                         lambda m: {"sigma": m.sigma, "n": m.sigma + 1, "sign": m.sign}, _ds),)),
    _Case("K=u^-4/3,Q=0", K_.POWER_MINUS_43, Q_.ZERO, "op41", _ops_41,
          (SchemeBinding("SH41", _ONS),)),
    _Case("K=u^-4/3,Q=d*u", K_.POWER_MINUS_43, Q_.LINEAR_SOURCE, "op42", _ops_42,
          (SchemeBinding("SH42", _ONS),),
          (TransformLink("CH32", "K=u^-4/3,Q=0", lambda m: {}, _ds),)),
    _Case("K=u^-4/3,Q=+-u^n", K_.POWER_MINUS_43, Q_.POWER_SOURCE, "op43", _ops_43,
          (SchemeBinding("SH33", _OU),), match=lambda m: not _crit(m)),
    _Case("K=u^-4/3,Q=+u^-1/3", K_.POWER_MINUS_43, Q_.POWER_SOURCE, "op44", _ops_44,
          (SchemeBinding("SH44A", _ONS),),
          (TransformLink("CH44A", "K=u^-4/3,Q=0", lambda m: {}, lambda m: {}),),
          fixed={"n": -1 / 3, "sign": 1.0}, match=lambda m: _crit(m) and m.sign == 1),
    _Case("K=u^-4/3,Q=-u^-1/3", K_.POWER_MINUS_43, Q_.POWER_SOURCE, "op44", _ops_44,
          (SchemeBinding("SH44B", _ONS),),
          (TransformLink("CH44B", "K=u^-4/3,Q=0", lambda m: {}, lambda m: {}),),
          fixed={"n": -1 / 3, "sign": -1.0}, match=lambda m: _crit(m) and m.sign == -1),
    _Case("K=u^-4/3,Q=+u^-1/3+d*u", K_.POWER_MINUS_43, Q_.MIXED_CRITICAL, "op45", _ops_45,
          (SchemeBinding("SH45A", _ONS),),
          (TransformLink("CH44A", "K=u^-4/3,Q=d*u", _d, lambda m: {}),
           TransformLink("CH32", "K=u^-4/3,Q=+u^-1/3", lambda m: {}, _ds)),
          fixed={"sign": 1.0}, match=lambda m: m.sign == 1),
    _Case("K=u^-4/3,Q=-u^-1/3+d*u", K_.POWER_MINUS_43, Q_.MIXED_CRITICAL, "op45", _ops_45,
          (SchemeBinding("SH45B", _ONS),),
          (TransformLink("CH44B", "K=u^-4/3,Q=d*u", _d, lambda m: {}),
           TransformLink("CH32", "K=u^-4/3,Q=-u^-1/3", lambda m: {}, _ds)),
          fixed={"sign": -1.0}, match=lambda m: m.sign == -1),
    _Case("K=1,Q=+-e^u", K_.LINEAR, Q_.EXP_SOURCE, "op51", _ops_51,
          (SchemeBinding("SH51", _OU),), match=lambda m: m.alpha in (None, 1)),
    _Case("K=1,Q=+-u^n", K_.LINEAR, Q_.POWER_SOURCE, "op52", _ops_52,
          (SchemeBinding("SH52", _OU),)),
    _Case("K=1,Q=d*u*ln(u)", K_.LINEAR, Q_.LOG_SOURCE, "op53", _ops_53,
          (SchemeBinding("SH53", _MFL),)),
    _Case("K=1,Q=0", K_.LINEAR, Q_.ZERO, "op54", _ops_54,
          (SchemeBinding("SH54E", _MFL), SchemeBinding("SH54I", _MFL),
           SchemeBinding("TS5G", _MC, operator_set=_ops_ts4),
           SchemeBinding("TS5U", _MC, operator_set=_ops_ts4),
           SchemeBinding("EQ55A", _OU, generator_labels=("X1", "X2", "X4", "X6")))),
    _Case("K=1,Q=d*u", K_.LINEAR, Q_.LINEAR_SOURCE, "op55", _ops_55, (),
          (TransformLink("CH55", "K=1,Q=0", lambda m: {}, _d),)),
    _Case("K=1,Q=d", K_.LINEAR, Q_.CONSTANT, "op56", _ops_56, (),
          (TransformLink("CH56", "K=1,Q=0", lambda m: {}, _d),)),
)

_BY_KEY = {c.key: c for c in _CASES}


@dataclass(frozen=True)
class ModelEntry:
    """Catalog entry of one classified case, bound to a concrete model."""

    model: HeatModel
    key: str
    operator_label: str
    generators: tuple
    schemes: tuple
    mesh_classes: tuple
    transforms: tuple
    _case: _Case = field(repr=False, compare=False, default=None)

    @property
    def mesh_class(self) -> MeshClass:
        return self.mesh_classes[0]

    def binding(self, scheme) -> SchemeBinding:
        name = getattr(scheme, "value", scheme)
        for b in self._case.schemes:
            if b.scheme == name:
                return b
        raise UnknownCase(f"scheme {name} is not attached to case {self.key}")

    def scheme_mesh_class(self, scheme) -> MeshClass:
        return self.binding(scheme).mesh_class

    def scheme_generators(self, scheme) -> list:
        """Operators a scheme is built to preserve, in its own coordinates."""
        b = self.binding(scheme)
        gens = list(b.operator_set(self.model)) if b.operator_set else list(self.generators)
        if b.generator_labels is not None:
            gens = [g for g in gens if g.label in b.generator_labels]
        return gens

    def transform_targets(self) -> list:
        """``(Transform, target HeatModel)`` pairs for every link of this case."""
        from .transforms import Transform
        out = []
        for link in self._case.transforms:
            tgt = _BY_KEY[link.target_key].template().bind(**link.target_params(self.model))
            out.append((Transform(link.kind, **link.transform_params(self.model)), tgt))
        return out


def _find_case(model: HeatModel) -> _Case:
    hits = [c for c in _CASES
            if c.k is model.k_family and c.q is model.q_family and c.match(model)
            and all(getattr(model, k) in (None, v) for k, v in c.fixed.items()
                    if k != "n") and (("n" not in c.fixed) or _crit(model))]
    if len(hits) != 1:
        raise UnknownCase(
            f"(K={model.k_family.value}, Q={model.q_family.value}) with "
            f"sigma={model.sigma}, n={model.n} is not a classified case")
    return hits[0]


def lookup(model) -> ModelEntry:
    """Catalog entry for a model or case key.

    Raises
    ------
    UnknownCase
        If the combination is not part of the classification.
    """
    if isinstance(model, str):
        model = parse_key(model)
    case = _find_case(model)
    gens = tuple(case.ops(model)) if model.is_concrete else _unbound_ops(case, model)
    meshes = tuple(dict.fromkeys(b.mesh_class for b in case.schemes)) or (_OU,)
    return ModelEntry(model=model, key=case.key, operator_label=case.label,
                      generators=gens, schemes=tuple(b.scheme for b in case.schemes),
                      mesh_classes=meshes,
                      transforms=tuple(t.kind for t in case.transforms), _case=case)


# stand-in values used only to enumerate the operators of a template
_PLACEHOLDER = {"sigma": 1.0, "n": 2.0, "delta": 1.0, "alpha": 1.0, "sign": 1.0}


def _unbound_ops(case: _Case, model: HeatModel) -> tuple:
    """Operators of a template; their coefficients refuse evaluation."""
    free = model.free_parameters
    probe = model.bind(**{k: _PLACEHOLDER[k] for k in free})

    def refuse(*_args, label=""):
        raise UnknownCase(f"bind {', '.join(free)} before evaluating {label}")

    out = []
    for g in case.ops(probe):
        r = lambda *a, _l=g.label: refuse(*a, label=_l)
        out.append(SymmetryGenerator(r, r, r, g.label, r if g.xi_s else None,
                                     r if g.eta_rho else None))
    return tuple(out)


def list_models() -> list:
    """Template model of every classified case, each exactly once."""
    return [c.template() for c in _CASES]


def case_keys() -> list:
    return [c.key for c in _CASES]


def case_info(key: str) -> _Case:
    """Raw catalog row (operators, scheme bindings, transform links) of a case key."""
    try:
        return _BY_KEY[key]
    except KeyError:
        raise UnknownCase(f"unknown case key {key!r}") from None


def key_of(model: HeatModel) -> str:
    return _find_case(model).key


def parse_key(key: str, **params) -> HeatModel:
    """Model for a case key; a sign written in the key is bound.

    ``"K=e^u,Q=+e^{au}"`` binds ``sign=+1`` on the free-sign case
    ``"K=e^u,Q=+-e^{au}"``.  Extra keyword parameters are bound as well.
    """
    compact = key.replace(" ", "")
    if compact in _BY_KEY:
        return _BY_KEY[compact].template().bind(**params)
    try:
        kpart, qpart = compact.split(",Q=")
    except ValueError:
        raise UnknownCase(f"malformed case key {key!r}") from None
    for sgn, val in (("+", 1.0), ("-", -1.0)):
        if qpart.startswith(sgn) and not qpart.startswith("+-"):
            cand = f"{kpart},Q=+-{qpart[1:]}"
            if cand in _BY_KEY:
                return _BY_KEY[cand].template().bind(sign=val, **params)
    raise UnknownCase(f"unknown case key {key!r}")
