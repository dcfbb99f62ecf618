"""Symmetry audit: invariance defects of schemes under their admitted operators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UnknownCase
from .model_catalog import lookup, parse_key
from .schemes import SchemeParams, as_params, sample_stencils
from .symmetry import invariance_defect

AUDIT_TOL = 1e-8
DEFAULT_EPS = (0.05, -0.05, 0.2, -0.2)


@dataclass(frozen=True)
class AuditRow:
    scheme: str
    generator: str
    defect: float

    @property
    def ok(self) -> bool:
        return self.defect < AUDIT_TOL


def generators_for(scheme, params, labels: Optional[Sequence[str]] = None) -> list:
    """Operators to audit a scheme against.

    Without ``labels`` these are the operators the scheme is built to keep.
    With ``labels`` any operator of the case (in the scheme's coordinates) can
    be requested, including ones the scheme is known to break.
    """
    p = as_params(params)
    entry = lookup(p.model)
    name = getattr(scheme, "value", scheme)
    if labels is None:
        return entry.scheme_generators(name)
    b = entry.binding(name)
    pool = list(b.operator_set(p.model)) if b.operator_set else list(entry.generators)
    by = {g.label: g for g in pool}
    missing = [l for l in labels if l not in by]
    if missing:
        raise UnknownCase(f"case {entry.key} has no operators {missing}; "
                          f"available: {sorted(by)}")
    return [by[l] for l in labels]


def audit_scheme(scheme, params, generators=None, trials: int = 100,
                 eps: Sequence[float] = DEFAULT_EPS, rng=None) -> list:
    """Max normalized invariance defect per operator over random stencils."""
    p = as_params(params)
    rng = rng if rng is not None else np.random.default_rng(0)
    gens = generators if generators is not None else generators_for(scheme, p)
    st = sample_stencils(scheme, p, trials, rng)
    rows = []
    for g in gens:
        d = max(invariance_defect(scheme, p, g, st, e, check_input=False) for e in eps)
        rows.append(AuditRow(getattr(scheme, "value", scheme), g.label, d))
    return rows


def _k2(u):
    return 1 + u ** 2


# one concrete configuration per case and scheme variant
CATALOG_CONFIGS = (
    ("K=any,Q=any", {}, dict(K_fn=_k2, Q_fn=np.sin)),
    ("K=any,Q=0", {}, dict(K_fn=_k2)),
    ("K=e^u,Q=0", {}, {}),
    ("K=e^u,Q=d", {"delta": 1.0}, {}),
    ("K=e^u,Q=d", {"delta": -1.0}, {}),
    ("K=e^u,Q=+-e^{au}", {"alpha": 2.0, "sign": 1.0}, {}),
    ("K=e^u,Q=+-e^u+d", {"sign": -1.0, "delta": 1.0}, {}),
    ("K=u^s,Q=0", {"sigma": 2.0}, {}),
    ("K=u^s,Q=0", {"sigma": 1.0}, {"weight_alpha": 0.5}),
    ("K=u^s,Q=d*u", {"sigma": 2.0, "delta": 1.0}, {}),
    ("K=u^s,Q=d*u", {"sigma": 2.0, "delta": 1.0}, {"log_time_form": True}),
    ("K=u^s,Q=+-u^n", {"sigma": 2.0, "n": 3.0, "sign": 1.0}, {}),
    ("K=u^s,Q=+-u^{s+1}+d*u", {"sigma": 1.5, "sign": -1.0, "delta": -1.0}, {}),
    ("K=u^-4/3,Q=0", {}, {}),
    ("K=u^-4/3,Q=d*u", {"delta": 1.0}, {}),
    ("K=u^-4/3,Q=+-u^n", {"n": 2.0, "sign": 1.0}, {}),
    ("K=u^-4/3,Q=+u^-1/3", {}, {}),
    ("K=u^-4/3,Q=-u^-1/3", {}, {}),
    ("K=u^-4/3,Q=+u^-1/3+d*u", {"delta": 1.0}, {}),
    ("K=u^-4/3,Q=-u^-1/3+d*u", {"delta": -1.0}, {}),
    ("K=1,Q=+-e^u", {"sign": 1.0}, {}),
    ("K=1,Q=+-u^n", {"n": 3.0, "sign": -1.0}, {}),
    ("K=1,Q=d*u*ln(u)", {"delta": 1.0}, {}),
    ("K=1,Q=0", {}, {}),
)


def catalog_audit(trials: int = 100, eps: Sequence[float] = DEFAULT_EPS, seed: int = 0) -> list:
    """Audit every scheme of every case; returns ``(key, params, AuditRow)`` triples."""
    rng = np.random.default_rng(seed)
    out = []
    for key, mp, extra in CATALOG_CONFIGS:
        m = parse_key(key, **mp)
        p = SchemeParams(model=m, **extra)
        for sch in lookup(m).schemes:
            for row in audit_scheme(sch, p, trials=trials, eps=eps, rng=rng):
                out.append((key, dict(mp, **{k: v for k, v in extra.items()
                                             if not callable(v)}), row))
    return out
