"""Invariance defects of an invariant scheme and of the plain explicit scheme
under the projective and Galilean-type operators of the linear heat equation.

    python3 demos/symmetry_audit.py
"""
import numpy as np

from heatsym.audit import audit_scheme, generators_for
from heatsym.model_catalog import lookup, parse_key

heat = parse_key("K=1,Q=0")
labels = [g.label for g in lookup(heat).generators]
rng = np.random.default_rng(0)
for scheme in ("SH54E", "EQ55A"):
    rows = audit_scheme(scheme, heat, generators_for(scheme, heat, labels), trials=50, rng=rng)
    print(scheme, "  ".join(f"{r.generator}:{r.defect:.1e}" for r in rows))
