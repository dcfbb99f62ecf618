"""Command-line driver: ``heatsym <command> [options]``.

Commands: run, audit, convergence, conserve-check, transform, list-models.
Options may also come from a ``key = value`` config file (``--config``); a
flag given on the command line wins over the file.  The sampling seed is
``--seed``, falling back to the ``HEATSYM_SEED`` environment variable.

Exit codes: 0 success, 2 configuration/input error, 3 solver failure,
4 check failed (audit defect, convergence order, conservation defect).
"""
from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import exact_solutions as E
from .audit import AUDIT_TOL, DEFAULT_EPS, audit_scheme, catalog_audit, generators_for
from .conservation import heat_report, mass_report, moment_report
from .errors import HeatSymError
from .io import read_solution, read_table, write_rows, write_solution
from .meshes import (Layer, init_mass_mesh, log_time_meth22, log_time_meth32,
                     uniform_space, uniform_time)
from .model_catalog import MeshClass, case_info, case_keys, lookup, parse_key
from .schemes import GEOMETRY, LOG32, MASS, MOVING, SchemeId, SchemeParams, step
from .studies import REFERENCES, kernel_ends, refinement_study, superposition_ends
from .transforms import Transform, compose, transform_solution

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
MOMENT_TOL = 1e-10
HEAT_TOL = 1e-10


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ config

def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{no}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get("HEATSYM_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"HEATSYM_SEED must be an integer, got {env!r}") from None


_EXPR_NS = {name: getattr(np, name) for name in
            ("exp", "log", "sqrt", "sin", "cos", "tanh", "cosh", "sinh", "abs", "pi")}


def expr_fn(text: str) -> Callable:
    """Numpy expression in ``u`` (e.g. ``1 + u**2``) as a callable."""
    try:
        code = compile(text, "<expr>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from None
    bad = [n for n in code.co_names if n != "u" and n not in _EXPR_NS]
    if bad:
        raise ConfigError(f"unknown names {bad} in {text!r}")
    return lambda u: eval(code, {"__builtins__": {}}, dict(_EXPR_NS, u=u))


_IC = re.compile(r"^\s*([A-Za-z_-]+)\s*(?:\((.*)\))?\s*$")


def parse_ic(text: str) -> tuple:
    """``name(k=v, ...)`` -> ``(name, {k: v})``; custom takes a file path."""
    m = _IC.match(text or "")
    if not m:
        raise ConfigError(f"cannot parse initial condition {text!r}")
    name = m.group(1).lower().replace("_", "-")
    body = (m.group(2) or "").strip()
    if name == "custom":
        return name, {"path": body}
    kw = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        if "=" not in part:
            raise ConfigError(f"initial-condition argument {part!r} needs k=v")
        k, v = part.split("=", 1)
        try:
            kw[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"initial-condition value {v!r} is not a number") from None
    return name, kw


@dataclass
class RunConfig:
    model: str
    scheme: str
    x_left: float = -10.0
    x_right: float = 10.0
    nodes: int = 101
    T: float = 1.0
    steps: int = 100
    time_mesh: Optional[str] = None
    ic: str = "gaussian(C=1,t0=1,a=0)"
    boundary: str = "dirichlet"
    weight_alpha: float = 1.0
    output: str = "-"
    model_params: dict = field(default_factory=dict)
    K: Optional[str] = None
    Q: Optional[str] = None
    log_time_form: bool = False

    def validate(self):
        try:
            self.scheme = SchemeId(self.scheme.upper()).value
        except ValueError:
            raise ConfigError(f"unknown scheme {self.scheme!r}") from None
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.nodes < 3:
            raise ConfigError("nodes must be >= 3")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not self.x_right > self.x_left:
            raise ConfigError("domain must have x_left < x_right")
        if self.boundary not in ("dirichlet", "exact", "copy-ends"):
            raise ConfigError("boundary must be dirichlet, exact or copy-ends")


_PARAM_KEYS = ("sigma", "n", "delta", "alpha", "sign")
_RUN_KEYS = {"model": str, "scheme": str, "x_left": float, "x_right": float, "nodes": int,
             "T": float, "steps": int, "time_mesh": str, "ic": str, "boundary": str,
             "weight_alpha": float, "output": str, "K": str, "Q": str}


def _truthy(v) -> bool:
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def build_run_config(args, need=("model", "scheme")) -> RunConfig:
    merged = read_config(args.config) if getattr(args, "config", None) else {}
    if "domain" in merged:
        try:
            a, b = (float(v) for v in merged.pop("domain").split(","))
        except ValueError:
            raise ConfigError("domain must be 'x_left, x_right'") from None
        merged.setdefault("x_left", a)
        merged.setdefault("x_right", b)
    if "initial_condition" in merged:
        merged.setdefault("ic", merged.pop("initial_condition"))
    if "output_path" in merged:
        merged.setdefault("output", merged.pop("output_path"))
    for k in list(_RUN_KEYS) + list(_PARAM_KEYS) + ["log_time_form"]:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            merged[k] = v
    unknown = set(merged) - set(_RUN_KEYS) - set(_PARAM_KEYS) - {"log_time_form", "seed"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for k in need:
        if k not in merged:
            raise ConfigError(f"missing required setting {k!r}")
    kw = {}
    try:
        for k, typ in _RUN_KEYS.items():
            if k in merged:
                kw[k] = typ(merged[k])
        params = {k: float(merged[k]) for k in _PARAM_KEYS if k in merged}
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    kw.setdefault("scheme", "SH11")
    cfg = RunConfig(model_params=params, log_time_form=_truthy(merged.get("log_time_form", "")),
                    **kw)
    cfg.validate()
    return cfg


# ------------------------------------------------------------- run plumbing

def scheme_params(cfg: RunConfig, boundary_fn=None) -> SchemeParams:
    model = parse_key(cfg.model, **cfg.model_params)
    policy = "copy-ends" if cfg.boundary == "copy-ends" else "dirichlet"
    return SchemeParams(model=model, weight_alpha=cfg.weight_alpha,
                        K_fn=expr_fn(cfg.K) if cfg.K else None,
                        Q_fn=expr_fn(cfg.Q) if cfg.Q else None,
                        boundary=policy, boundary_fn=boundary_fn,
                        log_time_form=cfg.log_time_form)


def time_levels(cfg: RunConfig, model):
    sid = SchemeId(cfg.scheme)
    want = "uniform"
    if GEOMETRY[sid] is MeshClass.ORTHOGONAL_UNIFORM_LOG_TIME:
        want = "meth32" if sid in LOG32 else "meth22"
    kind = (cfg.time_mesh or want).lower()
    if kind != want:
        raise ConfigError(f"{cfg.scheme} runs on a {want} time mesh, not {kind}")
    if kind == "uniform":
        return uniform_time(cfg.T, cfg.steps)
    if kind == "meth22":
        return log_time_meth22(model.delta, cfg.T, cfg.steps)
    return log_time_meth32(model.delta, model.sigma_eff, cfg.T, cfg.steps)


def initial_data(cfg: RunConfig):
    """``(u0, exact)`` where ``exact`` is ``None`` or a moving/fixed end-data builder."""
    name, kw = parse_ic(cfg.ic)
    if name == "gaussian":
        k = E.KernelSolution(kw.get("C", 1.0), kw.get("t0", 1.0), kw.get("a", 0.0))
        return (lambda x: E.kernel_value(k, 0.0, x)), ("kernel", k)
    if name in ("two-gaussians", "twogaussians"):
        sp = E.SuperposedKernels(kw.get("alpha", 1.0), kw.get("beta", 1.0), kw.get("t1", 10.0),
                                 kw.get("t2", 10.0), kw.get("a", -8.0), kw.get("b", 8.0))
        return (lambda x: sp.value(0.0, x)), ("superposition", sp)
    if name == "constant":
        c = kw.get("c", 1.0)
        return (lambda x: c + 0.0 * np.asarray(x, dtype=float)), None
    if name == "hat":
        height, width = kw.get("height", 1.0), kw.get("width", 1.0)
        base = kw.get("base", 1.0)
        centre = kw.get("centre", 0.5 * (cfg.x_left + cfg.x_right))
        return (lambda x: base + height * np.maximum(
            0.0, 1 - np.abs(np.asarray(x, dtype=float) - centre) / width)), None
    if name == "custom":
        try:
            tab = read_table(kw["path"])
        except OSError as exc:
            raise ConfigError(f"cannot read initial table: {exc}") from None
        return (lambda x: np.interp(x, tab[:, 0], tab[:, 1])), None
    raise ConfigError(f"unknown initial condition {name!r}")


def _exact_ends(cfg: RunConfig, exact, moving: bool):
    if exact is None:
        raise ConfigError("boundary = exact needs a gaussian or two-gaussians start")
    if cfg.model.replace(" ", "") != "K=1,Q=0":
        raise ConfigError("exact end data is only available for K=1,Q=0")
    kind, obj = exact
    if moving:
        if kind == "kernel":
            return kernel_ends(obj, cfg.x_left, cfg.x_right)
        return superposition_ends(obj, cfg.x_left, cfg.x_right)
    val = (lambda t, x: E.kernel_value(obj, t, x)) if kind == "kernel" else obj.value
    xl, xr = cfg.x_left, cfg.x_right
    return lambda t: ((xl, val(t, xl)), (xr, val(t, xr)))


def initial_layer(cfg: RunConfig, u0) -> Layer:
    sid = SchemeId(cfg.scheme)
    if sid is SchemeId.SH31N:
        mass, _ = quad(lambda x: float(u0(x)), cfg.x_left, cfg.x_right, limit=200)
        return init_mass_mesh(lambda x: float(u0(x)), cfg.x_left, mass / (cfg.nodes - 1),
                              cfg.nodes)
    x = uniform_space(cfg.x_left, cfg.x_right, cfg.nodes)
    u = np.asarray(u0(x), dtype=float) * np.ones_like(x)
    if sid in MASS:
        return Layer(0.0, x, u, s=x - x[0], rho=np.ones_like(x))
    return Layer(0.0, x, u)


class SolverFailure(Exception):
    def __init__(self, step_no, t, exc):
        super().__init__(f"step {step_no} (t = {t:.6g}): {type(exc).__name__}: {exc}")


def simulate(cfg: RunConfig) -> list:
    """Build everything from the config and integrate; solver errors propagate."""
    u0, exact = initial_data(cfg)
    sid = SchemeId(cfg.scheme)
    bfn = _exact_ends(cfg, exact, sid in MOVING) if cfg.boundary == "exact" else None
    try:
        p = scheme_params(cfg, bfn)
        mesh = time_levels(cfg, p.model)
        layer = initial_layer(cfg, u0)
    except HeatSymError as exc:
        raise ConfigError(str(exc)) from None
    layers = [layer]
    for j in range(1, len(mesh)):
        tau = mesh.t[j] - mesh.t[j - 1]
        try:
            res = step(sid, p, layers[-1], tau)
        except HeatSymError as exc:
            raise SolverFailure(j, mesh.t[j], exc) from None
        layers.append(res.layer.with_(t=mesh.t[j]))
    return layers


def _out(path):
    return sys.stdout if path in (None, "-") else path


# --------------------------------------------------------------- commands

def cmd_run(args) -> int:
    cfg = build_run_config(args)
    layers = simulate(cfg)
    write_solution(_out(cfg.output), layers)
    return EXIT_OK


def _model_from_args(args):
    params = {k: getattr(args, k) for k in _PARAM_KEYS if getattr(args, k, None) is not None}
    return parse_key(args.model, **params)


def _eps_list(text: str) -> tuple:
    try:
        eps = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad eps list {text!r}") from None
    if not eps or any(e == 0 for e in eps):
        raise ConfigError("eps values must be nonzero")
    return eps


def cmd_audit(args) -> int:
    seed = resolve_seed(args.seed)
    eps = _eps_list(args.eps)
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    rows = []
    if args.all:
        for key, mp, row in catalog_audit(args.trials, eps, seed):
            rows.append((key, row))
    else:
        if not args.model:
            raise ConfigError("audit needs --model (or --all)")
        try:
            model = _model_from_args(args)
            entry = lookup(model)
        except HeatSymError as exc:
            raise ConfigError(str(exc)) from None
        p = SchemeParams(model=model, K_fn=expr_fn(args.K) if args.K else None,
                         Q_fn=expr_fn(args.Q) if args.Q else None,
                         weight_alpha=args.weight_alpha if args.weight_alpha is not None else 1.0,
                         log_time_form=bool(args.log_time_form))
        schemes = [args.scheme.upper()] if args.scheme else list(entry.schemes)
        labels = args.generators.split(",") if args.generators else None
        rng = np.random.default_rng(seed)
        for sch in schemes:
            try:
                gens = generators_for(sch, p, labels)
            except HeatSymError as exc:
                raise ConfigError(str(exc)) from None
            for row in audit_scheme(sch, p, gens, args.trials, eps, rng):
                rows.append((entry.key, row))
    print(f"{'case':28s} {'scheme':7s} {'operator':8s} {'max_defect':>11s}  status")
    for key, r in rows:
        print(f"{key:28s} {r.scheme:7s} {r.generator:8s} {r.defect:11.3e}  "
              f"{'ok' if r.ok else 'FAIL'}")
    bad = sum(not r.ok for _, r in rows)
    print(f"{len(rows)} pairs, {bad} above {AUDIT_TOL:g}")
    return EXIT_OK if bad == 0 else EXIT_CHECK


_REF_BY_SCHEME = {r.scheme: name for name, r in REFERENCES.items()}


def cmd_convergence(args) -> int:
    if args.refinements < 1:
        raise ConfigError("refinements must be >= 1")
    name = args.reference
    if name is None:
        sch = (args.scheme or "EQ55A").upper()
        if sch not in _REF_BY_SCHEME:
            raise ConfigError(f"no exact reference for {sch}; choose from "
                              f"{sorted(_REF_BY_SCHEME)}")
        name = _REF_BY_SCHEME[sch]
    if name not in REFERENCES:
        raise ConfigError(f"unknown reference {name!r}")
    try:
        rows = refinement_study(REFERENCES[name], args.refinements, args.lam)
    except HeatSymError as exc:
        raise SolverFailure(0, float("nan"), exc) from None
    table = [(r.h, r.tau, r.error, r.order) for r in rows]
    write_rows(_out(args.output), ("h", "tau", "error", "order"), table)
    final = rows[-1].order
    return EXIT_OK if final >= args.min_order else EXIT_CHECK


def cmd_conserve_check(args) -> int:
    if args.input:
        try:
            layers = read_solution(args.input)
        except (OSError, HeatSymError, ValueError) as exc:
            raise ConfigError(f"cannot read {args.input}: {exc}") from None
        cfg = build_run_config(args, need=("model",))
    else:
        cfg = build_run_config(args, need=("model",))
        if args.scheme is None and "scheme" not in (read_config(args.config) if args.config
                                                    else {}):
            cfg.scheme = "SH31N"
        layers = simulate(cfg)
    law = args.law or ("moment" if layers[0].s is not None else "heat")
    try:
        if law == "mass":
            rep, tol = mass_report(layers), 0.0
        elif law == "moment":
            rep, tol = moment_report(layers, scheme_params(cfg)), MOMENT_TOL
        elif law == "heat":
            rep, tol = heat_report(layers, scheme_params(cfg).K), HEAT_TOL
        else:
            raise ConfigError(f"unknown law {law!r}")
    except HeatSymError as exc:
        raise ConfigError(str(exc)) from None
    write_rows(_out(args.output), ("step", "defect"), rep.rows())
    print(f"{rep.law.value}: max defect {rep.max_defect:.3e}", file=sys.stderr)
    return EXIT_OK if rep.max_defect <= tol else EXIT_CHECK


def _transform_from_args(args):
    parts = []
    for name in args.transform.split(","):
        kw = {}
        nm = name.strip().upper()
        if nm in ("CH22", "CH32", "CH55", "CH56"):
            kw["delta"] = args.delta
        if nm == "CH32":
            kw["sigma"] = args.sigma
        parts.append(Transform(nm, **kw))
    return parts[0] if len(parts) == 1 else compose(*parts)


def cmd_transform(args) -> int:
    try:
        tr = _transform_from_args(args)
        layers = read_solution(args.input)
        out = transform_solution(tr, layers, inverse=args.inverse)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from None
    except (HeatSymError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    write_solution(_out(args.output), out)
    return EXIT_OK


def cmd_list_models(args) -> int:
    print(f"{'case':28s} {'ops':5s} {'free params':18s} {'schemes':26s} transforms")
    for key in case_keys():
        c = case_info(key)
        schemes = ",".join(b.scheme for b in c.schemes) or "-"
        trs = ",".join(f"{t.kind}->{t.target_key}" for t in c.transforms) or "-"
        free = ",".join(c.template().free_parameters) or "-"
        print(f"{key:28s} {c.label:5s} {free:18s} {schemes:26s} {trs}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_model_opts(p, with_run=True):
    p.add_argument("--model", help="case key, e.g. 'K=u^s,Q=0'")
    p.add_argument("--scheme", help="scheme id, e.g. SH54E")
    for k in _PARAM_KEYS:
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--K", help="numpy expression in u for arbitrary K")
    p.add_argument("--Q", help="numpy expression in u for arbitrary Q")
    p.add_argument("--weight-alpha", dest="weight_alpha", type=float)
    p.add_argument("--log-time-form", dest="log_time_form", action="store_true", default=None)
    if with_run:
        p.add_argument("--x-left", dest="x_left", type=float)
        p.add_argument("--x-right", dest="x_right", type=float)
        p.add_argument("--nodes", type=int)
        p.add_argument("--T", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--time-mesh", dest="time_mesh", choices=("uniform", "meth22", "meth32"))
        p.add_argument("--ic", help="gaussian(C=,t0=,a=) | two-gaussians(alpha=,beta=,t1=,t2=,"
                                    "a=,b=) | constant(c=) | hat(height=,width=,base=) | "
                                    "custom(path)")
        p.add_argument("--boundary", choices=("dirichlet", "exact", "copy-ends"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--seed", type=int, help="sampling seed (default $HEATSYM_SEED or 0)")
    common.add_argument("-o", "--output", help="output CSV path ('-' for stdout)")

    ap = argparse.ArgumentParser(prog="heatsym", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="integrate a scheme, write solution CSV")
    _add_model_opts(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", parents=[common], help="symmetry invariance audit")
    _add_model_opts(p, with_run=False)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eps", default=",".join(str(e) for e in DEFAULT_EPS))
    p.add_argument("--generators", help="comma list of operator labels, e.g. X3,X5")
    p.add_argument("--all", action="store_true", help="audit the whole catalog")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("convergence", parents=[common], help="refinement study vs exact solution")
    p.add_argument("--scheme")
    p.add_argument("--reference", choices=sorted(REFERENCES))
    p.add_argument("--refinements", type=int, default=3)
    p.add_argument("--lam", type=float, default=0.25, help="tau/h^2")
    p.add_argument("--min-order", dest="min_order", type=float, default=1.8)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("conserve-check", parents=[common], help="discrete conservation report")
    _add_model_opts(p)
    p.add_argument("--input", help="check an existing solution CSV instead of running")
    p.add_argument("--law", choices=("mass", "moment", "heat"))
    p.set_defaults(func=cmd_conserve_check)

    p = sub.add_parser("transform", parents=[common], help="map a solution CSV")
    p.add_argument("--transform", required=True, help="CH22|CH32|CH44A|CH44B|CH55|CH56, "
                                                      "comma list composes left to right")
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("list-models", parents=[common], help="print the case catalog")
    p.set_defaults(func=cmd_list_models)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"heatsym: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"heatsym: solver failure at {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except HeatSymError as exc:
        print(f"heatsym: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
