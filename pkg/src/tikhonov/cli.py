"""Command-line driver: ``tikhonov {run, sweep, check, dichotomy, hints}``.

Exit codes: 0 success, 2 integration or solver failure, 3 failed hypothesis
audit (or violated dichotomy hypothesis), 64 usage error.
"""

from __future__ import annotations

import argparse
import ast
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .core import FastSlowSystem
from .dichotomy import continuity_modulus, fit_dichotomy
from .errors import HypothesisViolated, TikhonovError
from .hypotheses import _jsonable, full_report
from .integrate import IntegratorConfig
from .layer import integrate_layer, spectral_margin
from .models import (ALLEE_DEFAULT_INIT, PREDPREY_DEFAULT_INIT, AlleeParams, PredPreyParams, allee_system,
                     predprey_system)
from .reduction import convergence_order, error_curves, integrate_full, integrate_reduced, solve_qss

EXIT_OK, EXIT_INTEGRATION, EXIT_HYPOTHESIS, EXIT_USAGE = 0, 2, 3, 64
MODELS = ("predprey", "allee", "user-json")
LAYER_DECAY_SPAN = 100.0      # layer integrated to tau = LAYER_DECAY_SPAN / kappa'
FINE_LAYER_POINTS = 1001      # extra output points over [0, 50 eps] in sweeps


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ------------------------------------------------------------------ expressions

_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt,
          "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh, "arctan": np.arctan, "abs": np.abs}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call, ast.Load,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def compile_expr(source, names: Sequence[str]) -> Callable[[dict], float]:
    """Compile an arithmetic expression over ``names`` after whitelisting its syntax tree.

    Numbers pass through unchanged.  Only arithmetic operators, the functions
    in ``_FUNCS`` and the constants ``pi`` and ``e`` are accepted.
    """
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        value = float(source)
        return lambda env: value
    if not isinstance(source, str):
        raise UsageError(f"expression must be a string or number, got {source!r}")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse expression {source!r}: {exc.msg}") from None
    allowed = set(names) | set(_CONSTS)
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise UsageError(f"disallowed syntax {type(node).__name__} in {source!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise UsageError(f"only numeric constants are allowed in {source!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise UsageError(f"unknown function call in {source!r}")
        elif isinstance(node, ast.Name) and node.id not in allowed and node.id not in _FUNCS:
            raise UsageError(f"unknown name {node.id!r} in {source!r}")
    code = compile(tree, "<expr>", "eval")
    base = {"__builtins__": {}, **_FUNCS, **_CONSTS}
    return lambda env: eval(code, base, env)  # noqa: S307 -- tree whitelisted above


def matrix_function(spec) -> Callable[[float], np.ndarray]:
    """``t -> matrix`` from a nested list of numbers or expressions in ``t``."""
    if not isinstance(spec, list) or not spec or not all(isinstance(r, list) for r in spec):
        raise UsageError("matrix must be a non-empty list of rows")
    k = len(spec)
    if any(len(r) != k for r in spec):
        raise UsageError("matrix must be square")
    cells = [[compile_expr(c, ["t"]) for c in row] for row in spec]

    def D(t):
        env = {"t": float(t)}
        return np.array([[float(c(env)) for c in row] for row in cells])

    return D


# ------------------------------------------------------------------ models

@dataclass
class Model:
    system: FastSlowSystem
    u_names: list
    v_names: list
    init: tuple
    params: dict
    t_end: float
    eps: float
    eps_list: tuple
    extra: dict = field(default_factory=dict)


def _user_model(spec: dict) -> Model:
    try:
        n, m = int(spec["n"]), int(spec["m"])
        f_src, g_src = list(spec["f"]), list(spec["g"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"user-json model needs n, m, f and g ({exc})") from None
    u_names = list(spec.get("slow", [f"u{i}" for i in range(n)]))
    v_names = list(spec.get("fast", [f"v{j}" for j in range(m)]))
    params = {k: float(v) for k, v in spec.get("params", {}).items()}
    if len(f_src) != n or len(g_src) != m or len(u_names) != n or len(v_names) != m:
        raise UsageError("user-json model: f/slow need n entries, g/fast need m entries")
    names = u_names + v_names + ["t", "eps"] + list(params)
    f_c = [compile_expr(s, names) for s in f_src]
    g_c = [compile_expr(s, names) for s in g_src]
    seed_c = [compile_expr(s, u_names + ["t"] + list(params)) for s in spec["qss_seed"]] \
        if "qss_seed" in spec else None

    def env(u, v, t, eps):
        e = dict(params)
        e.update(zip(u_names, map(float, u)))
        e.update(zip(v_names, map(float, v)))
        e["t"], e["eps"] = float(t), float(eps)
        return e

    def f(u, v, t, eps):
        e = env(u, v, t, eps)
        return np.array([c(e) for c in f_c], dtype=float)

    def g(u, v, t, eps):
        e = env(u, v, t, eps)
        return np.array([c(e) for c in g_c], dtype=float)

    seed = None
    if seed_c is not None:
        def seed(u, t):
            e = dict(params)
            e.update(zip(u_names, map(float, u)))
            e["t"] = float(t)
            return np.array([c(e) for c in seed_c], dtype=float)

    eps_max = float(spec.get("eps_max", 1.0))
    system = FastSlowSystem(n=n, m=m, f=f, g=g, eps_max=eps_max, name=str(spec.get("name", "user")),
                            equilibria=tuple(np.asarray(e, float) for e in spec.get("equilibria", [])),
                            qss_seed=seed, smooth=bool(spec.get("smooth", True)), params=params)
    init = tuple(float(x) for x in spec.get("init", [1.0] * (n + m)))
    return Model(system, u_names, v_names, init, params, float(spec.get("t_end", 10.0)),
                 float(spec.get("eps", eps_max / 2.0)), (eps_max / 2, eps_max / 4, eps_max / 8))


def build_model(name: str, config: dict, literal_eq7: bool = False) -> Model:
    params = config.get("params", {})
    if literal_eq7 and name != "predprey":
        raise UsageError("--literal-paper-eq7 applies to the predprey model only")
    try:
        if name == "predprey":
            p = PredPreyParams(**params)
            return Model(predprey_system(p, literal_eq7), ["n", "p"], ["n2"], PREDPREY_DEFAULT_INIT,
                         p.as_dict(), 100.0, 0.05, (0.05, 0.025, 0.0125))
        if name == "allee":
            p = AlleeParams.from_dict(params)
            return Model(allee_system(p), ["z"], ["y"], ALLEE_DEFAULT_INIT, p.as_dict(), 200.0, 0.018,
                         (0.08, 0.04, 0.02, 0.01))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad {name} parameters: {exc}") from None
    if name == "user-json":
        if "model" not in config:
            raise UsageError("--model user-json needs a 'model' object in --config")
        return _user_model(config["model"])
    raise UsageError(f"unknown model {name!r}")


def load_config(value: Optional[str]) -> dict:
    """``--config`` takes a JSON file path or an inline JSON object."""
    if not value:
        return {}
    try:
        text = value if value.lstrip().startswith("{") else Path(value).read_text()
        cfg = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {value!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _integrator(config: dict) -> IntegratorConfig:
    try:
        return IntegratorConfig(**{"rel_tol": 1e-10, "abs_tol": 1e-12, **config.get("integrator", {})})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad integrator settings: {exc}") from None


def _floats(text: str, what: str) -> list:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers") from None


def _pick(flag, config: dict, key: str, default):
    return flag if flag is not None else config.get(key, default)


# ------------------------------------------------------------------ simulation

@dataclass
class Case:
    eps: float
    full: object
    slow: object
    layer: object
    curves: object


def output_grid(t_end: float, dt_out: float) -> np.ndarray:
    n = int(math.ceil(t_end / dt_out - 1e-9)) + 1
    return np.linspace(0.0, t_end, max(n, 2))


def norm_grid(eps: float, t_end: float, dt_out: float) -> np.ndarray:
    """Uniform grid refined over the initial layer ``[0, 50 eps]``."""
    fine = np.linspace(0.0, min(t_end, 50.0 * eps), FINE_LAYER_POINTS)
    return np.union1d(output_grid(t_end, dt_out), fine)


def simulate(model: Model, eps: float, init, t_end: float, grid, integrator: Optional[IntegratorConfig] = None,
             rho: float = 1e-3) -> Case:
    """Full, reduced and layer solutions plus error curves on ``grid``."""
    sys_ = model.system
    init = np.asarray(init, float)
    u0, v0 = init[: sys_.n], init[sys_.n:]
    slow = integrate_reduced(sys_, u0, (0.0, t_end), t_eval=grid)
    phi0 = slow.qss_chain[0].v_root
    kappa = spectral_margin(sys_, u0, phi0)
    tau_max = t_end / eps if kappa <= 0 else min(t_end / eps, LAYER_DECAY_SPAN / kappa)
    layer = integrate_layer(sys_, u0, v0, tau_max, v_seed=phi0)
    full = integrate_full(sys_, eps, u0, v0, (0.0, t_end), integrator, t_eval=grid)
    curves = error_curves(full, slow, layer, eps, grid, rho=rho)
    return Case(eps, full, slow, layer, curves)


# ------------------------------------------------------------------ output

def _fmt(x: float) -> str:
    return "%.17g" % x


def config_hash(resolved: dict) -> str:
    blob = json.dumps(_jsonable(resolved), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta_lines(meta: dict) -> str:
    out = []
    for k, v in meta.items():
        text = v if isinstance(v, str) else json.dumps(_jsonable(v), sort_keys=True, separators=(",", ":"))
        out.append(f"# {k}={text}\n")
    return "".join(out)


def render_csv(meta: dict, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(float(x)) for x in row])
    return buf.getvalue()


def run_columns(model: Model) -> list:
    u, v = model.u_names, model.v_names
    return (["t"] + [f"u_full_{x}" for x in u] + [f"v_full_{x}" for x in v] + [f"u_reduced_{x}" for x in u]
            + [f"v_qss_{x}" for x in v] + [f"u_composite_{x}" for x in u] + [f"v_composite_{x}" for x in v]
            + ["err_u", "err_v", "err_composite"])


def _emit(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ commands

def _common(args, command: str):
    config = load_config(args.config)
    model = build_model(args.model, config, getattr(args, "literal_paper_eq7", False))
    return config, model


def _init(args, config, model) -> tuple:
    n_total = model.system.n + model.system.m
    if args.init is not None:
        init, source = _floats(args.init, "--init"), "cli"
    elif "init" in config:
        init, source = [float(x) for x in config["init"]], "config"
    else:
        init, source = list(model.init), "default"
    if len(init) != n_total:
        raise UsageError(f"--init needs {n_total} values (slow components first, then fast)")
    return tuple(init), source


def _check_eps(model: Model, eps: float, flag: str = "--eps"):
    if not 0.0 < eps <= model.system.eps_max:
        raise UsageError(f"{flag} must lie in (0, {model.system.eps_max:g}], got {eps:g}")


def _hypothesis_gate(model, init, args) -> Optional[int]:
    n = model.system.n
    rep = full_report(model.system, init[:n], init[n:], delta=args.delta or 0.05)
    if not rep.passed:
        sys.stderr.write(f"hypothesis audit FAILED: {', '.join(rep.failing)}\n")
        return EXIT_HYPOTHESIS
    return None


def cmd_run(args) -> int:
    config, model = _common(args, "run")
    eps = float(_pick(args.eps, config, "eps", model.eps))
    _check_eps(model, eps)
    t_end = float(_pick(args.t_end, config, "t_end", model.t_end))
    dt_out = float(_pick(args.dt_out, config, "dt_out", t_end / 1000.0))
    if t_end <= 0 or dt_out <= 0:
        raise UsageError("--t-end and --dt-out must be positive")
    if args.plot and args.out is None:
        raise UsageError("--plot needs --out (figures are written next to the CSV)")
    init, source = _init(args, config, model)
    if args.require_hypotheses:
        code = _hypothesis_gate(model, init, args)
        if code is not None:
            return code
    integ = _integrator(config)
    grid = output_grid(t_end, dt_out)
    case = simulate(model, eps, init, t_end, grid, integ)
    c = case.curves
    n = model.system.n
    resolved = {"command": "run", "model": args.model, "system": model.system.name, "params": model.params,
                "eps": eps, "t_end": t_end, "dt_out": dt_out, "init": list(init),
                "literal_paper_eq7": bool(args.literal_paper_eq7), "integrator": integ.as_dict(),
                "version": __version__}
    meta = {"tikhonov": __version__, "command": "run", "model": args.model, "system": model.system.name,
            "params": model.params, "eps": repr(float(eps)), "t_end": repr(float(t_end)), "dt_out": repr(float(dt_out)),
            "init": [float(x) for x in init], "init_order": model.u_names + model.v_names, "init_source": source,
            "literal_paper_eq7": bool(args.literal_paper_eq7), "integrator": integ.as_dict(),
            "t_rho": repr(float(c.t_rho)), "sup_composite": repr(float(c.sup_composite)), "sup_u_after": repr(float(c.sup_u_after)),
            "config_hash": config_hash(resolved)}
    table = np.column_stack([c.t, c.u_full, c.v_full, c.u_reduced, c.v_qss, c.u_reduced, c.v_composite,
                             c.err_u, c.err_v, c.err_composite])
    out = Path(args.out) if args.out else None
    _emit(render_csv(meta, run_columns(model), table), out)
    if args.plot:
        from .plotting import plot_run

        plot_run(out.with_suffix(".png"), c.t, c.u_full, c.v_full, c.u_reduced, c.v_qss, c.v_composite,
                 c.err_u, c.err_v, c.err_composite, model.u_names, model.v_names,
                 title=f"{model.system.name}, eps = {eps:g}")
    return EXIT_OK


SWEEP_FIELDS = ("t_rho", "sup_composite", "sup_u", "sup_u_after", "sup_v_after")


def cmd_sweep(args) -> int:
    config, model = _common(args, "sweep")
    if args.eps_list is not None:
        eps_list = _floats(args.eps_list, "--eps-list")
    else:
        eps_list = [float(e) for e in config.get("eps_list", model.eps_list)]
    if not eps_list:
        raise UsageError("--eps-list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise UsageError("--eps-list must be strictly decreasing")
    for e in eps_list:
        _check_eps(model, e, "--eps-list")
    t_end = float(_pick(args.t_end, config, "t_end", model.t_end))
    dt_out = float(_pick(args.dt_out, config, "dt_out", t_end / 2000.0))
    if args.plot and args.out is None:
        raise UsageError("--plot needs --out (figures are written next to the CSV)")
    init, source = _init(args, config, model)
    if args.require_hypotheses:
        code = _hypothesis_gate(model, init, args)
        if code is not None:
            return code
    integ = _integrator(config)

    results = []
    for eps in eps_list:
        case = simulate(model, eps, init, t_end, norm_grid(eps, t_end, dt_out), integ)
        results.append({"eps": eps, **case.curves.summary()})
    orders = {key: convergence_order(eps_list, [r[key] for r in results])
              for key in ("sup_composite", "sup_u", "sup_u_after", "sup_v_after")}
    resolved = {"command": "sweep", "model": args.model, "system": model.system.name, "params": model.params,
                "eps_list": eps_list, "t_end": t_end, "dt_out": dt_out, "init": list(init),
                "literal_paper_eq7": bool(args.literal_paper_eq7), "integrator": integ.as_dict(),
                "version": __version__}
    report = {"tikhonov": __version__, "model": args.model, "system": model.system.name,
              "params": model.params, "init": list(init), "init_order": model.u_names + model.v_names,
              "init_source": source, "t_end": t_end, "dt_out": dt_out,
              "norm_grid": f"uniform dt_out plus {FINE_LAYER_POINTS} points on [0, 50 eps]",
              "eps_list": eps_list, "results": results, "order": orders, "config_hash": config_hash(resolved)}
    if args.out is None:
        _emit(_json(report), None)
    else:
        out = Path(args.out)
        meta = {k: report[k] for k in ("tikhonov", "model", "system", "params", "init", "init_source",
                                       "t_end", "dt_out", "norm_grid", "order", "config_hash")}
        meta["command"] = "sweep"
        rows = [[r["eps"]] + [r[k] for k in SWEEP_FIELDS] for r in results]
        _emit(render_csv(meta, ["eps", *SWEEP_FIELDS], rows), out)
        _emit(_json(report), out.with_suffix(".json"))
        if args.plot:
            from .plotting import plot_sweep

            series = {k: [r[k] for r in results] for k in ("sup_u_after", "sup_composite")}
            plot_sweep(out.with_suffix(".png"), eps_list, series, orders, title=model.system.name)
    return EXIT_OK


def cmd_check(args) -> int:
    config, model = _common(args, "check")
    init, _ = _init(args, config, model)
    eps0 = float(_pick(args.eps, config, "eps0", model.system.eps_max / 2.0))
    _check_eps(model, eps0)
    t_end = float(_pick(args.t_end, config, "t_end", 200.0))
    delta = float(_pick(args.delta, config, "delta", 0.05))
    if delta <= 0 or t_end <= 0:
        raise UsageError("--delta and --t-end must be positive")
    n = model.system.n
    rep = full_report(model.system, init[:n], init[n:], t_span=(0.0, t_end), eps0=eps0, delta=delta,
                      samples=int(config.get("samples", 64)))
    _emit(_json(rep.to_dict()), Path(args.out) if args.out else None)
    if rep.passed:
        sys.stderr.write(f"{model.system.name}: PASS (kappa' = {rep.a3['kappa_prime']:.6g})\n")
        return EXIT_OK
    sys.stderr.write(f"{model.system.name}: FAIL ({', '.join(rep.failing)})\n")
    return EXIT_HYPOTHESIS


def cmd_dichotomy(args) -> int:
    config = load_config(args.config)
    if "matrix" not in config:
        raise UsageError("dichotomy needs --config with a 'matrix' entry")
    D = matrix_function(config["matrix"])
    eps_list = _floats(args.eps_list, "--eps-list") if args.eps_list else \
        [float(e) for e in config.get("eps_list", [0.1, 0.05, 0.025])]
    horizon = float(_pick(args.t_end, config, "horizon", 2.0 * math.pi))
    sigma = _pick(args.sigma, config, "sigma", None)
    if not eps_list or any(e <= 0 for e in eps_list) or horizon <= 0:
        raise UsageError("eps values and the horizon must be positive")
    try:
        fits = [fit_dichotomy(D, e, horizon, sigma=None if sigma is None else float(sigma)) for e in eps_list]
    except HypothesisViolated as exc:
        sys.stderr.write(f"hypothesis violated: {exc}\n")
        return EXIT_HYPOTHESIS
    cs = [f.c for f in fits]
    report = {"tikhonov": __version__, "matrix": config["matrix"], "horizon": horizon,
              "fits": [f.to_dict() for f in fits],
              "delta_eps": [continuity_modulus(D, e, horizon) for e in eps_list],
              "c_spread": max(cs) / min(cs) - 1.0, "c_stable": max(cs) / min(cs) - 1.0 < 0.05}
    _emit(_json(report), Path(args.out) if args.out else None)
    return EXIT_OK


def cmd_hints(args) -> int:
    config, model = _common(args, "hints")
    cols = run_columns(model)
    data = args.out or "run.csv"
    lines = [f"# columns written by `tikhonov run --model {args.model}` (1-based, for gnuplot `using`)"]
    lines += [f"#   {i:2d}  {name}" for i, name in enumerate(cols, start=1)]
    lines += ["set datafile separator ','", "set key autotitle columnhead", "set xlabel 't'"]
    idx = {name: i for i, name in enumerate(cols, start=1)}
    plots = []
    for x in model.u_names:
        plots.append(f"'{data}' using 1:{idx['u_full_' + x]} with lines, '' using 1:{idx['u_reduced_' + x]} "
                     "with lines dt 2")
    for x in model.v_names:
        plots.append(f"'{data}' using 1:{idx['v_full_' + x]} with lines, '' using 1:{idx['v_composite_' + x]} "
                     "with lines dt 3")
    lines += [f"plot {p}" for p in plots]
    lines.append(f"set logscale y; plot '{data}' using 1:{idx['err_u']} with lines, "
                 f"'' using 1:{idx['err_composite']} with lines")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tikhonov", description="Fast-slow reduction, composite approximation and hypothesis audits.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", choices=MODELS, default="allee")
        sp.add_argument("--config", help="JSON file or inline JSON object")
        sp.add_argument("--out", help="output path (default: stdout)")

    r = sub.add_parser("run", help="full, reduced and composite solutions with error columns (CSV)")
    common(r)
    r.add_argument("--eps", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--dt-out", type=float)
    r.add_argument("--init", help="comma-separated initial state, slow components first")
    r.add_argument("--literal-paper-eq7", action="store_true",
                   help="use the uncorrected variant of the reduced predator-prey equation")
    r.add_argument("--require-hypotheses", action="store_true")
    r.add_argument("--delta", type=float)
    r.add_argument("--plot", action="store_true", help="also write a PNG figure next to the CSV")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="sup-norm errors across decreasing eps and the fitted order")
    common(s)
    s.add_argument("--eps-list")
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt-out", type=float)
    s.add_argument("--init")
    s.add_argument("--literal-paper-eq7", action="store_true")
    s.add_argument("--require-hypotheses", action="store_true")
    s.add_argument("--delta", type=float)
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="audit assumptions A1-A5 and write a JSON report")
    common(c)
    c.add_argument("--init")
    c.add_argument("--eps", type=float, help="upper end eps0 of the eps range for the tube audit")
    c.add_argument("--t-end", type=float)
    c.add_argument("--delta", type=float)
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("dichotomy", help="fit dichotomy constants of eps Y' = D(t) Y")
    common(d, model=False)
    d.add_argument("--eps-list")
    d.add_argument("--t-end", type=float, help="horizon")
    d.add_argument("--sigma", type=float)
    d.set_defaults(func=cmd_dichotomy)

    h = sub.add_parser("hints", help="print gnuplot column hints for run CSVs")
    common(h)
    h.set_defaults(func=cmd_hints)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"tikhonov: error: {exc}\n")
        return EXIT_USAGE
    except TikhonovError as exc:
        sys.stderr.write(f"tikhonov: {type(exc).__name__}: {exc}\n")
        return EXIT_INTEGRATION


if __name__ == "__main__":
    raise SystemExit(main())
