"""Command-line entry point: ``critset <module> <command> [options]``.

Every command accepts ``--config FILE`` (a JSON object whose keys are option
names of that command; unknown keys are rejected) and explicit flags, which
win over the file. Results are written as JSON (default), CSV where a flat
table exists, and SVG where a figure exists, each carrying a metadata block.

Exit status is 0 on success, 1 on usage errors and 2 on numerical failures,
in which case the error class name is printed on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import dirichlet as dmod
from . import first_order as fmod
from . import periodic as pmod
from . import render
from . import third_order as tmod
from .core.grid import Boundary, GridFunction
from .core.integrate import IntegratorConfig
from .core.nonlinearity import Nonlinearity
from .errors import NumericalError
from .planar import census as cmod
from .planar import critical as kmod
from .planar.maps import get_preset, map_from_dict

FORMATS = ("json", "csv", "svg")
_EXPR_NAMES = {name: getattr(np, name) for name in
               ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "arctan", "abs", "sign")}
_EXPR_NAMES["pi"] = np.pi


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Output:
    data: dict
    rows: list[dict] | None = None
    svg: str | None = None
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)


@dataclass
class Option:
    name: str
    default: object
    kind: type = str
    help: str = ""


# -- input parsing ----------------------------------------------------------------

def floats(text, count: int | None = None) -> list[float]:
    if isinstance(text, (int, float)):
        vals = [float(text)]
    elif isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} numbers, got {text!r}")
    return vals


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def evaluate(expr, t: np.ndarray) -> np.ndarray:
    """Evaluate a numeric expression in ``t`` using numpy's elementary functions."""
    if isinstance(expr, (int, float)):
        return np.full(t.shape, float(expr))
    try:
        val = eval(str(expr), {"__builtins__": {}}, {**_EXPR_NAMES, "t": t})  # noqa: S307
    except Exception as exc:
        raise UsageError(f"cannot evaluate {expr!r}: {exc}") from None
    return np.broadcast_to(np.asarray(val, dtype=float), t.shape).copy()


def grid_input(spec, boundary: Boundary, n: int, length: float) -> GridFunction:
    """``@file.json`` (a serialized GridFunction) or an expression in ``t``."""
    if isinstance(spec, str) and spec.startswith("@"):
        data = _load_json(spec[1:])
        g = GridFunction.from_dict(data)
        if g.boundary is not boundary or abs(g.domain_length - length) > 1e-12:
            raise UsageError(f"{spec[1:]} holds a {g.boundary.value} function on [0, {g.domain_length}]")
        return g
    t = np.linspace(0.0, length, n) if boundary is Boundary.DIRICHLET else np.arange(n) * (length / n)
    vals = evaluate(spec, t)
    if boundary is Boundary.DIRICHLET:
        return GridFunction.dirichlet(vals, n, length)
    return GridFunction(vals, length, boundary)


def _targets(text) -> np.ndarray:
    if isinstance(text, str) and text.strip() == "origin":
        return np.zeros((1, 2))
    if isinstance(text, list):
        return np.atleast_2d(np.asarray(text, dtype=float))
    rows = [r for r in str(text).split(";") if r.strip()]
    return np.array([[0.0, 0.0] if r.strip() == "origin" else floats(r, 2) for r in rows])


def _fmap(opts):
    if opts["map"]:
        return map_from_dict(_load_json(opts["map"]))
    return get_preset(opts["preset"])


def _cfg(opts) -> IntegratorConfig:
    return IntegratorConfig(int(opts["steps_ode"]), tolerance=float(opts["ode_tol"]))


# -- planar ---------------------------------------------------------------------------

PLANAR = [Option("preset", "z7", help="named planar map"), Option("map", None, help="JSON map {terms: [[j, k, re, im]]}"),
          Option("window", "-2,2,-2,2", help="x0,x1,y0,y1"), Option("resolution", 512, int),
          Option("fold_tol", kmod.FOLD_TOL, float)]


def _planar_tol(opts):
    return {"det_tol": kmod.DET_TOL, "fold_tol": opts["fold_tol"], "near_tol": cmod.NEAR_TOL}


def planar_trace(opts) -> Output:
    fmap = _fmap(opts)
    curves = kmod.trace_critical_set(fmap, floats(opts["window"], 4), opts["resolution"], opts["fold_tol"])
    data = {"map": fmap.name, "curves": []}
    for c in curves:
        d = c.to_dict()
        d["cusps"] = kmod.count_cusps(fmap, c)
        d["area"] = c.area
        data["curves"].append(d)
    rows = [{"curve": i, "vertices": len(c), "cusps": d["cusps"], "area": c.area}
            for i, (c, d) in enumerate(zip(curves, data["curves"]))]
    cusps = [c.vertices[c.cusp_indices] for c in curves if len(c.cusp_indices)]
    svg = render.render_curves([c.vertices for c in curves], np.concatenate(cusps) if cusps else (),
                               [c.closed for c in curves], title=f"critical set of {fmap.name}")
    return Output(data, rows, svg, _planar_tol(opts), {"resolution": opts["resolution"]})


def planar_classify(opts) -> Output:
    fmap = _fmap(opts)
    p = np.array(floats(opts["point"], 2))
    tag = kmod.classify_critical_point(fmap, p, opts["fold_tol"])
    return Output({"map": fmap.name, "point": p.tolist(), "tag": tag.value, "det": float(fmap.det(p))},
                  tolerances=_planar_tol(opts))


def planar_image(opts) -> Output:
    fmap = _fmap(opts)
    curves = kmod.trace_critical_set(fmap, floats(opts["window"], 4), opts["resolution"], opts["fold_tol"])
    images = cmod.image_of_critical_set(fmap, curves)
    data = {"map": fmap.name, "images": []}
    for im in images:
        d = im.to_dict()
        d["self_intersections"] = cmod.self_intersections(im)
        data["images"].append(d)
    cusps = [im.points[[i for i, t in enumerate(im.tags) if t is kmod.Tag.CUSP]] for im in images]
    cusps = [c for c in cusps if len(c)]
    svg = render.render_curves([im.points for im in images], np.concatenate(cusps) if cusps else (),
                               [im.closed for im in images], title=f"image of the critical set of {fmap.name}")
    rows = [{"curve": i, "points": len(im.points), "self_intersections": d["self_intersections"]}
            for i, (im, d) in enumerate(zip(images, data["images"]))]
    return Output(data, rows, svg, _planar_tol(opts), {"resolution": opts["resolution"]})


def planar_census(opts) -> Output:
    fmap = _fmap(opts)
    targets = _targets(opts["targets"])
    res = cmod.preimage_census(fmap, targets, floats(opts["window"], 4), grid=opts["grid"],
                               resolution=opts["resolution"])
    data = {"map": fmap.name, **res.to_dict()}
    rows = [{"target_x": float(w[0]), "target_y": float(w[1]), "count": int(c)} for w, c in res.regions]
    if len(rows) == 1:
        data["count"] = rows[0]["count"]
    return Output(data, rows, None, _planar_tol(opts), {"root_grid": opts["grid"], "resolution": opts["resolution"]})


def planar_degree(opts) -> Output:
    fmap = _fmap(opts)
    deg = cmod.topological_degree(fmap, opts["radius"], floats(opts["target"], 2), floats(opts["center"], 2),
                                  opts["samples"])
    return Output({"map": fmap.name, "radius": opts["radius"], "degree": deg}, tolerances={"radius_margin": 1e-6},
                  grid={"samples": opts["samples"]})


# -- first order --------------------------------------------------------------------------

FIRST = [Option("f", "poly:0,-1,0,1", help="nonlinearity: sin, tanh or poly:c0,c1,..."),
         Option("grid_size", 1024, int)]


def _fp(opts) -> fmod.FirstOrderProblem:
    return fmod.FirstOrderProblem(Nonlinearity.parse(opts["f"]), opts["grid_size"])


def _fu(opts, key="u") -> GridFunction:
    return grid_input(opts[key], Boundary.PERIODIC, opts["grid_size"], 1.0)


_FIRST_TOL = {"project_tol": fmod.PROJECT_TOL, "homotopy_tol": fmod.HOMOTOPY_TOL}


def first_phi1(opts) -> Output:
    p = _fp(opts)
    return Output({"phi1": fmod.phi1(p, _fu(opts))}, tolerances=_FIRST_TOL, grid={"grid_size": p.grid_size})


def first_phi12(opts) -> Output:
    p = _fp(opts)
    u = _fu(opts)
    return Output({"phi1": fmod.phi1(p, u), "phi12": fmod.phi12(p, u), "in_sigma2": fmod.is_in_sigma2(p, u)},
                  tolerances=_FIRST_TOL, grid={"grid_size": p.grid_size})


def first_multiplier(opts) -> Output:
    p = _fp(opts)
    u = _fu(opts)
    data = {"phi1": fmod.phi1(p, u), "floquet_multiplier": fmod.floquet_multiplier(p, u),
            "linearization_multiplier": fmod.linearization_multiplier(p, u),
            "linearization_eigenvalue": fmod.linearization_eigenvalue(p, u)}
    return Output(data, tolerances=_FIRST_TOL, grid={"grid_size": p.grid_size})


def first_project(opts) -> Output:
    p = _fp(opts)
    v = fmod.project_to_C1(p, _fu(opts))
    return Output({"u": v.to_dict(), "phi1": fmod.phi1(p, v)}, tolerances=_FIRST_TOL, grid={"grid_size": p.grid_size})


def first_homotopy(opts) -> Output:
    p = _fp(opts)
    path = fmod.contraction_homotopy(p, _fu(opts, "u0"), _fu(opts, "u1"), steps=opts["slices"])
    data = path.to_dict()
    data["continuous"] = path.is_continuous()
    rows = [{"s": float(s), "phi1": float(r), "correction": float(c)}
            for s, r, c in zip(path.s, path.phi1_residuals, path.corrections)]
    svg = render.render_waterfall(path.slices[0].t, [u.values for u in path.slices], path.s,
                                  title="contraction homotopy")
    return Output(data, rows, svg, _FIRST_TOL, {"grid_size": p.grid_size, "slices": opts["slices"]})


def first_count(opts) -> Output:
    p = _fp(opts)
    res = fmod.count_periodic_solutions(p, _fu(opts, "g"))
    return Output(res.to_dict(), [{"initial_value": float(a)} for a in res.initial_values],
                  tolerances={"xtol": 1e-10}, grid={"grid_size": p.grid_size, "scan_points": res.scan_points})


# -- Dirichlet --------------------------------------------------------------------------------

DIRICHLET = [Option("f", "poly:0,0,0,-1", help="nonlinearity: sin, tanh or poly:c0,c1,..."),
             Option("n", 1024, int, "grid points on [0, pi]"), Option("m", 1, int),
             Option("steps_ode", 4096, int), Option("ode_tol", 1e-6, float)]


def _df(opts) -> Nonlinearity:
    return Nonlinearity.parse(opts["f"])


def _du(opts, key="u") -> GridFunction:
    return grid_input(opts[key], Boundary.DIRICHLET, opts["n"], np.pi)


def _dtol(opts):
    return {"critical_tol": dmod.CRITICAL_TOL, "path_tol": dmod.PATH_TOL, "ode_tol": opts["ode_tol"]}


def _dgrid(opts):
    return {"n": opts["n"], "ode_steps": opts["steps_ode"]}


def dirichlet_shoot(opts) -> Output:
    tr = dmod.shoot_fundamental(_df(opts), _du(opts), opts["m"], _cfg(opts))
    data = {**tr.to_dict(), "omega_end": tr.omega_end}
    rows = [{"t": float(a), "v1": float(b), "v1_prime": float(c), "omega": float(d), "omega_m": float(e)}
            for a, b, c, d, e in zip(tr.t_samples, tr.v1, tr.v1_prime, tr.omega, tr.omega_m)]
    wall = float(np.max(np.abs(tr.omega_m - opts["m"] * tr.t_samples)))
    svg = render.render_prufer(tr.t_samples, tr.omega_m, opts["m"], wall, title=f"m-argument, m = {opts['m']}")
    return Output(data, rows, svg, _dtol(opts), _dgrid(opts))


def dirichlet_critical(opts) -> Output:
    f, u = _df(opts), _du(opts)
    tr = dmod.shoot_fundamental(f, u, 1, _cfg(opts))
    ok, r = dmod.is_critical_dirichlet(f, u, trace=tr)
    return Output({"critical": ok, "distance": r, "omega_end": tr.omega_end}, tolerances=_dtol(opts),
                  grid=_dgrid(opts))


def dirichlet_index(opts) -> Output:
    f, u = _df(opts), _du(opts)
    tr = dmod.shoot_fundamental(f, u, 1, _cfg(opts))
    return Output({"index": dmod.component_index(f, u, tr), "omega_end": tr.omega_end}, tolerances=_dtol(opts),
                  grid=_dgrid(opts))


def dirichlet_nonempty(opts) -> Output:
    return Output({"m": opts["m"], "nonempty": dmod.component_nonempty(_df(opts), opts["m"])}, tolerances=_dtol(opts))


def dirichlet_homotopy(opts) -> Output:
    f, m, n = _df(opts), opts["m"], opts["n"]
    u0 = _du(opts, "u0") if opts["u0"] is not None else dmod.perturbed_reference(f, m, n, 0.2, 3, cfg=_cfg(opts))
    u1 = _du(opts, "u1") if opts["u1"] is not None else dmod.perturbed_reference(f, m, n, -0.15, 2, cfg=_cfg(opts))
    path = dmod.squeeze_homotopy(f, u0, u1, m, steps=opts["slices"], cfg=_cfg(opts))
    rows = [{"s": float(s), "residual": float(r), "index": int(i), "wall": float(w), "stage": st}
            for s, r, i, w, st in zip(path.s, path.residuals, path.indices, path.walls, path.stages)]
    svg = render.render_waterfall(path.slices[0].t, [u.values for u in path.slices], path.s,
                                  title=f"squeeze homotopy, m = {opts['m']}")
    return Output(path.to_dict(), rows, svg, _dtol(opts), _dgrid(opts))


# -- periodic --------------------------------------------------------------------------------

PERIODIC = [Option("n", 1024, int, "grid points on [0, 2 pi)"), Option("steps_ode", 4096, int),
            Option("ode_tol", 1e-6, float), Option("constant", None, help="comma-separated constant potentials"),
            Option("h", None, help="expression in t or @file.json"),
            Option("batch", None, help="JSON list of {id, constant|expr|values} or CSV rows id,values...")]


def _potentials(opts) -> list[tuple[str, GridFunction]]:
    n = opts["n"]
    length = 2 * np.pi
    out = []
    if opts["constant"] is not None:
        for c in floats(opts["constant"]):
            out.append((f"constant={c:g}", GridFunction.periodic(c, n, length)))
    if opts["h"] is not None:
        out.append(("h", grid_input(opts["h"], Boundary.PERIODIC, n, length)))
    if opts["batch"] is not None:
        path = opts["batch"]
        if path.endswith(".csv"):
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise UsageError(f"cannot read {path}: {exc}") from None
            for row in csv.reader(io.StringIO(text)):
                if not row or row[0].startswith("#"):
                    continue
                vals = floats(row[1:])
                h = GridFunction.periodic(vals[0], n, length) if len(vals) == 1 else \
                    GridFunction(np.asarray(vals), length, Boundary.PERIODIC)
                out.append((row[0], h))
        else:
            for k, item in enumerate(_load_json(path)):
                unknown = set(item) - {"id", "constant", "expr", "values"}
                if unknown:
                    raise UsageError(f"unknown batch fields: {sorted(unknown)}")
                pid = str(item.get("id", k))
                if "values" in item:
                    h = GridFunction(np.asarray(item["values"], float), length, Boundary.PERIODIC)
                else:
                    h = grid_input(item.get("constant", item.get("expr", 0.0)), Boundary.PERIODIC, n, length)
                out.append((pid, h))
    if not out:
        raise UsageError("give --constant, --h or --batch")
    return out


def _ptol(opts):
    return {"identity_tol": pmod.IDENTITY_TOL, "trace_tol": pmod.TRACE_TOL, "ode_tol": opts["ode_tol"]}


def periodic_monodromy(opts) -> Output:
    res = []
    for pid, h in _potentials(opts):
        lift = pmod.monodromy(h, _cfg(opts))
        res.append({"id": pid, **lift.to_dict(), "iwasawa_angle": lift.iwasawa_angle})
    rows = [{"id": r["id"], "trace": r["trace"], "angle": r["angle"], "det": r["det"]} for r in res]
    return Output({"potentials": res}, rows, None, _ptol(opts), {"n": opts["n"], "ode_steps": opts["steps_ode"]})


def periodic_classify(opts) -> Output:
    res = []
    for pid, h in _potentials(opts):
        c = pmod.classify_periodic(h, cfg=_cfg(opts))
        res.append({"id": pid, **c.to_dict()})
    rows = [{"id": r["id"], "trace": r["trace"], "angle": r["angle"], "kind": r["kind"],
             "index": "" if r["index"] is None else r["index"]} for r in res]
    return Output({"potentials": res}, rows, None, _ptol(opts), {"n": opts["n"], "ode_steps": opts["steps_ode"]})


# -- third order ------------------------------------------------------------------------------

THIRD = [Option("h0", "0", help="constant, expression in t or @file.json"), Option("h1", "-1"),
         Option("n", 1024, int, "grid points on [0, 2 pi)"), Option("steps_ode", 4096, int),
         Option("ode_tol", 1e-6, float)]


def _pair(opts) -> tmod.PotentialPair:
    n = opts["n"]
    return tmod.PotentialPair(grid_input(opts["h0"], Boundary.PERIODIC, n, 2 * np.pi),
                              grid_input(opts["h1"], Boundary.PERIODIC, n, 2 * np.pi))


def _ttol(opts):
    return {"member_tol": tmod.MEMBER_TOL, "lsq_tol": tmod.LSQ_TOL, "convex_tol": tmod.CONVEX_TOL,
            "ode_tol": opts["ode_tol"]}


def _tgrid(opts):
    return {"n": opts["n"], "ode_steps": opts["steps_ode"]}


def third_frame(opts) -> Output:
    fr = tmod.fundamental_frame_3(_pair(opts), _cfg(opts))
    return Output({"closure": fr.closure.tolist(), "closure_residual": fr.closure_residual()},
                  tolerances=_ttol(opts), grid=_tgrid(opts))


def third_member(opts) -> Output:
    ok, r = tmod.is_in_Cstar3(_pair(opts), frame=tmod.fundamental_frame_3(_pair(opts), _cfg(opts)))
    return Output({"member": ok, "closure_residual": r}, tolerances=_ttol(opts), grid=_tgrid(opts))


def third_forward(opts) -> Output:
    c = tmod.curve_from_potentials(_pair(opts), cfg=_cfg(opts))
    data = {**c.to_dict(), "locally_convex": c.is_locally_convex(), "min_convexity": float(np.min(c.convexity()))}
    svg = render.render_sphere(c.samples, title="sphere curve")
    return Output(data, None, svg, _ttol(opts), _tgrid(opts))


def _curve(opts) -> tmod.SphereCurve:
    chosen = [k for k in ("curve", "circle", "perturbed") if opts[k] is not None]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --curve, --circle, --perturbed")
    if opts["curve"] is not None:
        path = opts["curve"][1:] if opts["curve"].startswith("@") else opts["curve"]
        return tmod.SphereCurve.from_dict(_load_json(path))
    if opts["circle"] is not None:
        return tmod.circle_curve(float(evaluate(opts["circle"], np.zeros(1))[0]), opts["n"])
    a, e = floats(opts["perturbed"], 2)
    return tmod.perturbed_circle(a, e, opts["n"])


def third_inverse(opts) -> Output:
    c = _curve(opts)
    pair, res = tmod.potentials_from_curve(c)
    data = {**pair.to_dict(), "lsq_residual": res,
            "h0_mean": float(np.mean(pair.h0.values)), "h1_mean": float(np.mean(pair.h1.values))}
    svg = render.render_sphere(c.samples, title="input curve")
    return Output(data, None, svg, _ttol(opts), {"n": c.n})


def third_roundtrip(opts) -> Output:
    r = tmod.roundtrip_residual(_pair(opts), _cfg(opts))
    return Output({"roundtrip_residual": r}, tolerances=_ttol(opts), grid=_tgrid(opts))


# -- command table ---------------------------------------------------------------------------

def _u(default):
    return Option("u", default, help="expression in t or @file.json")


COMMANDS = {
    ("planar", "trace"): (planar_trace, PLANAR),
    ("planar", "classify"): (planar_classify, PLANAR + [Option("point", None, help="x,y")]),
    ("planar", "image"): (planar_image, PLANAR),
    ("planar", "census"): (planar_census, [o if o.name != "window" else Option("window", "-5,5,-5,5")
                                           for o in PLANAR] + [Option("targets", "origin", help="origin or x,y;x,y"),
                                                               Option("grid", 128, int)]),
    ("planar", "degree"): (planar_degree, PLANAR + [Option("radius", 10.0, float), Option("target", "0,0"),
                                                    Option("center", "0,0"), Option("samples", 4096, int)]),
    ("first-order", "phi1"): (first_phi1, FIRST + [_u("sin(2*pi*t)")]),
    ("first-order", "phi12"): (first_phi12, FIRST + [_u("sin(2*pi*t)")]),
    ("first-order", "multiplier"): (first_multiplier, FIRST + [_u("sin(2*pi*t)")]),
    ("first-order", "project"): (first_project, FIRST + [_u("0.3*sin(2*pi*t)")]),
    ("first-order", "homotopy"): (first_homotopy, FIRST + [Option("u0", "1/sqrt(3)"), Option("u1", "-1/sqrt(3)"),
                                                           Option("slices", 32, int)]),
    ("first-order", "count"): (first_count, FIRST + [Option("g", "0", help="forcing: expression in t or @file.json")]),
    ("dirichlet", "shoot"): (dirichlet_shoot, DIRICHLET + [_u("0")]),
    ("dirichlet", "critical"): (dirichlet_critical, DIRICHLET + [_u("0")]),
    ("dirichlet", "index"): (dirichlet_index, DIRICHLET + [_u("0")]),
    ("dirichlet", "nonempty"): (dirichlet_nonempty, DIRICHLET),
    ("dirichlet", "homotopy"): (dirichlet_homotopy, DIRICHLET + [Option("u0", None, help="default: projected perturbation of the reference"),
                                                                 Option("u1", None),
                                                                 Option("slices", 16, int)]),
    ("periodic", "monodromy"): (periodic_monodromy, PERIODIC),
    ("periodic", "classify"): (periodic_classify, PERIODIC),
    ("third", "frame"): (third_frame, THIRD),
    ("third", "member"): (third_member, THIRD),
    ("third", "forward"): (third_forward, THIRD),
    ("third", "inverse"): (third_inverse, THIRD + [Option("curve", None, help="SphereCurve JSON file"),
                                                  Option("circle", None, help="colatitude of a circle"),
                                                  Option("perturbed", None, help="alpha,eps")]),
    ("third", "roundtrip"): (third_roundtrip, THIRD),
}
DEFAULT_FORMAT = {("periodic", "classify"): "csv"}
GLOBAL = [Option("out", None, help="output directory"), Option("format", None, help="comma-separated subset of json,csv,svg"),
          Option("seed", 0, int, "recorded in the metadata")]


def build_parser() -> _Parser:
    parser = _Parser(prog="critset", description="Critical sets of nonlinear maps and differential operators.")
    parser.add_argument("--version", action="version", version=__version__)
    mods = parser.add_subparsers(dest="module", required=True, parser_class=_Parser)
    subs = {}
    for (mod, cmd), (fn, options) in COMMANDS.items():
        if mod not in subs:
            subs[mod] = mods.add_parser(mod).add_subparsers(dest="command", required=True, parser_class=_Parser)
        p = subs[mod].add_parser(cmd, help=(fn.__doc__ or "").strip().split("\n")[0] or None)
        p.add_argument("--config", default=None, help="JSON file of option values")
        for o in options + GLOBAL:
            p.add_argument("--" + o.name.replace("_", "-"), dest=o.name, default=None, type=o.kind,
                           help=f"{o.help} (default: {o.default})".strip())
    return parser


def resolve(args: argparse.Namespace, options: list[Option]) -> dict:
    """Merge defaults, the config file and flags, in increasing priority."""
    opts = {o.name: o.default for o in options + GLOBAL}
    kinds = {o.name: o.kind for o in options + GLOBAL}
    if args.config:
        cfg = _load_json(args.config)
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        for key, val in cfg.items():
            name = key.replace("-", "_")
            if name not in opts:
                raise UsageError(f"unknown config key {key!r}")
            opts[name] = val if kinds[name] is str or val is None else kinds[name](val)
    for name in opts:
        val = getattr(args, name, None)
        if val is not None:
            opts[name] = val
    return opts


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _csv_text(rows: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _join_negative_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-1,0,1`` to their option, which argparse would
    otherwise read as a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and re.match(r"^-[0-9.]", argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    """Execute one command; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        key = (args.module, args.command)
        fn, options = COMMANDS[key]
        opts = resolve(args, options)
        formats = [f.strip() for f in (opts["format"] or DEFAULT_FORMAT.get(key, "json")).split(",") if f.strip()]
        bad = set(formats) - set(FORMATS)
        if bad or not formats:
            raise UsageError(f"formats must be a subset of {FORMATS}")
        if len(formats) > 1 and not opts["out"]:
            raise UsageError("several formats need --out")
        out = fn(opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 1
    except SystemExit as exc:  # --help and --version
        return 0 if not exc.code else 1
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 1

    params = {k: v for k, v in opts.items() if k not in ("out", "format")}
    meta = _jsonable({"command": f"{key[0]} {key[1]}", "version": __version__, "seed": opts["seed"],
                      "grid": out.grid, "tolerances": out.tolerances, "parameters": params})
    texts = {}
    for f in formats:
        if f == "json":
            texts[f] = json.dumps({"metadata": meta, "result": _jsonable(out.data)}, sort_keys=True, indent=1) + "\n"
        elif f == "csv":
            if out.rows is None:
                print(f"usage error: {key[0]} {key[1]} has no CSV output", file=stderr)
                return 1
            texts[f] = _csv_text(_jsonable(out.rows), meta)
        else:
            if out.svg is None:
                print(f"usage error: {key[0]} {key[1]} has no SVG output", file=stderr)
                return 1
            texts[f] = out.svg.replace("<metadata>{}</metadata>",
                                       "<metadata>" + render.escape(json.dumps(meta, sort_keys=True)) + "</metadata>")
    if opts["out"]:
        d = Path(opts["out"])
        d.mkdir(parents=True, exist_ok=True)
        for f, text in texts.items():
            path = d / f"{key[0]}_{key[1]}.{f}"
            path.write_text(text)
            print(str(path), file=stdout)
    else:
        stdout.write(next(iter(texts.values())))
    return 0


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        code = 0
    sys.exit(code)
