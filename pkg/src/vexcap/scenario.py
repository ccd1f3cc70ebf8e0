"""Scenario configs: flat key=value sections describing grids, exponents,
sets, solver settings, and experiment parameters.

Exponents are arithmetic expressions over the coordinates (``x``, and ``y``
in 2D) with the function vocabulary ``abs, min, max, log, exp, sin`` plus
the constants ``pi`` and ``e``; they are evaluated through a whitelisted
AST walk, never through ``eval``.  Sets are primitive shapes (interval,
box, ball) or unions of previously declared sets.
"""

import ast
import configparser
import hashlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, DomainError, VexcapError
from .exponent import DEFAULT_EQ_TOL, ExponentField
from .grid import (
    Grid,
    RegionMask,
    ball_mask,
    box_mask,
    build_grid,
    interval_mask,
    read_grid_function,
)
from .solver import SolverConfig

_FUNCS = {
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
    "log": np.log,
    "exp": np.exp,
    "sin": np.sin,
}
_CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}

_SCHEMA = {
    "grid": {"dim", "h", "x", "y"},
    "exponent": {"expr", "file", "eq_tol"},
    "solver": {
        "max_iters",
        "tol_gap",
        "tol_change",
        "tau",
        "sigma",
        "seed",
        "deterministic",
        "gap_check_every",
        "mode",
    },
    "capacity": {"set", "kind", "radius", "name"},
    "check": {
        "axiom",
        "sets",
        "kind",
        "radius",
        "axiom_tol",
        "radii",
        "cauchy_factor",
        "agree_rtol",
        "decay_threshold",
    },
    "sweep": {"param", "values", "set", "kind", "radius"},
}
_SET_SCHEMA = {
    "interval": {"type", "lo", "hi"},
    "box": {"type", "xlo", "xhi", "ylo", "yhi"},
    "ball": {"type", "cx", "cy", "r"},
    "union": {"type", "of"},
}


def compile_expression(expr: str, dim: int):
    """Compile an exponent expression into a vectorized callable."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc}") from exc
    names = {"x"} | ({"y"} if dim == 2 else set())

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                return lambda env: float(node.value)
            raise ConfigError(f"literal {node.value!r} is not numeric")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = walk(node.left), walk(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            inner = walk(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: np.negative(inner(env))
            return inner
        if isinstance(node, ast.Name):
            if node.id in names:
                return lambda env, key=node.id: env[key]
            if node.id in _CONSTANTS:
                return lambda env, val=_CONSTANTS[node.id]: val
            raise ConfigError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ConfigError("only abs/min/max/log/exp/sin calls are allowed")
            if node.keywords:
                raise ConfigError("keyword arguments are not allowed in expressions")
            fn = _FUNCS[node.func.id]
            args = [walk(a) for a in node.args]
            if node.func.id in ("min", "max"):
                if len(args) < 2:
                    raise ConfigError(f"{node.func.id} needs at least two arguments")

                def reducer(env, fn=fn, args=args):
                    acc = args[0](env)
                    for a in args[1:]:
                        acc = fn(acc, a(env))
                    return acc

                return reducer
            if len(args) != 1:
                raise ConfigError(f"{node.func.id} takes exactly one argument")
            arg = args[0]
            return lambda env: fn(arg(env))
        raise ConfigError(f"expression construct {type(node).__name__} is not allowed")

    body = walk(tree)

    def fn(*coords):
        env = {"x": coords[0]}
        if dim == 2:
            env["y"] = coords[1]
        return body(env)

    return fn


@dataclass
class ScenarioSpec:
    path: str
    grid: Grid
    field: ExponentField
    sets: dict
    solver: SolverConfig
    eq_tol: float
    exponent_spec: str
    sections: dict = dc_field(default_factory=dict)

    @property
    def exponent_hash(self) -> str:
        return hashlib.sha256(self.exponent_spec.encode()).hexdigest()

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def get_set(self, name: str) -> RegionMask:
        if name not in self.sets:
            raise ConfigError(f"unknown set {name!r}; declared sets: {sorted(self.sets)}")
        return self.sets[name]


def _as_float(section, key, value):
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}={value!r} is not a number") from exc


def _as_int(section, key, value):
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}={value!r} is not an integer") from exc


def _as_bool(section, key, value):
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}={value!r} is not a boolean")


def _as_pair(section, key, value):
    parts = [s for s in value.replace(",", " ").split() if s]
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}={value!r} must be two numbers")
    return (_as_float(section, key, parts[0]), _as_float(section, key, parts[1]))


def _as_float_list(section, key, value):
    parts = [s for s in value.replace(",", " ").split() if s]
    if not parts:
        raise ConfigError(f"[{section}] {key} must list at least one number")
    return [_as_float(section, key, s) for s in parts]


def _as_name_list(value):
    return [s for s in value.replace(",", " ").split() if s]


def _validate_keys(section: str, keys, allowed):
    unknown = sorted(set(keys) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def load_scenario(path) -> ScenarioSpec:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#", ";"),
        interpolation=None,
    )
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    sections = {name: dict(parser[name]) for name in parser.sections()}
    for name in sections:
        if name in _SCHEMA:
            _validate_keys(name, sections[name], _SCHEMA[name])
        elif name.startswith("set."):
            pass  # validated together with the shape type below
        else:
            raise ConfigError(f"unknown section [{name}]")

    if "grid" not in sections:
        raise ConfigError("config must declare a [grid] section")
    gsec = sections["grid"]
    dim = _as_int("grid", "dim", gsec.get("dim", "1"))
    if dim not in (1, 2):
        raise ConfigError(f"[grid] dim must be 1 or 2, got {dim}")
    if "h" not in gsec:
        raise ConfigError("[grid] must set a spacing h")
    h = _as_float("grid", "h", gsec["h"])
    if "x" not in gsec:
        raise ConfigError("[grid] must set the x extent")
    extents = [_as_pair("grid", "x", gsec["x"])]
    if dim == 2:
        if "y" not in gsec:
            raise ConfigError("[grid] must set the y extent in 2D")
        extents.append(_as_pair("grid", "y", gsec["y"]))
    elif "y" in gsec:
        raise ConfigError("[grid] y extent given for a 1D grid")
    try:
        grid = build_grid(dim, extents, h)
    except VexcapError as exc:
        raise ConfigError(str(exc)) from exc

    esec = sections.get("exponent", {})
    eq_tol = _as_float("exponent", "eq_tol", esec["eq_tol"]) if "eq_tol" in esec else DEFAULT_EQ_TOL
    if eq_tol < 0:
        raise ConfigError("[exponent] eq_tol must be nonnegative")
    if "expr" in esec and "file" in esec:
        raise ConfigError("[exponent] give either expr or file, not both")
    try:
        if "file" in esec:
            gf = read_grid_function(esec["file"])
            if gf.grid != grid:
                raise ConfigError("[exponent] file grid does not match [grid]")
            field = ExponentField(grid, gf.values)
            spec_text = f"file:{esec['file']}"
        else:
            expr = esec.get("expr", "2")
            field = ExponentField.from_callable(grid, compile_expression(expr, dim))
            spec_text = f"expr:{expr}"
    except DomainError as exc:
        raise ConfigError(f"[exponent] {exc}") from exc

    sets = _build_sets(grid, sections)
    solver_cfg = _build_solver(sections.get("solver", {}))
    return ScenarioSpec(
        path=str(path),
        grid=grid,
        field=field,
        sets=sets,
        solver=solver_cfg,
        eq_tol=eq_tol,
        exponent_spec=spec_text,
        sections=sections,
    )


def _build_sets(grid: Grid, sections) -> dict:
    shapes = {}
    unions = {}
    for name, body in sections.items():
        if not name.startswith("set."):
            continue
        label = name[4:]
        if not label:
            raise ConfigError("set sections need a name, e.g. [set.E1]")
        stype = body.get("type")
        if stype not in _SET_SCHEMA:
            raise ConfigError(
                f"[{name}] type must be one of {sorted(_SET_SCHEMA)}, got {stype!r}"
            )
        _validate_keys(name, body, _SET_SCHEMA[stype])
        if stype == "union":
            unions[label] = _as_name_list(body.get("of", ""))
            if not unions[label]:
                raise ConfigError(f"[{name}] union needs member sets in 'of'")
            continue
        try:
            if stype == "interval":
                shapes[label] = interval_mask(
                    grid,
                    _as_float(name, "lo", body["lo"]),
                    _as_float(name, "hi", body["hi"]),
                )
            elif stype == "box":
                shapes[label] = box_mask(
                    grid,
                    _as_float(name, "xlo", body["xlo"]),
                    _as_float(name, "xhi", body["xhi"]),
                    _as_float(name, "ylo", body["ylo"]),
                    _as_float(name, "yhi", body["yhi"]),
                )
            else:
                center = [_as_float(name, "cx", body["cx"])]
                if grid.dim == 2:
                    center.append(_as_float(name, "cy", body["cy"]))
                elif "cy" in body:
                    raise ConfigError(f"[{name}] cy given on a 1D grid")
                shapes[label] = ball_mask(grid, center, _as_float(name, "r", body["r"]))
        except KeyError as exc:
            raise ConfigError(f"[{name}] missing key {exc.args[0]!r}") from exc
        except DomainError as exc:
            raise ConfigError(f"[{name}] {exc}") from exc
    for label, members in unions.items():
        acc = None
        for member in members:
            if member not in shapes:
                raise ConfigError(
                    f"[set.{label}] union member {member!r} is not a declared primitive set"
                )
            acc = shapes[member] if acc is None else (acc | shapes[member])
        shapes[label] = acc
    return shapes


def _build_solver(body) -> SolverConfig:
    kwargs = {}
    if "max_iters" in body:
        kwargs["max_iters"] = _as_int("solver", "max_iters", body["max_iters"])
    for key in ("tol_gap", "tol_change", "tau", "sigma"):
        if key in body:
            kwargs[key] = _as_float("solver", key, body[key])
    if "seed" in body:
        kwargs["seed"] = _as_int("solver", "seed", body["seed"])
    if "deterministic" in body:
        kwargs["deterministic"] = _as_bool("solver", "deterministic", body["deterministic"])
    if "gap_check_every" in body:
        kwargs["gap_check_every"] = _as_int("solver", "gap_check_every", body["gap_check_every"])
    if "mode" in body:
        kwargs["mode"] = body["mode"]
    try:
        return SolverConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"[solver] {exc}") from exc
