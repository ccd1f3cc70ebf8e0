"""Command-line front end.

Subcommands: ``capacity``, ``norm``, ``modular``, ``tv``, ``check``, and
``sweep``.  Scenario-driven commands read a config file and write a JSON
report (plus optional CSV for sweeps and grid-function dumps); the small
field commands read a grid-function file directly and print values.

Exit status: 0 on success, 2 on configuration errors, 3 when ``--strict``
is set and a solve did not converge.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, bv
from .capacity import (
    AXIOMS,
    KINDS,
    CapacityScenario,
    capacity,
    check_capacity_axioms,
)
from .errors import ConfigError, VexcapError
from .exponent import ExponentField, exponent_bounds, log_holder_constant
from .grid import read_grid_function, write_grid_function
from .lebesgue import luxemburg_norm, modular
from .mixed import RELAXED, SPLIT, mixed_norm
from .scenario import ScenarioSpec, compile_expression, load_scenario
from .solver import SolverConfig


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VexcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vexcap",
        description="Variable-exponent energies, total variation, and grid capacities.",
    )
    parser.add_argument("--version", action="version", version=f"vexcap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="scenario config file")
        p.add_argument("--out", help="output directory for report files")
        p.add_argument("--csv", help="CSV output path for sweep rows")
        p.add_argument("--strict", action="store_true", help="exit 3 on non-converged solves")
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="force deterministic mode (byte-stable reports)",
        )
        p.add_argument("--seed", type=int, default=None, help="override the solver seed")
        p.add_argument("--dump-gf", action="store_true", help="write minimizer grid functions")

    p_cap = sub.add_parser("capacity", help="solve one capacity scenario")
    common(p_cap)
    p_cap.set_defaults(handler=_cmd_capacity)

    p_check = sub.add_parser("check", help="verify a capacity axiom on a scenario")
    common(p_check)
    p_check.add_argument("--axiom", choices=AXIOMS, help="override the [check] axiom")
    p_check.set_defaults(handler=_cmd_check)

    p_sweep = sub.add_parser("sweep", help="parameter sweep of capacity values")
    common(p_sweep)
    p_sweep.set_defaults(handler=_cmd_sweep)

    for name, handler in (("norm", _cmd_norm), ("modular", _cmd_modular), ("tv", _cmd_tv)):
        p = sub.add_parser(name, help=f"evaluate {name} of a grid-function file")
        p.add_argument("--gf", required=True, help="grid-function file (vexcap-gf v1)")
        if name != "tv":
            p.add_argument("--exponent", required=True, help="exponent expression over x[,y]")
        p.add_argument("--mode", choices=bv.MODES, default=bv.ISOTROPIC)
        p.add_argument("--out", help="output directory for a JSON report")
        p.add_argument("--deterministic", action="store_true")
        p.set_defaults(handler=handler)
    return parser


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _grid_block(grid) -> dict:
    return {
        "dim": grid.dim,
        "extents": [list(pair) for pair in grid.extents],
        "h": grid.h,
        "shape": list(grid.shape),
    }


def _diag_block(field, spec_hash) -> dict:
    p_inf, p_sup = exponent_bounds(field)
    return {
        "p_inf": p_inf,
        "p_sup": p_sup,
        "log_holder_c": log_holder_constant(field),
        "spec_hash": spec_hash,
    }


def _scenario_block(name, args, solver_cfg) -> dict:
    return {
        "name": name,
        "subcommand": args.command,
        "config": getattr(args, "config", None),
        "seed": solver_cfg.seed,
        "deterministic": solver_cfg.deterministic,
        "solver": {
            "max_iters": solver_cfg.max_iters,
            "tol_gap": solver_cfg.tol_gap,
            "tol_change": solver_cfg.tol_change,
            "tau": solver_cfg.tau,
            "sigma": solver_cfg.sigma,
            "gap_check_every": solver_cfg.gap_check_every,
            "mode": solver_cfg.mode,
        },
        "version": __version__,
    }


def _write_report(args, report) -> None:
    if not args.out:
        return
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    (out_dir / "report.json").write_text(payload, encoding="utf-8")


def _apply_overrides(spec: ScenarioSpec, args) -> SolverConfig:
    cfg = spec.solver
    if args.seed is not None:
        cfg.seed = args.seed
    if args.deterministic:
        cfg.deterministic = True
    return cfg


def _timings(deterministic: bool, seconds: float) -> dict:
    return {"total_s": 0.0 if deterministic else seconds}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_capacity(args) -> int:
    spec = load_scenario(args.config)
    cfg = _apply_overrides(spec, args)
    body = spec.section("capacity")
    if "set" not in body:
        raise ConfigError("[capacity] must name the target set")
    target = spec.get_set(body["set"])
    kind = body.get("kind", "mixed")
    if kind not in KINDS:
        raise ConfigError(f"[capacity] kind must be one of {KINDS}, got {kind!r}")
    radius = float(body["radius"]) if "radius" in body else spec.grid.h
    name = body.get("name", body["set"])
    start = time.perf_counter()
    try:
        result = capacity(target, spec.field, kind, radius, cfg, spec.eq_tol)
    except VexcapError as exc:
        raise ConfigError(f"[capacity] {exc}") from exc
    elapsed = time.perf_counter() - start
    report = {
        "scenario": _scenario_block(name, args, cfg),
        "grid": _grid_block(spec.grid),
        "exponent_diagnostics": _diag_block(spec.field, spec.exponent_hash),
        "results": [
            {
                "name": name,
                "kind": kind,
                "value": result.value,
                "certificate": result.certificate.as_dict(),
                "tolerances": {"tol_gap": cfg.tol_gap, "tol_change": cfg.tol_change},
            }
        ],
        "timings": _timings(cfg.deterministic, elapsed),
    }
    _write_report(args, report)
    if args.dump_gf and args.out:
        write_grid_function(Path(args.out) / f"minimizer_{name}.gf", result.minimizer)
    cert = result.certificate
    print(
        f"capacity[{kind}] {name} = {result.value:.10g} "
        f"(gap {cert.final_gap:.3g}, {cert.iterations} iters, converged={cert.converged})"
    )
    if args.strict and not cert.converged:
        print("solver did not converge and --strict is set", file=sys.stderr)
        return 3
    return 0


def _cmd_check(args) -> int:
    spec = load_scenario(args.config)
    cfg = _apply_overrides(spec, args)
    body = spec.section("check")
    axiom = args.axiom or body.get("axiom")
    if not axiom:
        raise ConfigError("no axiom given: set [check] axiom or pass --axiom")
    if axiom not in AXIOMS:
        raise ConfigError(f"unknown axiom {axiom!r}; expected one of {AXIOMS}")
    set_names = body.get("sets")
    if set_names:
        names = [s for s in set_names.replace(",", " ").split() if s]
        sets = [spec.get_set(n) for n in names]
    else:
        names = sorted(spec.sets)
        sets = [spec.sets[n] for n in names]
    params = {}
    if "radii" in body:
        params["radii"] = [float(v) for v in body["radii"].replace(",", " ").split() if v]
    for key in ("cauchy_factor", "agree_rtol", "decay_threshold"):
        if key in body:
            params[key] = float(body[key])
    scenario = CapacityScenario(
        field=spec.field,
        sets=sets,
        names=names,
        kind=body.get("kind", "mixed"),
        radius=float(body["radius"]) if "radius" in body else None,
        axiom_tol=float(body.get("axiom_tol", 1e-6)),
        params=params,
    )
    start = time.perf_counter()
    report_obj = check_capacity_axioms(scenario, axiom, cfg)
    elapsed = time.perf_counter() - start
    report = {
        "scenario": _scenario_block(axiom, args, cfg),
        "grid": _grid_block(spec.grid),
        "exponent_diagnostics": _diag_block(spec.field, spec.exponent_hash),
        "results": [
            {
                "name": axiom,
                "kind": scenario.kind,
                "value": report_obj.lhs,
                "certificate": None,
                "tolerances": {"axiom_tol": scenario.axiom_tol, "composed": report_obj.tolerance},
                "pass": report_obj.passed,
                "details": report_obj.details,
            }
        ],
        "timings": _timings(cfg.deterministic, elapsed),
    }
    _write_report(args, report)
    status = "PASS" if report_obj.passed else "FAIL"
    print(
        f"check[{axiom}] {status}: lhs={report_obj.lhs:.10g} rhs={report_obj.rhs:.10g} "
        f"margin={report_obj.margin:.3g} tol={report_obj.tolerance:.3g}"
    )
    return 0


def _cmd_sweep(args) -> int:
    spec = load_scenario(args.config)
    cfg = _apply_overrides(spec, args)
    body = spec.section("sweep")
    param = body.get("param")
    if param not in ("h", "radius"):
        raise ConfigError("[sweep] param must be 'h' or 'radius'")
    if "values" not in body:
        raise ConfigError("[sweep] must list values")
    values = [float(v) for v in body["values"].replace(",", " ").split() if v]
    if "set" not in body:
        raise ConfigError("[sweep] must name the target set")
    set_name = body["set"]
    kind = body.get("kind", "mixed")
    if kind not in KINDS:
        raise ConfigError(f"[sweep] kind must be one of {KINDS}, got {kind!r}")
    base_radius = float(body["radius"]) if "radius" in body else None
    rows = []
    non_converged = 0
    start = time.perf_counter()
    for value in values:
        if param == "h":
            sub_spec = _respace(spec, value)
            target = sub_spec.get_set(set_name)
            radius = base_radius if base_radius is not None else sub_spec.grid.h
            result = capacity(target, sub_spec.field, kind, radius, cfg, sub_spec.eq_tol)
        else:
            target = spec.get_set(set_name)
            result = capacity(target, spec.field, kind, value, cfg, spec.eq_tol)
        cert = result.certificate
        non_converged += 0 if cert.converged else 1
        rows.append((value, result.value, cert.final_gap, cert.iterations))
    elapsed = time.perf_counter() - start
    if args.csv:
        csv_path = Path(args.csv)
        if csv_path.parent != Path(""):
            csv_path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["param,value,gap,iters"]
        lines += [f"{p!r},{v!r},{g!r},{it}" for p, v, g, it in rows]
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = {
        "scenario": _scenario_block(f"sweep_{param}", args, cfg),
        "grid": _grid_block(spec.grid),
        "exponent_diagnostics": _diag_block(spec.field, spec.exponent_hash),
        "results": [
            {
                "name": f"{param}={p:g}",
                "kind": kind,
                "value": v,
                "certificate": {"final_gap": g, "iterations": it},
                "tolerances": {"tol_gap": cfg.tol_gap},
            }
            for p, v, g, it in rows
        ],
        "timings": _timings(cfg.deterministic, elapsed),
    }
    _write_report(args, report)
    for p, v, g, it in rows:
        print(f"{param}={p:g} value={v:.10g} gap={g:.3g} iters={it}")
    if args.strict and non_converged:
        print(f"{non_converged} solve(s) did not converge and --strict is set", file=sys.stderr)
        return 3
    return 0


def _respace(spec: ScenarioSpec, h: float) -> ScenarioSpec:
    """Rebuild a scenario on the same extents with a new spacing."""
    sections = {name: dict(body) for name, body in spec.sections.items()}
    sections.setdefault("grid", {})["h"] = repr(h)
    import tempfile

    text_lines = []
    for name, body in sections.items():
        text_lines.append(f"[{name}]")
        text_lines.extend(f"{k} = {v}" for k, v in body.items())
    with tempfile.NamedTemporaryFile(
        "w", suffix=".cfg", delete=False, encoding="utf-8"
    ) as handle:
        handle.write("\n".join(text_lines) + "\n")
        tmp = handle.name
    try:
        return load_scenario(tmp)
    finally:
        os.unlink(tmp)


def _field_inputs(args):
    u = read_grid_function(args.gf)
    field = None
    if getattr(args, "exponent", None) is not None:
        fn = compile_expression(args.exponent, u.grid.dim)
        try:
            field = ExponentField.from_callable(u.grid, fn)
        except VexcapError as exc:
            raise ConfigError(f"--exponent: {exc}") from exc
    return u, field


def _small_report(args, u, field, results) -> None:
    if not args.out:
        return
    if field is not None:
        import hashlib

        diag = _diag_block(field, hashlib.sha256(args.exponent.encode()).hexdigest())
    else:
        diag = {"p_inf": None, "p_sup": None, "log_holder_c": None, "spec_hash": None}
    cfg = SolverConfig(deterministic=bool(getattr(args, "deterministic", False)))
    report = {
        "scenario": _scenario_block(args.command, args, cfg),
        "grid": _grid_block(u.grid),
        "exponent_diagnostics": diag,
        "results": [
            {"name": name, "kind": kind, "value": value, "certificate": None, "tolerances": {}}
            for name, kind, value in results
        ],
        "timings": _timings(True, 0.0),
    }
    _write_report(args, report)


def _cmd_norm(args) -> int:
    u, field = _field_inputs(args)
    lux = luxemburg_norm(u, field)
    m_split = mixed_norm(u, field, SPLIT, mode=args.mode)
    m_relaxed = mixed_norm(u, field, RELAXED, mode=args.mode)
    print(f"luxemburg_norm = {lux:.12g}")
    print(f"mixed_norm_split = {m_split:.12g}")
    print(f"mixed_norm_relaxed = {m_relaxed:.12g}")
    _small_report(
        args,
        u,
        field,
        [
            ("luxemburg_norm", "norm", lux),
            ("mixed_norm_split", "norm", m_split),
            ("mixed_norm_relaxed", "norm", m_relaxed),
        ],
    )
    return 0


def _cmd_modular(args) -> int:
    u, field = _field_inputs(args)
    value = modular(u, field)
    print(f"modular = {value:.12g}")
    _small_report(args, u, field, [("modular", "modular", value)])
    return 0


def _cmd_tv(args) -> int:
    u, _ = _field_inputs(args)
    value = bv.total_variation(u, mode=args.mode)
    print(f"total_variation[{args.mode}] = {value:.12g}")
    _small_report(args, u, None, [(f"total_variation_{args.mode}", "tv", value)])
    return 0


if __name__ == "__main__":
    sys.exit(main())
