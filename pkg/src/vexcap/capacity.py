"""Mixed and Sobolev capacities plus the set-function axiom harness.

Both capacities minimize the same discrete objective (zero-order modular
plus gradient energy) over functions pinned to 1 on an open neighborhood of
the target set, realized as a Euclidean dilation of at least one cell
layer.  On a fixed grid the two kinds therefore share their value and
differ in how the energy is itemized; they separate only in refinement
studies, which is what the axiom checks exercise.

Tolerances for every axiom inequality follow one composition rule: an
absolute floor plus twice the sum of the solver gap slacks of the involved
solves, each gap scaled by the magnitude of its value.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import bv
from .errors import ConfigError, DomainError
from .exponent import DEFAULT_EQ_TOL, ExponentField, one_region
from .grid import Grid, GridFunction, RegionMask, dilate_mask
from .lebesgue import EnergyBreakdown, modular
from .solver import SolveCertificate, SolverConfig, minimize_capacity_energy

MIXED = "mixed"
SOBOLEV = "sobolev"
KINDS = (MIXED, SOBOLEV)

AXIOMS = (
    "outer_measure",
    "increasing_sets",
    "outer_regularity",
    "decreasing_compacts",
    "strong_subadd",
    "null_equivalence",
)

#: absolute part of the axiom tolerance rule
DEFAULT_AXIOM_TOL = 1e-6


@dataclass(frozen=True)
class CapacityResult:
    value: float
    minimizer: GridFunction
    certificate: SolveCertificate
    kind: str
    neighborhood_radius: float
    grid: Grid

    @property
    def gap_slack(self) -> float:
        """Absolute solver slack carried by this value."""
        return self.certificate.final_gap * max(1.0, abs(self.value))


def capacity(
    E: RegionMask,
    field: ExponentField,
    kind: str = MIXED,
    radius: float | None = None,
    cfg: SolverConfig | None = None,
    eq_tol: float = DEFAULT_EQ_TOL,
) -> CapacityResult:
    """Capacity of ``E``: minimal energy over admissibles equal to 1 on the
    ``radius``-dilation of ``E``.

    ``radius`` defaults to one cell layer and must be at least ``h`` so the
    discrete neighborhood is open in the lattice sense.
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    grid = field.grid
    if E.grid != grid:
        raise DomainError("set lives on a different grid than the exponent")
    if radius is None:
        radius = grid.h
    if radius < grid.h - 1e-12 * grid.h:
        raise DomainError(
            f"neighborhood radius {radius} is below the grid spacing {grid.h}"
        )
    cfg = cfg if cfg is not None else SolverConfig()
    fixed_one = dilate_mask(E, radius) if E.any() else E
    minimizer, cert = minimize_capacity_energy(field, fixed_one, cfg)
    y = one_region(field, eq_tol)
    if kind == MIXED:
        energy = EnergyBreakdown.from_parts(
            lebesgue_part=modular(minimizer, field),
            gradient_part=bv.gradient_energy(minimizer, field, ~y, cfg.mode),
            tv_part=bv.total_variation(minimizer, y, cfg.mode),
        )
    else:
        energy = EnergyBreakdown.from_parts(
            lebesgue_part=modular(minimizer, field),
            gradient_part=bv.gradient_energy(minimizer, field, None, cfg.mode),
            tv_part=0.0,
        )
    cert = SolveCertificate(
        iterations=cert.iterations,
        final_gap=cert.final_gap,
        final_change=cert.final_change,
        converged=cert.converged,
        energy=energy,
        energy_trace=cert.energy_trace,
    )
    return CapacityResult(
        value=energy.total,
        minimizer=minimizer,
        certificate=cert,
        kind=kind,
        neighborhood_radius=float(radius),
        grid=grid,
    )


@dataclass
class CapacityScenario:
    """Inputs for one axiom check: an exponent field, an ordered set family,
    and per-axiom parameters."""

    field: ExponentField
    sets: list
    names: list | None = None
    kind: str = MIXED
    radius: float | None = None
    axiom_tol: float = DEFAULT_AXIOM_TOL
    params: dict = dc_field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    def set_names(self) -> list[str]:
        if self.names is not None:
            return list(self.names)
        return [f"E{i + 1}" for i in range(len(self.sets))]


@dataclass(frozen=True)
class AxiomReport:
    axiom: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    details: dict

    def as_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "pass": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def _worker_count() -> int:
    raw = os.environ.get("VEXCAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _solve_family(jobs, field, cfg, eq_tol=DEFAULT_EQ_TOL):
    """Run independent capacity solves; jobs are (key, mask, kind, radius)."""
    workers = _worker_count()

    def run(job):
        key, mask, kind, radius = job
        return key, capacity(mask, field, kind, radius, cfg, eq_tol)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    return dict(results)


def check_capacity_axioms(
    scenario: CapacityScenario, axiom: str, cfg: SolverConfig | None = None
) -> AxiomReport:
    """Numerically check one capacity axiom on the scenario's set family.

    Raises :class:`ConfigError` when the family does not have the shape the
    axiom requires (for example a non-nested family for the increasing-set
    limit).  The report carries every raw value and the composed tolerance.
    """
    if axiom not in AXIOMS:
        raise ConfigError(f"unknown axiom {axiom!r}; expected one of {AXIOMS}")
    if not scenario.sets and axiom != "outer_regularity":
        raise ConfigError("scenario provides no sets")
    for mask in scenario.sets:
        if mask.grid != scenario.grid:
            raise ConfigError("scenario sets live on different grids")
    cfg = cfg if cfg is not None else SolverConfig()
    radius = scenario.radius if scenario.radius is not None else scenario.grid.h
    handler = {
        "outer_measure": _check_outer_measure,
        "increasing_sets": _check_increasing_sets,
        "outer_regularity": _check_outer_regularity,
        "decreasing_compacts": _check_decreasing_compacts,
        "strong_subadd": _check_strong_subadd,
        "null_equivalence": _check_null_equivalence,
    }[axiom]
    return handler(scenario, cfg, radius)


def _tolerance(scenario, results) -> float:
    return scenario.axiom_tol + 2.0 * sum(r.gap_slack for r in results)


def _require_nested(sets, ascending: bool, axiom: str):
    for a, b in zip(sets, sets[1:]):
        ok = a.is_subset(b) if ascending else b.is_subset(a)
        if not ok:
            direction = "increasing" if ascending else "decreasing"
            raise ConfigError(f"{axiom} requires a nested {direction} family")


def _check_outer_measure(scenario, cfg, radius) -> AxiomReport:
    sets = scenario.sets
    union = sets[0]
    for mask in sets[1:]:
        union = union | mask
    jobs = [(f"E{i}", mask, scenario.kind, radius) for i, mask in enumerate(sets)]
    jobs.append(("union", union, scenario.kind, radius))
    jobs.append(("empty", RegionMask.empty(scenario.grid), scenario.kind, radius))
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    values = [res[f"E{i}"].value for i in range(len(sets))]
    c_union = res["union"].value
    c_empty = res["empty"].value
    monotone = all(
        values[i] <= c_union + tol for i in range(len(sets))
    )
    pair_monotone = True
    for i in range(len(sets)):
        for j in range(len(sets)):
            if i != j and sets[i].is_subset(sets[j]):
                pair_monotone &= values[i] <= values[j] + tol
    lhs = c_union
    rhs = float(sum(values))
    checks = {
        "empty_is_null": c_empty <= tol,
        "monotone_under_union": monotone,
        "monotone_nested_pairs": pair_monotone,
        "finite_subadditivity": lhs <= rhs + tol,
    }
    return AxiomReport(
        axiom="outer_measure",
        passed=all(checks.values()),
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        tolerance=tol,
        details={
            "values": values,
            "union": c_union,
            "empty": c_empty,
            "checks": checks,
            "gaps": [r.certificate.final_gap for r in res.values()],
        },
    )


def _check_increasing_sets(scenario, cfg, radius) -> AxiomReport:
    sets = scenario.sets
    if len(sets) < 2:
        raise ConfigError("increasing_sets requires at least two sets")
    _require_nested(sets, ascending=True, axiom="increasing_sets")
    union = sets[0]
    for mask in sets[1:]:
        union = union | mask
    jobs = [(f"E{i}", mask, scenario.kind, radius) for i, mask in enumerate(sets)]
    jobs.append(("union", union, scenario.kind, radius))
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    values = [res[f"E{i}"].value for i in range(len(sets))]
    c_union = res["union"].value
    nondecreasing = all(a <= b + tol for a, b in zip(values, values[1:]))
    limit_matches = abs(c_union - values[-1]) <= tol
    checks = {"nondecreasing": nondecreasing, "limit_matches_union": limit_matches}
    return AxiomReport(
        axiom="increasing_sets",
        passed=all(checks.values()),
        lhs=c_union,
        rhs=values[-1],
        margin=abs(c_union - values[-1]),
        tolerance=tol,
        details={"values": values, "union": c_union, "checks": checks},
    )


def _check_outer_regularity(scenario, cfg, radius) -> AxiomReport:
    if not scenario.sets:
        raise ConfigError("outer_regularity requires one target set")
    target = scenario.sets[0]
    h = scenario.grid.h
    radii = [float(r) for r in scenario.params.get("radii", (8 * h, 4 * h, 2 * h, h))]
    if len(radii) < 3 or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("outer_regularity needs at least 3 strictly decreasing radii")
    factor = float(scenario.params.get("cauchy_factor", 2.0))
    jobs = [(f"r{i}", target, scenario.kind, r) for i, r in enumerate(radii)]
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    values = [res[f"r{i}"].value for i in range(len(radii))]
    nonincreasing = all(b <= a + tol for a, b in zip(values, values[1:]))
    diffs = [max(a - b, 0.0) for a, b in zip(values, values[1:])]
    ratios = [d0 / max(d1, 1e-15) for d0, d1 in zip(diffs, diffs[1:])]
    cauchy = (sum(ratios) / len(ratios) >= factor * (1.0 - 1e-9)) if ratios else True
    checks = {"nonincreasing_radii": nonincreasing, "cauchy_contraction": cauchy}
    return AxiomReport(
        axiom="outer_regularity",
        passed=all(checks.values()),
        lhs=values[-1],
        rhs=values[0],
        margin=values[0] - values[-1],
        tolerance=tol,
        details={"radii": radii, "values": values, "diff_ratios": ratios, "checks": checks},
    )


def _check_decreasing_compacts(scenario, cfg, radius) -> AxiomReport:
    sets = scenario.sets
    if len(sets) < 2:
        raise ConfigError("decreasing_compacts requires at least two sets")
    _require_nested(sets, ascending=False, axiom="decreasing_compacts")
    inter = sets[0]
    for mask in sets[1:]:
        inter = inter & mask
    jobs = [(f"K{i}", mask, scenario.kind, radius) for i, mask in enumerate(sets)]
    jobs.append(("inter", inter, scenario.kind, radius))
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    values = [res[f"K{i}"].value for i in range(len(sets))]
    c_inter = res["inter"].value
    nonincreasing = all(b <= a + tol for a, b in zip(values, values[1:]))
    limit_matches = abs(c_inter - values[-1]) <= tol
    checks = {"nonincreasing": nonincreasing, "limit_matches_intersection": limit_matches}
    return AxiomReport(
        axiom="decreasing_compacts",
        passed=all(checks.values()),
        lhs=c_inter,
        rhs=values[-1],
        margin=abs(c_inter - values[-1]),
        tolerance=tol,
        details={"values": values, "intersection": c_inter, "checks": checks},
    )


def _check_strong_subadd(scenario, cfg, radius) -> AxiomReport:
    if len(scenario.sets) != 2:
        raise ConfigError("strong_subadd requires exactly two sets")
    e1, e2 = scenario.sets
    jobs = [
        ("E1", e1, scenario.kind, radius),
        ("E2", e2, scenario.kind, radius),
        ("union", e1 | e2, scenario.kind, radius),
        ("inter", e1 & e2, scenario.kind, radius),
    ]
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    lhs = res["union"].value + res["inter"].value
    rhs = res["E1"].value + res["E2"].value
    return AxiomReport(
        axiom="strong_subadd",
        passed=lhs <= rhs + tol,
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        tolerance=tol,
        details={key: r.value for key, r in res.items()},
    )


def _check_null_equivalence(scenario, cfg, radius) -> AxiomReport:
    sets = scenario.sets
    if len(sets) < 2:
        raise ConfigError("null_equivalence requires a shrinking family")
    _require_nested(sets, ascending=False, axiom="null_equivalence")
    agree_rtol = float(scenario.params.get("agree_rtol", 0.1))
    threshold = float(scenario.params.get("decay_threshold", 0.05))
    jobs = []
    for i, mask in enumerate(sets):
        jobs.append((f"mixed{i}", mask, MIXED, radius))
        jobs.append((f"sobolev{i}", mask, SOBOLEV, radius))
    res = _solve_family(jobs, scenario.field, cfg)
    tol = _tolerance(scenario, res.values())
    mixed_vals = [res[f"mixed{i}"].value for i in range(len(sets))]
    sob_vals = [res[f"sobolev{i}"].value for i in range(len(sets))]
    monotone = all(b <= a + tol for a, b in zip(mixed_vals, mixed_vals[1:])) and all(
        b <= a + tol for a, b in zip(sob_vals, sob_vals[1:])
    )
    agree = all(
        abs(m - s) <= agree_rtol * max(abs(m), abs(s), 1e-15) + tol
        for m, s in zip(mixed_vals, sob_vals)
    )
    decays = min(mixed_vals[-1], sob_vals[-1]) <= threshold + tol
    checks = {"both_monotone": monotone, "kinds_agree": agree, "decays_below_threshold": decays}
    return AxiomReport(
        axiom="null_equivalence",
        passed=all(checks.values()),
        lhs=mixed_vals[-1],
        rhs=sob_vals[-1],
        margin=abs(mixed_vals[-1] - sob_vals[-1]),
        tolerance=tol,
        details={
            "mixed": mixed_vals,
            "sobolev": sob_vals,
            "threshold": threshold,
            "agree_rtol": agree_rtol,
            "checks": checks,
        },
    )
