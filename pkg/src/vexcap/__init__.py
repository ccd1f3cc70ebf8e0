"""Grid-based variable-exponent energies, discrete total variation, and
capacities, with a primal-dual solver and an axiom verification harness."""

__version__ = "0.1.0"

from .bv import (
    ANISOTROPIC,
    ISOTROPIC,
    coarea_level_sum,
    gradient,
    gradient_energy,
    gradient_magnitude,
    perimeter,
    total_variation,
)
from .capacity import (
    AXIOMS,
    AxiomReport,
    CapacityResult,
    CapacityScenario,
    capacity,
    check_capacity_axioms,
)
from .errors import ConfigError, DomainError, VexcapError
from .exponent import (
    DEFAULT_EQ_TOL,
    ExponentField,
    LogHolderReport,
    StrongLogHolderReport,
    exponent_bounds,
    log_holder_constant,
    log_holder_report,
    one_region,
    strong_log_holder_report,
)
from .grid import (
    Grid,
    GridFunction,
    RegionMask,
    ball_mask,
    box_mask,
    build_grid,
    dilate_mask,
    interval_mask,
    mollify,
    read_grid_function,
    write_grid_function,
)
from .lebesgue import EnergyBreakdown, luxemburg_norm, modular, sobolev_modular
from .mixed import (
    EquivalenceReport,
    RelaxationReport,
    equivalence_ratio,
    lattice_defect,
    mixed_norm,
    relaxation_probe,
    rho_mixed_relaxed,
    rho_mixed_split,
)
from .scenario import ScenarioSpec, compile_expression, load_scenario
from .solver import (
    SolveCertificate,
    SolverConfig,
    minimize_capacity_energy,
    objective_energy,
    prox_optimality_residual,
    prox_power,
)

__all__ = [
    "ANISOTROPIC",
    "AXIOMS",
    "AxiomReport",
    "CapacityResult",
    "CapacityScenario",
    "ConfigError",
    "DEFAULT_EQ_TOL",
    "DomainError",
    "EnergyBreakdown",
    "EquivalenceReport",
    "ExponentField",
    "Grid",
    "GridFunction",
    "ISOTROPIC",
    "LogHolderReport",
    "RegionMask",
    "RelaxationReport",
    "ScenarioSpec",
    "SolveCertificate",
    "SolverConfig",
    "StrongLogHolderReport",
    "VexcapError",
    "ball_mask",
    "box_mask",
    "build_grid",
    "capacity",
    "check_capacity_axioms",
    "coarea_level_sum",
    "compile_expression",
    "dilate_mask",
    "equivalence_ratio",
    "exponent_bounds",
    "gradient",
    "gradient_energy",
    "gradient_magnitude",
    "interval_mask",
    "lattice_defect",
    "load_scenario",
    "log_holder_constant",
    "log_holder_report",
    "luxemburg_norm",
    "minimize_capacity_energy",
    "mixed_norm",
    "modular",
    "mollify",
    "objective_energy",
    "one_region",
    "perimeter",
    "prox_optimality_residual",
    "prox_power",
    "read_grid_function",
    "relaxation_probe",
    "rho_mixed_relaxed",
    "rho_mixed_split",
    "sobolev_modular",
    "strong_log_holder_report",
    "total_variation",
    "write_grid_function",
]
