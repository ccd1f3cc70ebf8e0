"""Mixed BV-Sobolev pseudo-modulars, mixed norms, and theorem probes.

Two pseudo-modulars are provided.  The split form charges total variation
where the exponent equals 1 and the gradient modular elsewhere.  The
relaxed form is the plain gradient energy ``sum |grad u|**p(x) * h**dim``:
on a fixed grid every node function extends to a Lipschitz interpolant, so
the infimum over approximating sequences collapses onto the function
itself, and the genuine sequence content is exercised through mollification
families (:func:`relaxation_probe`) and grid refinement instead.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import bv
from ._num import UNIT_ROOT_RESIDUAL, pow_energy, unit_root
from .errors import DomainError
from .exponent import DEFAULT_EQ_TOL, ExponentField, log_holder_constant, one_region
from .grid import GridFunction, RegionMask, mollify
from .lebesgue import EnergyBreakdown, luxemburg_norm, modular

SPLIT = "split"
RELAXED = "relaxed"

#: default multiplier kappa in the equivalence bound exp(kappa * c)
DEFAULT_KAPPA = 3.0


def rho_mixed_split(
    u: GridFunction,
    field: ExponentField,
    mask: RegionMask | None = None,
    eq_tol: float = DEFAULT_EQ_TOL,
    mode: str = bv.ISOTROPIC,
) -> EnergyBreakdown:
    """Total variation on the p = 1 region plus the gradient modular off it."""
    if field.grid != u.grid:
        raise DomainError("exponent lives on a different grid")
    if mask is None:
        mask = RegionMask.full(u.grid)
    elif mask.grid != u.grid:
        raise DomainError("mask lives on a different grid")
    y = one_region(field, eq_tol)
    return EnergyBreakdown.from_parts(
        lebesgue_part=0.0,
        gradient_part=bv.gradient_energy(u, field, mask - y, mode),
        tv_part=bv.total_variation(u, mask & y, mode),
    )


def rho_mixed_relaxed(u: GridFunction, field: ExponentField, mode: str = bv.ISOTROPIC) -> float:
    """Discrete relaxed gradient energy ``sum |grad u|**p(x) * h**dim``.

    Reduces to the q-Dirichlet energy for constant exponent q > 1 and to
    the discrete total variation for p = 1.
    """
    return bv.gradient_energy(u, field, mask=None, mode=mode)


def mixed_norm(
    u: GridFunction,
    field: ExponentField,
    flavor: str = RELAXED,
    eq_tol: float = DEFAULT_EQ_TOL,
    mode: str = bv.ISOTROPIC,
    residual_tol: float = UNIT_ROOT_RESIDUAL,
) -> float:
    """Luxemburg norm plus the unit-level root of the chosen pseudo-modular.

    The pseudo-norm part is zero exactly when the pseudo-modular vanishes
    for every scaling, i.e. for constant functions.
    """
    if flavor not in (SPLIT, RELAXED):
        raise DomainError(f"flavor must be '{SPLIT}' or '{RELAXED}', got {flavor!r}")
    if not np.isfinite(u.values).all():
        raise DomainError("mixed norm requires finite values")
    base = luxemburg_norm(u, field, residual_tol=residual_tol)
    w = u.grid.weight
    p = field.values
    if flavor == RELAXED:
        if mode == bv.ISOTROPIC:
            mags = [bv.gradient_magnitude(u, bv.ISOTROPIC)]
            powers = [p]
        else:
            mags = [np.abs(g) for g in bv.gradient(u)]
            powers = [p] * len(mags)

        def rho(lam):
            return float(sum((pow_energy(m / lam, q)).sum() for m, q in zip(mags, powers)) * w)

    else:
        y = one_region(field, eq_tol).where
        if mode == bv.ISOTROPIC:
            mag = bv.gradient_magnitude(u, bv.ISOTROPIC)
            tv_mag = mag[y]
            grad_mags = [mag[~y]]
            grad_powers = [p[~y]]
        else:
            comps = [np.abs(g) for g in bv.gradient(u)]
            tv_mag = sum(c[y] for c in comps)
            grad_mags = [c[~y] for c in comps]
            grad_powers = [p[~y]] * len(comps)

        def rho(lam):
            tv = tv_mag.sum() / lam
            grad = sum((pow_energy(m / lam, q)).sum() for m, q in zip(grad_mags, grad_powers))
            return float((tv + grad) * w)

    return base + unit_root(rho, residual_tol=residual_tol)


def lattice_defect(u: GridFunction, v: GridFunction, field: ExponentField) -> float:
    """``rho(max) + rho(min) - rho(u) - rho(v)`` for the relaxed pseudo-modular.

    Evaluated in anisotropic gradient mode, where the rearrangement argument
    holds edge by edge for every convex power, so the defect is nonpositive
    up to roundoff.  The sum is grouped per edge to avoid cancellation noise.
    """
    if u.grid != v.grid or field.grid != u.grid:
        raise DomainError("inputs live on different grids")
    hi = u.maximum(v)
    lo = u.minimum(v)
    p = field.values
    defect = 0.0
    for g_hi, g_lo, g_u, g_v in zip(
        bv.gradient(hi), bv.gradient(lo), bv.gradient(u), bv.gradient(v)
    ):
        term = (
            pow_energy(np.abs(g_hi), p)
            + pow_energy(np.abs(g_lo), p)
            - pow_energy(np.abs(g_u), p)
            - pow_energy(np.abs(g_v), p)
        )
        defect += float(term.sum())
    return defect * u.grid.weight


@dataclass(frozen=True)
class RelaxationReport:
    lsc_ok: bool
    upper_ok: bool
    C_observed: float
    rho_u: float
    c_bound: float
    trace: tuple


def relaxation_probe(
    u: GridFunction,
    field: ExponentField,
    F: RegionMask,
    deltas,
    eq_tol: float = DEFAULT_EQ_TOL,
    mode: str = bv.ISOTROPIC,
    tail: int = 2,
    lsc_rtol: float = 0.05,
    lsc_atol: float = 1e-9,
    c_bound: float | None = None,
    kappa: float = DEFAULT_KAPPA,
) -> RelaxationReport:
    """Evaluate the split pseudo-modular over ``F`` along a mollifier family.

    ``deltas`` must decrease strictly and stay at or above the grid spacing;
    ``F`` must keep a margin of the largest radius from the boundary so the
    smoothed fields are unaffected by the edge extension.  The tail of the
    sweep estimates the limiting ratio ``C_observed``; ``upper_ok`` checks it
    against ``c_bound`` (default ``exp(kappa * c)`` with c the measured
    log-Hoelder constant) and ``lsc_ok`` checks that the tail does not drop
    below the unsmoothed value beyond the stated slack.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise DomainError("deltas must be strictly decreasing")
    if min(deltas) < u.grid.h:
        raise DomainError("mollification radii below the grid resolution")
    if F.grid != u.grid:
        raise DomainError("probe region lives on a different grid")
    margin = u.grid.boundary_distance()[F.where]
    if margin.size and margin.min() < max(deltas) - 1e-9 * u.grid.h:
        raise DomainError(
            "probe region must keep a boundary margin of the largest radius"
        )
    if c_bound is None:
        c_bound = float(np.exp(kappa * log_holder_constant(field)))
    rho_u = rho_mixed_split(u, field, F, eq_tol, mode).total
    trace = []
    for d in deltas:
        val = rho_mixed_split(mollify(u, d), field, F, eq_tol, mode).total
        trace.append((d, val))
    tail_vals = [val for _, val in trace[-tail:]]
    if rho_u == 0.0:
        ratios = [np.inf if v > 0 else 1.0 for v in tail_vals]
    else:
        ratios = [v / rho_u for v in tail_vals]
    c_obs = float(max(ratios))
    lsc_ok = min(tail_vals) >= rho_u * (1.0 - lsc_rtol) - lsc_atol
    upper_ok = np.isfinite(c_obs) and c_obs <= c_bound * (1.0 + 1e-9)
    return RelaxationReport(
        lsc_ok=bool(lsc_ok),
        upper_ok=bool(upper_ok),
        C_observed=c_obs,
        rho_u=rho_u,
        c_bound=c_bound,
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class EquivalenceReport:
    split: float
    relaxed: float
    ratio: float
    log_holder_c: float
    lower: float
    upper: float
    within_bounds: bool


def equivalence_ratio(
    u: GridFunction,
    field: ExponentField,
    eq_tol: float = DEFAULT_EQ_TOL,
    mode: str = bv.ISOTROPIC,
    kappa: float = DEFAULT_KAPPA,
    warn_constant: float = 10.0,
) -> EquivalenceReport:
    """Compare the split and relaxed pseudo-modulars over the full domain.

    The comparability contract is ``ratio in [exp(-kappa*c), exp(kappa*c)]``
    with ``c`` the measured log-Hoelder constant; a large ``c`` (for example
    an exponent jumping across adjacent nodes) triggers a warning because
    the ratio bound then carries no information.
    """
    if not np.isfinite(u.values).all():
        raise DomainError("equivalence probe requires finite values")
    c = log_holder_constant(field)
    if c > warn_constant:
        warnings.warn(
            f"exponent oscillation constant {c:.3g} is large; "
            "the field is likely not log-Hoelder at this resolution",
            stacklevel=2,
        )
    split = rho_mixed_split(u, field, None, eq_tol, mode).total
    relaxed = rho_mixed_relaxed(u, field, mode)
    if split == 0.0 and relaxed == 0.0:
        ratio = 1.0
    elif relaxed == 0.0:
        ratio = np.inf
    else:
        ratio = split / relaxed
    lower, upper = float(np.exp(-kappa * c)), float(np.exp(kappa * c))
    inside = lower * (1.0 - 1e-9) <= ratio <= upper * (1.0 + 1e-9)
    return EquivalenceReport(
        split=split,
        relaxed=relaxed,
        ratio=float(ratio),
        log_holder_c=c,
        lower=lower,
        upper=upper,
        within_bounds=bool(inside),
    )
