"""Variable exponents on grids and their regularity diagnostics.

An :class:`ExponentField` samples an integrability index ``p(x) >= 1`` at
the grid nodes.  The diagnostics computed here (pointwise bounds, the
log-Hoelder constant, the strong continuity report near the set where
``p = 1``) feed every energy and capacity computation downstream.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DomainError
from .grid import Grid, GridFunction, RegionMask

#: node-equality tolerance for membership in the ``p = 1`` region
DEFAULT_EQ_TOL = 1e-12

#: exhaustive pair sweeps are used up to this many node pairs
PAIR_BUDGET = 2_000_000


@dataclass(frozen=True)
class ExponentField:
    """Per-node exponent values with cached extrema.

    Values must be finite and at least 1; the cached bounds are the exact
    extrema of the sampled values.
    """

    grid: Grid
    values: np.ndarray
    cached_inf: float = dc_field(init=False)
    cached_sup: float = dc_field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError("exponent shape does not match the grid")
        if not np.isfinite(vals).all():
            raise DomainError("exponent values must be finite")
        if vals.min() < 1.0:
            raise DomainError("exponents must satisfy p(x) >= 1 everywhere")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "cached_inf", float(vals.min()))
        object.__setattr__(self, "cached_sup", float(vals.max()))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ExponentField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "ExponentField":
        vals = np.asarray(fn(*grid.coords()), dtype=float)
        return cls(grid, np.broadcast_to(vals, grid.shape).copy())

    @classmethod
    def from_grid_function(cls, u: GridFunction) -> "ExponentField":
        return cls(u.grid, u.values.copy())


def exponent_bounds(field: ExponentField, mask: RegionMask | None = None) -> tuple[float, float]:
    """(inf, sup) of the exponent over ``mask`` (full grid when omitted)."""
    if mask is None:
        return field.cached_inf, field.cached_sup
    if mask.grid != field.grid:
        raise DomainError("mask lives on a different grid than the exponent")
    if not mask.any():
        raise DomainError("exponent bounds over an empty mask are undefined")
    vals = field.values[mask.where]
    return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class LogHolderReport:
    """Result of the pairwise oscillation sweep.

    ``constant`` is the smallest c with ``|p(x)-p(y)| <= c / log(e + 1/|x-y|)``
    over the pairs actually inspected.  When the grid exceeds the pair
    budget the sweep covers a deterministic strided node subsample plus all
    axis-adjacent pairs, and ``exhaustive`` is False.
    """

    constant: float
    pair_count: int
    exhaustive: bool
    stride: int


def log_holder_report(field: ExponentField, pair_budget: int = PAIR_BUDGET) -> LogHolderReport:
    grid = field.grid
    n = grid.node_count
    if n < 2:
        raise DomainError("log-Hoelder diagnostics need at least 2 nodes")
    max_nodes = max(2, int(math.floor((1 + math.sqrt(1 + 8 * pair_budget)) / 2)))
    stride = 1 if n <= max_nodes else int(math.ceil(n / max_nodes))
    points = grid.points()
    vals = field.values.ravel()
    if stride > 1:
        points = points[::stride]
        vals = vals[::stride]
    c = 0.0
    pairs = 0
    if len(points) >= 2:
        dist = pdist(points)
        dp = pdist(vals[:, None], metric="cityblock")
        pos = dist > 0
        if pos.any():
            c = float(np.max(dp[pos] * np.log(np.e + 1.0 / dist[pos])))
        pairs = int(pos.sum())
    if stride > 1:
        # adjacent pairs capture the h-scale oscillation a subsample can miss
        adj_factor = math.log(math.e + 1.0 / grid.h)
        for axis in range(grid.dim):
            jumps = np.abs(np.diff(field.values, axis=axis))
            if jumps.size:
                c = max(c, float(jumps.max()) * adj_factor)
                pairs += jumps.size
    return LogHolderReport(constant=c, pair_count=pairs, exhaustive=stride == 1, stride=stride)


def log_holder_constant(field: ExponentField, pair_budget: int = PAIR_BUDGET) -> float:
    """Smallest empirical log-Hoelder constant of the sampled exponent."""
    return log_holder_report(field, pair_budget).constant


@dataclass(frozen=True)
class StrongLogHolderReport:
    holds: bool
    worst_point: tuple[float, ...] | None
    worst_limit_estimate: float
    estimates: tuple = ()


def strong_log_holder_report(
    field: ExponentField,
    tol: float,
    eq_tol: float = DEFAULT_EQ_TOL,
    tail: int = 2,
    point_budget: int = 256,
) -> StrongLogHolderReport:
    """Probe ``|p(x) - 1| * log(1/|x - y|) -> 0`` at points where p = 1.

    For each such node ``y`` the quantity is maximized over dyadic annuli
    ``2**-(k+1) < |x - y| <= 2**-k`` and the limit is estimated from the
    ``tail`` smallest resolvable annuli.  The condition holds when every
    estimate stays below ``tol``; an empty p = 1 region holds vacuously.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    grid = field.grid
    y_mask = field.values <= 1.0 + eq_tol
    y_idx = np.argwhere(y_mask)
    if y_idx.shape[0] == 0:
        return StrongLogHolderReport(True, None, 0.0)
    if y_idx.shape[0] > point_budget:
        step = int(math.ceil(y_idx.shape[0] / point_budget))
        y_idx = y_idx[::step]
    points = grid.points().reshape(grid.shape + (grid.dim,))
    all_points = grid.points()
    dev = np.abs(field.values.ravel() - 1.0)
    k_max = int(math.floor(math.log2(1.0 / (2.0 * grid.h))))
    radii = [2.0**-k for k in range(1, max(2, k_max + 1))]
    estimates = []
    for idx in y_idx:
        y_pt = points[tuple(idx)]
        d = np.linalg.norm(all_points - y_pt, axis=1)
        annulus_max = []
        for r in radii:
            sel = (d > r / 2) & (d <= r)
            if not sel.any():
                continue
            with np.errstate(divide="ignore"):
                q = dev[sel] * np.log(1.0 / d[sel])
            annulus_max.append(float(q.max()))
        est = max(annulus_max[-tail:]) if annulus_max else 0.0
        estimates.append((tuple(float(v) for v in y_pt), est))
    worst_point, worst = max(estimates, key=lambda t: t[1])
    return StrongLogHolderReport(
        holds=worst < tol,
        worst_point=worst_point,
        worst_limit_estimate=worst,
        estimates=tuple(estimates),
    )


def one_region(field: ExponentField, eq_tol: float = DEFAULT_EQ_TOL) -> RegionMask:
    """Mask of nodes where the exponent equals 1 within ``eq_tol``."""
    if eq_tol < 0:
        raise DomainError("equality tolerance must be nonnegative")
    return RegionMask(field.grid, field.values <= 1.0 + eq_tol)
