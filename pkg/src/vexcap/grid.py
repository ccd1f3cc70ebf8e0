"""Regular grids, node masks, grid functions, dilation, and mollification.

A :class:`Grid` is an axis-aligned node lattice in one or two dimensions
with a single spacing ``h`` shared by all axes.  Node ordering is row-major
(the first axis varies slowest), quadrature assigns the midpoint-style
weight ``h**dim`` to every node, and boundary handling for smoothing and
differencing extends fields by their nearest value so that constants are
preserved everywhere.

The plain-text grid-function file format also lives here::

    vexcap-gf v1 dim=<d> nx=<..> [ny=<..>] h=<h> x0=<..> [y0=<..>]
    <whitespace separated node values in row-major order>
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import ConfigError, DomainError

Extent = tuple[float, float]

#: slack used when comparing float distances against radii measured in h
_DIST_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Axis-aligned node lattice with uniform spacing ``h``.

    Nodes along axis ``k`` sit at ``extents[k][0] + i*h``; the last node
    reproduces the upper extent within ``h/2``.
    """

    dim: int
    extents: tuple[Extent, ...]
    h: float
    shape: tuple[int, ...]

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def weight(self) -> float:
        """Quadrature weight per node."""
        return self.h**self.dim

    def axis_coords(self, axis: int) -> np.ndarray:
        lo = self.extents[axis][0]
        return lo + self.h * np.arange(self.shape[axis])

    def coords(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcast to the grid shape."""
        axes = [self.axis_coords(k) for k in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All node coordinates as an ``(node_count, dim)`` array."""
        return np.stack([c.ravel() for c in self.coords()], axis=1)

    def boundary_distance(self) -> np.ndarray:
        """Distance from each node to the hull of the node lattice."""
        dist = np.full(self.shape, np.inf)
        for k, c in enumerate(self.coords()):
            lo = self.extents[k][0]
            hi = lo + (self.shape[k] - 1) * self.h
            dist = np.minimum(dist, np.minimum(c - lo, hi - c))
        return dist

    def min_extent_length(self) -> float:
        return min((self.shape[k] - 1) * self.h for k in range(self.dim))


def build_grid(dim: int, extents, h: float) -> Grid:
    """Create a grid covering ``extents`` with spacing ``h``.

    ``extents`` is ``(lo, hi)`` in 1D or a sequence of two such pairs in 2D.
    Each extent must span at least ``2*h``.
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim!r}")
    if not (isinstance(h, (int, float)) and math.isfinite(h) and h > 0):
        raise ConfigError(f"spacing h must be a positive finite real, got {h!r}")
    ext = _normalize_extents(dim, extents)
    shape = []
    for lo, hi in ext:
        length = hi - lo
        if not math.isfinite(length) or length < 2 * h - 1e-12 * h:
            raise ConfigError(
                f"extent ({lo}, {hi}) is degenerate for h={h}: need length >= 2*h"
            )
        n = int(round(length / h)) + 1
        if abs(lo + (n - 1) * h - hi) > h / 2 + 1e-12 * h:
            raise ConfigError(
                f"extent ({lo}, {hi}) is not reproduced within h/2 by spacing {h}"
            )
        shape.append(n)
    return Grid(dim=dim, extents=ext, h=float(h), shape=tuple(shape))


def _normalize_extents(dim, extents) -> tuple[Extent, ...]:
    ext = list(extents)
    if dim == 1 and len(ext) == 2 and not hasattr(ext[0], "__len__"):
        ext = [tuple(ext)]
    if len(ext) != dim:
        raise ConfigError(f"expected {dim} extent pair(s), got {extents!r}")
    out = []
    for pair in ext:
        lo, hi = (float(pair[0]), float(pair[1]))
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise ConfigError(f"extent {pair!r} must be a finite increasing pair")
        out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class RegionMask:
    """Boolean subset of grid nodes.  Treated as immutable."""

    grid: Grid
    where: np.ndarray

    def __post_init__(self):
        if self.where.shape != self.grid.shape:
            raise DomainError("mask shape does not match its grid")
        if self.where.dtype != np.bool_:
            object.__setattr__(self, "where", self.where.astype(bool))

    @classmethod
    def empty(cls, grid: Grid) -> "RegionMask":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "RegionMask":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.where.sum())

    def any(self) -> bool:
        return bool(self.where.any())

    def is_subset(self, other: "RegionMask") -> bool:
        self._check_same_grid(other)
        return bool((~self.where | other.where).all())

    def __or__(self, other: "RegionMask") -> "RegionMask":
        self._check_same_grid(other)
        return RegionMask(self.grid, self.where | other.where)

    def __and__(self, other: "RegionMask") -> "RegionMask":
        self._check_same_grid(other)
        return RegionMask(self.grid, self.where & other.where)

    def __sub__(self, other: "RegionMask") -> "RegionMask":
        self._check_same_grid(other)
        return RegionMask(self.grid, self.where & ~other.where)

    def __invert__(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.where)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RegionMask)
            and self.grid == other.grid
            and bool(np.array_equal(self.where, other.where))
        )

    def _check_same_grid(self, other):
        if self.grid != other.grid:
            raise DomainError("masks live on different grids")


@dataclass(frozen=True)
class GridFunction:
    """Scalar field sampled at grid nodes.  Treated as immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError("value shape does not match the grid")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        """Sample ``fn(x)`` (1D) or ``fn(x, y)`` (2D) at the nodes."""
        vals = np.asarray(fn(*grid.coords()), dtype=float)
        return cls(grid, np.broadcast_to(vals, grid.shape).copy())

    @classmethod
    def indicator(cls, mask: RegionMask) -> "GridFunction":
        return cls(mask.grid, mask.where.astype(float))

    def maximum(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, np.maximum(self.values, other.values))

    def minimum(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, np.minimum(self.values, other.values))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def _check_same_grid(self, other):
        if self.grid != other.grid:
            raise DomainError("grid functions live on different grids")


# ---------------------------------------------------------------------------
# shape rasterizers
# ---------------------------------------------------------------------------

def interval_mask(grid: Grid, lo: float, hi: float) -> RegionMask:
    if grid.dim != 1:
        raise DomainError("interval masks require a 1D grid")
    x = grid.coords()[0]
    tol = _DIST_RTOL * grid.h
    return RegionMask(grid, (x >= lo - tol) & (x <= hi + tol))


def box_mask(grid: Grid, xlo: float, xhi: float, ylo: float, yhi: float) -> RegionMask:
    if grid.dim != 2:
        raise DomainError("box masks require a 2D grid")
    x, y = grid.coords()
    tol = _DIST_RTOL * grid.h
    return RegionMask(
        grid,
        (x >= xlo - tol) & (x <= xhi + tol) & (y >= ylo - tol) & (y <= yhi + tol),
    )


def ball_mask(grid: Grid, center, radius: float) -> RegionMask:
    """Nodes within Euclidean distance ``radius`` of ``center``."""
    if radius < 0:
        raise DomainError("ball radius must be nonnegative")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.dim:
        raise DomainError(f"center must have {grid.dim} coordinate(s)")
    d2 = np.zeros(grid.shape)
    for k, c in enumerate(grid.coords()):
        d2 = d2 + (c - center[k]) ** 2
    tol = _DIST_RTOL * grid.h
    return RegionMask(grid, d2 <= (radius + tol) ** 2)


# ---------------------------------------------------------------------------
# dilation and mollification
# ---------------------------------------------------------------------------

def dilate_mask(mask: RegionMask, radius: float) -> RegionMask:
    """All nodes within Euclidean distance ``radius`` of the mask.

    ``dilate_mask(m, 0) == m``; the result is monotone both in the mask and
    in the radius.  Distances are exact grid Euclidean distances.
    """
    if radius < 0:
        raise DomainError("dilation radius must be nonnegative")
    if not mask.any() or radius == 0.0:
        return RegionMask(mask.grid, mask.where.copy())
    inv = ~mask.where
    if not inv.any():
        return RegionMask(mask.grid, mask.where.copy())
    dist = ndimage.distance_transform_edt(inv, sampling=mask.grid.h)
    return RegionMask(mask.grid, dist <= radius * (1.0 + _DIST_RTOL))


def _bump_kernel(grid: Grid, delta: float) -> np.ndarray:
    """Discrete polynomial bump ``(1 - (r/delta)**2)**2`` truncated at
    ``delta`` and renormalized to unit mass on the lattice."""
    m = int(math.floor(delta / grid.h))
    offsets = grid.h * np.arange(-m, m + 1)
    if grid.dim == 1:
        r2 = offsets**2
    else:
        ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
        r2 = ox**2 + oy**2
    w = np.maximum(0.0, 1.0 - r2 / delta**2) ** 2
    total = w.sum()
    if total <= 0.0:  # delta below resolution: identity kernel
        w = np.zeros_like(w)
        w[(m,) * grid.dim] = 1.0
        return w
    return w / total


def mollify(u: GridFunction, delta: float) -> GridFunction:
    """Smooth ``u`` by discrete convolution with a compactly supported bump
    of radius ``delta``.

    The kernel has unit mass after discrete normalization and the field is
    extended by its nearest value at the boundary, so constants are fixed
    points and the output range stays inside ``[min u, max u]``.
    ``delta = 0`` is the identity.
    """
    if delta < 0:
        raise DomainError("mollification radius must be nonnegative")
    grid = u.grid
    if delta >= grid.min_extent_length() / 2:
        raise DomainError(
            f"mollification radius {delta} is too large for extents of length "
            f"{grid.min_extent_length()}"
        )
    m = int(math.floor(delta / grid.h))
    if delta == 0.0 or m == 0:
        return GridFunction(grid, u.values.copy())
    kernel = _bump_kernel(grid, delta)
    padded = np.pad(u.values, m, mode="edge")
    out = signal.fftconvolve(padded, kernel, mode="valid")
    lo, hi = float(u.values.min()), float(u.values.max())
    np.clip(out, lo, hi, out=out)
    return GridFunction(grid, out)


# ---------------------------------------------------------------------------
# grid-function files
# ---------------------------------------------------------------------------

_GF_MAGIC = "vexcap-gf"
_GF_VERSION = "v1"


def write_grid_function(path, u: GridFunction) -> None:
    grid = u.grid
    fields = [f"dim={grid.dim}", f"nx={grid.shape[0]}"]
    if grid.dim == 2:
        fields.append(f"ny={grid.shape[1]}")
    fields.append(f"h={float(grid.h)!r}")
    fields.append(f"x0={float(grid.extents[0][0])!r}")
    if grid.dim == 2:
        fields.append(f"y0={float(grid.extents[1][0])!r}")
    lines = [f"{_GF_MAGIC} {_GF_VERSION} " + " ".join(fields)]
    flat = u.values.ravel()
    for start in range(0, flat.size, 8):
        lines.append(" ".join(repr(float(v)) for v in flat[start : start + 8]))
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def read_grid_function(path) -> GridFunction:
    with open(path, "r", encoding="ascii") as handle:
        text = handle.read()
    lines = text.splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty grid-function file")
    header = lines[0].split()
    if len(header) < 2 or header[0] != _GF_MAGIC or header[1] != _GF_VERSION:
        raise ConfigError(f"{path}: not a {_GF_MAGIC} {_GF_VERSION} file")
    kv = {}
    for token in header[2:]:
        if "=" not in token:
            raise ConfigError(f"{path}: malformed header token {token!r}")
        key, _, val = token.partition("=")
        kv[key] = val
    try:
        dim = int(kv["dim"])
        nx = int(kv["nx"])
        h = float(kv["h"])
        x0 = float(kv["x0"])
        ny = int(kv["ny"]) if dim == 2 else None
        y0 = float(kv["y0"]) if dim == 2 else None
    except KeyError as exc:
        raise ConfigError(f"{path}: missing header field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: bad header value ({exc})") from exc
    unknown = set(kv) - {"dim", "nx", "ny", "h", "x0", "y0"}
    if unknown:
        raise ConfigError(f"{path}: unknown header field(s) {sorted(unknown)}")
    if dim == 1:
        extents = ((x0, x0 + (nx - 1) * h),)
        shape = (nx,)
    elif dim == 2:
        extents = ((x0, x0 + (nx - 1) * h), (y0, y0 + (ny - 1) * h))
        shape = (nx, ny)
    else:
        raise ConfigError(f"{path}: dim must be 1 or 2, got {dim}")
    grid = Grid(dim=dim, extents=extents, h=h, shape=shape)
    tokens = " ".join(lines[1:]).split()
    try:
        values = np.array(tokens, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric value in body ({exc})") from exc
    if values.size != grid.node_count:
        raise ConfigError(
            f"{path}: expected {grid.node_count} values, found {values.size}"
        )
    return GridFunction(grid, values.reshape(shape))
