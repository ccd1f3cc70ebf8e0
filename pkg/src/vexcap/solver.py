"""Convex minimization engine for capacity-type energies.

The solver minimizes ``modular(u) + gradient_energy(u)`` subject to the box
``0 <= u <= 1`` and ``u = 1`` on a pinned node set, using a primal-dual
(Chambolle-Pock style) splitting: the dual variable lives on the gradient
slots and is updated through the Moreau identity from the scalar power
prox, the primal step applies the power prox followed by exact projection
onto the constraints.  Nonsmooth exponents (p = 1) need no smoothing.

Certificates report a relative primal-dual gap computed from an explicit
dual objective; the returned iterate is the best (lowest energy) feasible
iterate seen, so the certified energy trace is nonincreasing.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import bv
from .errors import DomainError
from .exponent import ExponentField
from .grid import GridFunction, RegionMask
from .lebesgue import EnergyBreakdown, modular

_P_ONE_TOL = 1e-9
_P_TWO_TOL = 1e-12


@dataclass
class SolverConfig:
    """Primal-dual solver parameters.

    ``tau`` and ``sigma`` default to ``0.99 / L`` with ``L`` the forward
    difference operator bound ``sqrt(4*dim)/h``; explicit values must keep
    ``tau * sigma * L**2 <= 1``.
    """

    max_iters: int = 20000
    tol_gap: float = 1e-7
    tol_change: float = 1e-10
    tau: float | None = None
    sigma: float | None = None
    seed: int = 0
    deterministic: bool = True
    gap_check_every: int = 25
    mode: str = bv.ISOTROPIC

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        for name in ("tau", "sigma"):
            val = getattr(self, name)
            if val is not None and not (val > 0):
                raise DomainError(f"{name} must be positive when given")
        if self.tol_gap <= 0 or self.tol_change <= 0:
            raise DomainError("tolerances must be positive")
        if self.mode not in bv.MODES:
            raise DomainError(f"mode must be one of {bv.MODES}")


@dataclass
class SolveCertificate:
    iterations: int
    final_gap: float
    final_change: float
    converged: bool
    energy: EnergyBreakdown
    energy_trace: list = dc_field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_gap": self.final_gap,
            "final_change": self.final_change,
            "converged": self.converged,
            "energy": self.energy.as_dict(),
        }


# ---------------------------------------------------------------------------
# scalar power prox
# ---------------------------------------------------------------------------

def prox_power(z, weight, p, init=None):
    """Minimizer of ``weight * |t|**p + (t - z)**2 / 2``.

    Closed forms handle p = 1 (soft threshold) and p = 2; other exponents
    use a bracketed Newton iteration on the optimality condition
    ``t + weight*p*t**(p-1) = |z|`` driven to residual ~1e-14 per entry.
    Arrays broadcast; scalars in give a float back.  ``init`` optionally
    warm-starts the Newton branch with magnitudes of a previous solution.
    """
    scalar_in = np.ndim(z) == 0 and np.ndim(weight) == 0 and np.ndim(p) == 0
    z_arr, w_arr, p_arr = np.broadcast_arrays(
        np.asarray(z, float), np.asarray(weight, float), np.asarray(p, float)
    )
    if w_arr.size and w_arr.min() < 0:
        raise DomainError("prox weight must be nonnegative")
    if p_arr.size and p_arr.min() < 1:
        raise DomainError("prox exponent must be at least 1")
    sign = np.sign(z_arr)
    a = np.abs(z_arr)
    out = np.empty_like(z_arr)
    is1 = p_arr <= 1.0 + _P_ONE_TOL
    is2 = np.abs(p_arr - 2.0) <= _P_TWO_TOL
    gen = ~(is1 | is2)
    if is1.any():
        out[is1] = sign[is1] * np.maximum(a[is1] - w_arr[is1], 0.0)
    if is2.any():
        out[is2] = z_arr[is2] / (1.0 + 2.0 * w_arr[is2])
    if gen.any():
        m = a[gen]
        A = w_arr[gen] * p_arr[gen]
        pm1 = p_arr[gen] - 1.0
        if init is not None:
            s0 = np.clip(np.abs(np.broadcast_to(np.asarray(init, float), z_arr.shape)[gen]), 0.0, m)
            s = np.where(s0 > 0, s0, m)
        else:
            s = m.copy()
        out[gen] = sign[gen] * _power_root(s, A, pm1, m)
    return float(out) if scalar_in else out


def _power_root(s, A, pm1, m):
    """Solve ``s + A*s**pm1 = m`` for ``s`` in ``[0, m]`` entrywise.

    A few plain Newton steps clipped into ``[0, m]`` resolve warm-started
    entries; stragglers fall back to a bracketed Newton/bisection loop.
    """
    tol = 1e-14 * np.maximum(1.0, m)
    s = np.clip(s, 0.0, m)
    f = None
    for _ in range(4):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s_pm2 = s ** (pm1 - 1.0)
            s_pm1 = np.where(s > 0, s_pm2 * s, 0.0)
            f = s + A * s_pm1 - m
            if np.all(np.abs(f) <= tol):
                return s
            fp = 1.0 + A * pm1 * s_pm2
            step = s - f / fp
        s = np.clip(np.where(np.isfinite(step), step, 0.5 * m), 0.0, m)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s_pm1 = np.where(s > 0, s**pm1, 0.0)
        f = s + A * s_pm1 - m
    active = np.flatnonzero(np.abs(f) > tol)
    if active.size == 0:
        return s
    # Stragglers: safeguarded Newton on sig = log(s).  Near p = 1 the root can
    # sit hundreds of orders of magnitude below |z|, which linear bisection
    # cannot reach; the log parametrization makes those corners routine.
    ma = m[active]
    Aa = A[active]
    pa = pm1[active]
    sig_lo = np.full(active.size, -745.0)
    sig_hi = np.log(ma)
    with np.errstate(over="ignore"):
        f_lo = np.exp(sig_lo) + Aa * np.exp(pa * sig_lo) - ma
    resolvable = f_lo <= 0.0  # otherwise the root underflows; keep s = 0
    sig = np.where(s[active] > 0, np.log(np.maximum(s[active], 1e-300)), 0.5 * (sig_lo + sig_hi))
    sig = np.clip(sig, sig_lo, sig_hi)
    for _ in range(200):
        with np.errstate(over="ignore"):
            es = np.exp(sig)
            eps_ = Aa * np.exp(pa * sig)
            fa = es + eps_ - ma
        sig_hi = np.where(fa > 0, np.minimum(sig_hi, sig), sig_hi)
        sig_lo = np.where(fa < 0, np.maximum(sig_lo, sig), sig_lo)
        if np.all((np.abs(fa) <= tol[active]) | ~resolvable):
            break
        with np.errstate(over="ignore", invalid="ignore"):
            fp = es + pa * eps_
            step = sig - fa / fp
        good = np.isfinite(step) & (step > sig_lo) & (step < sig_hi)
        sig = np.where(good, step, 0.5 * (sig_lo + sig_hi))
    sa = np.where(resolvable, np.exp(sig), 0.0)
    s[active] = sa
    return s


def prox_optimality_residual(z, weight, p, t):
    """Residual of the subgradient condition ``z - t in weight*p*|t|**(p-1)*sign(t)``.

    At ``t = 0`` with p = 1 the subdifferential is the interval
    ``[-weight, weight]`` and the residual is the distance of ``z`` to it.
    """
    z_arr, w_arr, p_arr, t_arr = np.broadcast_arrays(
        np.asarray(z, float), np.asarray(weight, float),
        np.asarray(p, float), np.asarray(t, float),
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        grad = w_arr * p_arr * np.abs(t_arr) ** (p_arr - 1.0) * np.sign(t_arr)
    res = np.abs(z_arr - t_arr - np.where(t_arr != 0, grad, 0.0))
    at_zero = t_arr == 0.0
    is1 = p_arr <= 1.0 + _P_ONE_TOL
    soft_zero = at_zero & is1
    res = np.where(soft_zero, np.maximum(np.abs(z_arr) - w_arr, 0.0), res)
    hard_zero = at_zero & ~is1
    res = np.where(hard_zero, np.abs(z_arr), res)
    return res if res.ndim else float(res)


# ---------------------------------------------------------------------------
# forward differences and their adjoint on raw arrays
# ---------------------------------------------------------------------------

def _diff_forward(x: np.ndarray, h: float) -> list[np.ndarray]:
    comps = []
    for axis in range(x.ndim):
        g = np.zeros_like(x)
        lead = [slice(None)] * x.ndim
        lag = [slice(None)] * x.ndim
        lead[axis] = slice(1, None)
        lag[axis] = slice(None, -1)
        g[tuple(lag)] = (x[tuple(lead)] - x[tuple(lag)]) / h
        comps.append(g)
    return comps


def _diff_adjoint(ys: list[np.ndarray], h: float) -> np.ndarray:
    out = np.zeros_like(ys[0])
    for axis, y in enumerate(ys):
        lead = [slice(None)] * y.ndim
        lag = [slice(None)] * y.ndim
        lead[axis] = slice(1, None)
        lag[axis] = slice(None, -1)
        out[tuple(lag)] -= y[tuple(lag)] / h
        out[tuple(lead)] += y[tuple(lag)] / h
    return out


# ---------------------------------------------------------------------------
# conjugates for the duality gap
# ---------------------------------------------------------------------------

def _power_conjugate(s: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Convex conjugate of ``t -> |t|**p`` at ``s`` (p = 1 handled as a ball
    indicator with a small feasibility slack)."""
    out = np.zeros_like(s)
    is1 = p <= 1.0 + _P_ONE_TOL
    if is1.any():
        out[is1] = np.where(s[is1] <= 1.0 + 1e-9, 0.0, np.inf)
    rest = ~is1
    if rest.any():
        pr = p[rest]
        q = pr / (pr - 1.0)
        with np.errstate(over="ignore"):
            out[rest] = (pr - 1.0) * (s[rest] / pr) ** q
    return out


def _zero_order_conjugate(v: np.ndarray, w: float, p: np.ndarray, fixed: np.ndarray) -> float:
    """Conjugate of the zero-order term plus constraints at ``v``.

    Pinned nodes contribute ``v - w``; free nodes contribute
    ``max over t in [0,1] of v*t - w*t**p``.
    """
    total = float((v[fixed] - w).sum())
    free = ~fixed
    if free.any():
        vf = v[free]
        pf = p[free]
        is1 = pf <= 1.0 + _P_ONE_TOL
        vals = np.zeros_like(vf)
        if is1.any():
            vals[is1] = np.maximum(vf[is1] - w, 0.0)
        rest = ~is1
        if rest.any():
            vr = vf[rest]
            pr = pf[rest]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                t_star = (np.maximum(vr, 0.0) / (w * pr)) ** (1.0 / (pr - 1.0))
            t = np.clip(np.where(np.isfinite(t_star), t_star, 1.0), 0.0, 1.0)
            vals[rest] = vr * t - w * t**pr
        total += float(vals.sum())
    return total


def _dual_value(ys, p, w, h, fixed, mode) -> float:
    v = -_diff_adjoint(ys, h)
    g_conj = _zero_order_conjugate(v, w, p, fixed)
    if mode == bv.ISOTROPIC:
        m = np.sqrt(sum(y**2 for y in ys))
        f_conj_dens = _power_conjugate(m / w, p)
    else:
        f_conj_dens = sum(_power_conjugate(np.abs(y) / w, p) for y in ys)
    if not np.isfinite(f_conj_dens).all():
        return -np.inf
    return -(g_conj + w * float(f_conj_dens.sum()))


def _prox_grad_term(zs, weight, p, mode, warm):
    """Prox of the gradient energy density applied slotwise to ``zs``."""
    if mode == bv.ISOTROPIC:
        m = np.sqrt(sum(z**2 for z in zs))
        s = prox_power(m, weight, p, init=warm)
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(m > 0, s / np.where(m > 0, m, 1.0), 0.0)
        return [z * factor for z in zs], s
    outs = []
    warms = []
    for k, z in enumerate(zs):
        t = prox_power(z, weight, p, init=None if warm is None else warm[k])
        outs.append(t)
        warms.append(np.abs(t))
    return outs, warms


def _make_dual_step(p, w, sigma, mode):
    """Map ``zs -> prox of sigma*F_conj`` (via Moreau), specialized for
    constant exponents where the update collapses to a closed form."""
    p_const = float(p.flat[0]) if p.min() == p.max() else None
    if p_const is not None and abs(p_const - 2.0) <= _P_TWO_TOL:
        # radial quadratic: y = z * (2w/sigma) / (1 + 2w/sigma), componentwise
        c = (2.0 * w / sigma) / (1.0 + 2.0 * w / sigma)

        def step(zs, warm):
            return [z * c for z in zs], warm

        return step
    if p_const is not None and p_const <= 1.0 + _P_ONE_TOL:
        if mode == bv.ISOTROPIC:

            def step(zs, warm):
                m = np.sqrt(sum(z**2 for z in zs))
                scale = np.minimum(1.0, w / np.maximum(m, 1e-300))
                return [z * scale for z in zs], warm

        else:

            def step(zs, warm):
                return [np.clip(z, -w, w) for z in zs], warm

        return step
    dual_weight = w / sigma

    def step(zs, warm):
        proxed, warm = _prox_grad_term([z / sigma for z in zs], dual_weight, p, mode, warm)
        return [z - sigma * t for z, t in zip(zs, proxed)], warm

    return step


def _make_primal_prox(p, w, tau):
    """Map ``v -> prox of tau*G`` before the box/pin projection."""
    p_const = float(p.flat[0]) if p.min() == p.max() else None
    if p_const is not None and abs(p_const - 2.0) <= _P_TWO_TOL:
        c = 1.0 / (1.0 + 2.0 * tau * w)

        def prox(v, warm):
            return v * c, warm

        return prox
    if p_const is not None and p_const <= 1.0 + _P_ONE_TOL:

        def prox(v, warm):
            return np.sign(v) * np.maximum(np.abs(v) - tau * w, 0.0), warm

        return prox

    def prox(v, warm):
        t = prox_power(v, tau * w, p, init=warm)
        return t, np.abs(t)

    return prox


def objective_energy(u: GridFunction, field: ExponentField, mode: str = bv.ISOTROPIC) -> float:
    """The capacity objective ``modular(u) + gradient_energy(u)``."""
    return modular(u, field) + bv.gradient_energy(u, field, mask=None, mode=mode)


def minimize_capacity_energy(
    field: ExponentField, fixed_one: RegionMask, cfg: SolverConfig | None = None
) -> tuple[GridFunction, SolveCertificate]:
    """Minimize the capacity energy over ``0 <= u <= 1`` with ``u = 1`` pinned.

    Returns the best feasible iterate and a certificate whose relative gap
    bounds the suboptimality of that iterate.  Non-convergence within
    ``max_iters`` is reported through ``converged=False``; the iterate is
    still returned.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    grid = field.grid
    if fixed_one.grid != grid:
        raise DomainError("pinned mask lives on a different grid than the exponent")
    h = grid.h
    w = grid.weight
    p = field.values
    fixed = fixed_one.where
    L = math.sqrt(4.0 * grid.dim) / h
    # Unequal default steps: the primal lives on O(1) box-constrained values
    # while the dual lives on slots of size O(weight * p * |grad u|**(p-1)),
    # so balancing the step ratio by the quadrature weight converges orders
    # of magnitude faster than tau = sigma while keeping the operator bound
    # tau * sigma * L**2 <= 1 intact.
    beta = max(1.0, 0.25 / w)
    tau = cfg.tau if cfg.tau is not None else 0.99 * beta / L
    sigma = cfg.sigma if cfg.sigma is not None else 0.99 / (beta * L)
    if tau * sigma * L**2 > 1.0 + 1e-9:
        raise DomainError("step sizes violate tau * sigma * L**2 <= 1")

    x = fixed.astype(float)
    xbar = x.copy()
    ys = [np.zeros_like(x) for _ in range(grid.dim)]
    warm = None
    warm_primal = None
    dual_step = _make_dual_step(p, w, sigma, cfg.mode)
    primal_prox = _make_primal_prox(p, w, tau)

    def energy(arr):
        return objective_energy(GridFunction(grid, arr), field, cfg.mode)

    j_best = energy(x)
    x_best = x.copy()
    d_best = -np.inf
    trace = [j_best]
    x_prev_check = x.copy()
    gap = np.inf
    change = np.inf
    converged = False
    iterations = 0

    for k in range(1, cfg.max_iters + 1):
        iterations = k
        gx = _diff_forward(xbar, h)
        zs = [y + sigma * g for y, g in zip(ys, gx)]
        ys, warm = dual_step(zs, warm)
        v = x - tau * _diff_adjoint(ys, h)
        xn, warm_primal = primal_prox(v, warm_primal)
        np.clip(xn, 0.0, 1.0, out=xn)
        xn[fixed] = 1.0
        xbar = 2.0 * xn - x
        x = xn
        if k <= 2 or k % cfg.gap_check_every == 0 or k == cfg.max_iters:
            j_now = energy(x)
            if j_now < j_best:
                j_best = j_now
                x_best = x.copy()
            trace.append(j_best)
            d_now = _dual_value(ys, p, w, h, fixed, cfg.mode)
            d_best = max(d_best, d_now)
            gap = (j_best - d_best) / max(1.0, abs(j_best))
            scale = max(1.0, float(np.abs(x).max()))
            change = float(np.abs(x - x_prev_check).max()) / scale
            x_prev_check = x.copy()
            if gap <= cfg.tol_gap or change <= cfg.tol_change:
                converged = True
                break

    energy_parts = EnergyBreakdown.from_parts(
        lebesgue_part=modular(GridFunction(grid, x_best), field),
        gradient_part=bv.gradient_energy(GridFunction(grid, x_best), field, mask=None, mode=cfg.mode),
        tv_part=0.0,
    )
    cert = SolveCertificate(
        iterations=iterations,
        final_gap=float(gap),
        final_change=float(change),
        converged=converged,
        energy=energy_parts,
        energy_trace=trace,
    )
    return GridFunction(grid, x_best), cert
