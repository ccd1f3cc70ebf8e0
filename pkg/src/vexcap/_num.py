"""Small numerical kernels shared by the energy modules.

Two things live here: the pointwise power map used by every modular-type
sum, and the monotone root finder that turns modulars into Luxemburg-style
norms.  Both are deliberately free of grid types so they can be reused on
raw arrays.
"""

import numpy as np

#: residual target for the Luxemburg-type unit-level root
UNIT_ROOT_RESIDUAL = 1e-10


def pow_energy(base, p):
    """Elementwise ``base**p`` for ``base >= 0``, with exact handling of the
    edges that matter for modular sums: zero bases contribute exactly zero
    and unit exponents reduce to the plain value.

    ``base`` and ``p`` broadcast against each other.
    """
    base = np.asarray(base, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.ndim == 0 and p == 1.0:
        return base.copy() if base is not None else base
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(base > 0.0, np.exp(p * np.log(np.where(base > 0.0, base, 1.0))), 0.0)
    if p.ndim > 0:
        ones = p == 1.0
        if ones.any():
            out = np.where(ones, base, out)
    return out


def weighted_power_sum(base, p, weight):
    """``weight * sum(base**p)`` over the whole array."""
    return float(weight * pow_energy(base, p).sum())


def unit_root(rho, residual_tol=UNIT_ROOT_RESIDUAL, lo=2.0**-40, hi=2.0**40, max_iter=600):
    """Solve ``rho(lam) = 1`` for a continuous, strictly decreasing ``rho``.

    The bracket starts at ``[2**-40, 2**40]`` and is expanded geometrically
    when the root falls outside; bisection then runs in log space until the
    residual ``|rho(lam) - 1|`` drops below ``residual_tol``.  Returns 0.0
    when ``rho`` vanishes identically (checked at lam = 1).
    """
    if rho(1.0) == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        f_lo = rho(lo)
        expansions = 0
        while f_lo < 1.0 and expansions < 12:
            lo /= 2.0**20
            f_lo = rho(lo)
            expansions += 1
        f_hi = rho(hi)
        expansions = 0
        while f_hi > 1.0 and expansions < 12:
            hi *= 2.0**20
            f_hi = rho(hi)
            expansions += 1
        best = np.sqrt(lo * hi)
        best_res = np.inf
        for _ in range(max_iter):
            mid = np.sqrt(lo * hi)
            val = rho(mid)
            res = abs(val - 1.0)
            if res < best_res:
                best, best_res = mid, res
            if res <= residual_tol:
                return float(mid)
            if val > 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= np.finfo(float).eps * hi:
                break
    return float(best)
