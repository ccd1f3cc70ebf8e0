"""Variable-exponent Lebesgue modular, Luxemburg norm, and the first-order
Sobolev modular."""

import math
from dataclasses import dataclass

import numpy as np

from . import bv
from ._num import UNIT_ROOT_RESIDUAL, pow_energy, unit_root
from .errors import DomainError
from .exponent import ExponentField
from .grid import GridFunction, RegionMask


@dataclass(frozen=True)
class EnergyBreakdown:
    """Itemized value of one energy evaluation.

    ``total`` is always the exact float sum of the three parts.
    """

    lebesgue_part: float
    gradient_part: float
    tv_part: float
    total: float

    def __post_init__(self):
        parts = (self.lebesgue_part, self.gradient_part, self.tv_part, self.total)
        if not all(math.isfinite(v) and v >= 0.0 for v in parts):
            raise DomainError("energy parts must be finite and nonnegative")
        s = self.lebesgue_part + self.gradient_part + self.tv_part
        if abs(self.total - s) > 1e-14 * max(1.0, abs(s)):
            raise DomainError("energy total does not match the sum of its parts")

    @classmethod
    def from_parts(cls, lebesgue_part=0.0, gradient_part=0.0, tv_part=0.0) -> "EnergyBreakdown":
        return cls(
            lebesgue_part=float(lebesgue_part),
            gradient_part=float(gradient_part),
            tv_part=float(tv_part),
            total=float(lebesgue_part) + float(gradient_part) + float(tv_part),
        )

    def as_dict(self) -> dict:
        return {
            "lebesgue_part": self.lebesgue_part,
            "gradient_part": self.gradient_part,
            "tv_part": self.tv_part,
            "total": self.total,
        }


def modular(u: GridFunction, field: ExponentField, mask: RegionMask | None = None) -> float:
    """``sum over mask of |u(x)|**p(x) * h**dim``."""
    if field.grid != u.grid:
        raise DomainError("exponent lives on a different grid")
    dens = pow_energy(np.abs(u.values), field.values)
    if mask is not None:
        if mask.grid != u.grid:
            raise DomainError("mask lives on a different grid")
        dens = dens[mask.where]
    return float(dens.sum() * u.grid.weight)


def luxemburg_norm(
    u: GridFunction, field: ExponentField, residual_tol: float = UNIT_ROOT_RESIDUAL
) -> float:
    """Luxemburg norm ``inf{lam > 0 : modular(u/lam) <= 1}``.

    Zero for the zero function; otherwise the unique scaling at which the
    modular hits 1, located by bracketing plus bisection until the residual
    ``|modular(u/lam) - 1|`` is at most ``residual_tol``.
    """
    if not np.isfinite(u.values).all():
        raise DomainError("Luxemburg norm requires finite values")
    if field.grid != u.grid:
        raise DomainError("exponent lives on a different grid")
    a = np.abs(u.values)
    if not a.any():
        return 0.0
    p = field.values
    w = u.grid.weight

    def rho(lam):
        return float((pow_energy(a / lam, p)).sum() * w)

    return unit_root(rho, residual_tol=residual_tol)


def sobolev_modular(u: GridFunction, field: ExponentField, mode: str = bv.ISOTROPIC) -> EnergyBreakdown:
    """Lebesgue modular of ``u`` plus the modular of its gradient magnitude."""
    return EnergyBreakdown.from_parts(
        lebesgue_part=modular(u, field),
        gradient_part=bv.gradient_energy(u, field, mode=mode),
        tv_part=0.0,
    )
