"""Small-time regimes of the optimal allocation.

As ``t -> 0`` with ``|log t| / x -> rho``, the fraction ``K/x`` settles on a
limit that depends on which interval ``[1/C(j+1, 2), 1/C(j, 2))`` contains
``rho``.  This module evaluates those limits, locates the regime of a ratio
or of a point ``(x, t)``, and checks the recursion that links regime ``j+1``
to regime ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "RegionLabel",
    "RecursionCheck",
    "region_bounds",
    "allocation_limit",
    "survival_limit",
    "region_for_ratio",
    "region_of_point",
    "asymptotic_allocation",
    "check_region_recursion",
]


def region_bounds(j: int) -> tuple[float, float]:
    """``(lower, upper)`` of the ratio interval of regime ``j``; upper is inf for j = 1."""
    if j < 1:
        raise DomainError(f"regime index must be >= 1, got {j}")
    lower = 2.0 / ((j + 1) * j)
    upper = math.inf if j == 1 else 2.0 / (j * (j - 1))
    return lower, upper


@dataclass(frozen=True)
class RegionLabel:
    j: int
    rho: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower <= self.rho < self.upper):
            raise DomainError(f"rho={self.rho} outside [{self.lower}, {self.upper})")


def allocation_limit(j: int, rho: float) -> float:
    """Limit of ``K/x`` (and of ``|log(1-H)|/x``) in regime ``j``: ``1/j + rho(j-1)/2``."""
    return 1.0 / j + rho * (j - 1) / 2.0


def survival_limit(j: int, rho: float) -> float:
    """Limit of ``|log(1-P)|/x`` in regime ``j``: ``1/j + rho(j+1)/2``."""
    return 1.0 / j + rho * (j + 1) / 2.0


def _in_region(j: int, rho: float, tol: float = 0.0) -> bool:
    lower, upper = region_bounds(j)
    return lower * (1.0 - tol) <= rho < upper * (1.0 + tol)


def region_for_ratio(rho: float) -> RegionLabel:
    if not (rho > 0) or math.isinf(rho):
        raise DomainError(f"ratio must be positive and finite, got {rho!r}")
    # j(j+1)/2 >= 1/rho at the smallest valid j; the estimate is corrected
    # by one step either way to absorb rounding in the square root
    j = max(1, math.ceil((math.sqrt(1.0 + 8.0 / rho) - 1.0) / 2.0))
    while j > 1 and _in_region(j - 1, rho):
        j -= 1
    while not _in_region(j, rho):
        j += 1
    lower, upper = region_bounds(j)
    return RegionLabel(j, rho, lower, upper)


def region_of_point(x: float, t: float) -> RegionLabel:
    """Regime of the ratio ``|log t| / x``; only meaningful for ``0 < t < 1``."""
    if not (x > 0):
        raise DomainError(f"x must be positive, got {x!r}")
    if not (0.0 < t < 1.0):
        raise DomainError(f"regions are defined for 0 < t < 1, got t={t!r}")
    return region_for_ratio(-math.log(t) / x)


def asymptotic_allocation(x: float, t: float) -> float:
    """Small-time approximation ``x/j + (j-1)|log t|/2`` of the optimal allocation."""
    j = region_of_point(x, t).j
    return x / j + 0.5 * (j - 1) * -math.log(t)


@dataclass(frozen=True)
class RecursionCheck:
    rho_next: float
    below_fraction: bool      # rho < allocation_limit(j+1, rho)
    next_in_region: bool      # rho_next lies in regime j
    survival_matches: bool    # survival_limit(j, rho_next) == 1/(1/alloc - 1)
    sum_matches: bool         # alloc(j+1, rho) + rho == survival_limit(j+1, rho)

    @property
    def all_ok(self) -> bool:
        return self.below_fraction and self.next_in_region and self.survival_matches and self.sum_matches


def check_region_recursion(j: int, rho: float, tol: float = 1e-12) -> RecursionCheck:
    """Check the identities carrying regime ``j+1`` into regime ``j``.

    After firing the limiting fraction at a point whose ratio lies in regime
    ``j+1``, the ratio of what is left is ``rho / (1 - alloc)`` and must lie
    in regime ``j``.  Equalities and the interval endpoints are compared with
    relative tolerance ``tol``; a ratio exactly on a lower endpoint maps onto
    the next lower endpoint, which rounding can otherwise push out.
    """
    if j < 1:
        raise DomainError(f"j must be >= 1, got {j}")
    if not _in_region(j + 1, rho):
        lower, upper = region_bounds(j + 1)
        raise DomainError(f"rho={rho} not in [{lower}, {upper})")
    alloc = allocation_limit(j + 1, rho)
    # 1 - alloc in factored form; near the top of the interval the direct
    # difference loses most of its digits
    rest = j * (2.0 - rho * (j + 1)) / (2.0 * (j + 1))
    rho_next = rho / rest
    lhs = survival_limit(j, rho_next)
    rhs = alloc / rest          # 1 / (1/alloc - 1)
    s = alloc + rho
    target = survival_limit(j + 1, rho)
    return RecursionCheck(
        rho_next=rho_next,
        below_fraction=rho < alloc,
        next_in_region=_in_region(j, rho_next, tol),
        survival_matches=math.isclose(lhs, rhs, rel_tol=tol, abs_tol=0.0),
        sum_matches=math.isclose(s, target, rel_tol=tol, abs_tol=0.0),
    )
