"""Closed-form pieces of the continuous bomber model.

The bomber holds an amount ``x`` of ammunition and must survive for a
remaining time ``t``.  Enemies arrive as a unit-rate Poisson process.  Firing
``y`` at an enemy leaves it alive with probability ``exp(-y)``; a surviving
enemy destroys the bomber with probability ``v``.  Everything here is exact
arithmetic on that model: the single-encounter survival function, the
spend-it-all boundary estimates, the maximizers of the two auxiliary
objectives used to locate that boundary, and the strategy values that bound
the optimal solution from either side.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams",
    "TheoremCase",
    "Verdict",
    "SpendItAllVerdict",
    "SplitCheckReport",
    "survive_prob",
    "spend_all_boundary",
    "inner_boundary",
    "theorem_case",
    "classify_spend_it_all",
    "crude_bound_objective",
    "crude_bound_argmax",
    "two_stage_objective",
    "two_stage_argmax",
    "survival_upper_bound",
    "spend_all_value",
    "two_stage_value",
    "check_split_inequalities",
]


@dataclass(frozen=True)
class ModelParams:
    """Kill probability ``v`` of an enemy that survives the bomber's fire.

    The arrival rate and the per-unit miss probability are normalised away
    and kept only as read-only constants.
    """

    v: float
    arrival_rate: ClassVar[float] = 1.0
    decay_base: ClassVar[float] = math.exp(-1.0)

    def __post_init__(self):
        v = float(self.v)
        if not (0.0 < v <= 1.0):
            raise DomainError(f"v must lie in (0, 1], got {self.v!r}")
        object.__setattr__(self, "v", v)

    @property
    def u(self) -> float:
        return 1.0 - self.v

    @classmethod
    def from_u(cls, u: float) -> "ModelParams":
        # 1 - (1 - u) is not always u in floating point; keep v exact instead
        return cls(1.0 - u)


def survive_prob(y, params: ModelParams):
    """Probability ``1 - v*exp(-y)`` of surviving one encounter when firing ``y``."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0) or np.any(np.isnan(y_arr)):
        raise DomainError("ammunition spent must be nonnegative")
    out = 1.0 - params.v * np.exp(-y_arr)
    return float(out) if out.ndim == 0 else out


def _check_time(t):
    if not (t > 0) or math.isinf(t):
        raise DomainError(f"time remaining must be positive and finite, got {t!r}")


def spend_all_boundary(t: float, params: ModelParams) -> float:
    """Upper edge ``log[1 + u/(exp(tu) - 1)]`` of the spend-it-all region.

    For ``u = 0`` this is the limit ``log(1 + 1/t)``.  ``expm1`` keeps the
    ratio accurate as ``u`` shrinks, and for ``tu > 1`` the ratio is rewritten
    in terms of ``exp(-tu)`` so it degrades to zero instead of overflowing.
    """
    _check_time(t)
    u = params.u
    if u == 0.0:
        return math.log1p(1.0 / t)
    tu = t * u
    if tu <= 1.0:
        ratio = u / math.expm1(tu)
    else:
        ratio = u * math.exp(-tu) / -math.expm1(-tu)
    return math.log1p(ratio)


def inner_boundary(t: float, params: ModelParams) -> float:
    """Lower estimate ``log(1 + 1/t - u)`` of the spend-it-all edge."""
    _check_time(t)
    arg = 1.0 / t - params.u
    if not (1.0 + arg > 0.0):
        raise DomainError("log argument 1 + 1/t - u must be positive")
    return math.log1p(arg)


class TheoremCase(enum.Enum):
    I = "I"      # u = 0
    II = "II"    # 0 < u < 1/2, t >= log(2v)/u
    III = "III"  # 1/2 <= u < 1
    IV = "IV"    # 0 < u < 1/2, t < log(2v)/u


class Verdict(enum.Enum):
    SPEND_ALL = "SpendAll"
    INTERIOR_SPEND = "InteriorSpend"
    INDETERMINATE_BAND = "IndeterminateBand"


@dataclass(frozen=True)
class SpendItAllVerdict:
    verdict: Verdict
    f_value: float
    g_value: float
    theorem_case: TheoremCase


def theorem_case(t: float, params: ModelParams) -> TheoremCase:
    _check_time(t)
    u = params.u
    if u == 0.0:
        return TheoremCase.I
    if u >= 0.5:
        return TheoremCase.III
    if t >= math.log(2.0 * params.v) / u:
        return TheoremCase.II
    return TheoremCase.IV


def classify_spend_it_all(x: float, t: float, params: ModelParams,
                          exact_mode: bool = False) -> SpendItAllVerdict:
    """Decide whether firing everything at an enemy met now is optimal.

    Outside case IV the edge ``spend_all_boundary(t)`` is exact.  In case IV
    only ``x <= inner_boundary(t)`` certifies spending everything and
    ``x > spend_all_boundary(t)`` certifies holding back; points in between
    are reported as an indeterminate band unless ``exact_mode`` is set, in
    which case the outer edge is used as the boundary there too.
    """
    if not (x > 0):
        raise DomainError(f"x must be positive, got {x!r}")
    case = theorem_case(t, params)
    f = spend_all_boundary(t, params)
    g = inner_boundary(t, params)
    if case is TheoremCase.IV and not exact_mode:
        if x <= g:
            verdict = Verdict.SPEND_ALL
        elif x > f:
            verdict = Verdict.INTERIOR_SPEND
        else:
            verdict = Verdict.INDETERMINATE_BAND
    else:
        verdict = Verdict.SPEND_ALL if x <= f else Verdict.INTERIOR_SPEND
    return SpendItAllVerdict(verdict, f, g, case)


def crude_bound_objective(y, x: float, t: float, params: ModelParams):
    """``a(x - y) * exp(-v t e^{-y})``, defined for every real ``y``.

    This is the conditional survival obtained by holding back ``y`` and
    pretending the remainder can be fired in full at every later enemy.
    """
    y = np.asarray(y, dtype=float)
    v = params.v
    return (1.0 - v * np.exp(y - x)) * np.exp(-v * t * np.exp(-y))


def crude_bound_argmax(x: float, t: float, params: ModelParams) -> float:
    """Unique maximizer over the real line of :func:`crude_bound_objective`.

    It is the log of the positive root of ``z**2 + v t z - t e^x``.  The root
    is written as ``2 t e^x / (v t + sqrt(...))`` to avoid cancellation when
    ``t e^x`` is small against ``(v t)**2``.  The result may fall outside
    ``[0, x]``.
    """
    if not (x > 0) or not (t > 0):
        raise DomainError("x and t must be positive")
    vt = params.v * t
    disc = math.sqrt(vt * vt + 4.0 * t * math.exp(x))
    return math.log(2.0 * t) + x - math.log(vt + disc)


def two_stage_objective(y, x: float, A: float, params: ModelParams):
    """``a(y) * [1 + A a(x - y)]`` for real ``y``."""
    y = np.asarray(y, dtype=float)
    v = params.v
    return (1.0 - v * np.exp(-y)) * (1.0 + A * (1.0 - v * np.exp(y - x)))


def two_stage_argmax(x: float, A: float, params: ModelParams) -> float:
    """Maximizer ``[x + log(1 + 1/A)] / 2`` of :func:`two_stage_objective`."""
    if not (x > 0):
        raise DomainError(f"x must be positive, got {x!r}")
    if not (A > 0):
        raise DomainError(f"A must be positive, got {A!r}")
    return 0.5 * (x + math.log1p(1.0 / A))


def _two_stage_weight(t: float, u: float) -> float:
    # (e^{tu} - 1)/u, continuous at u = 0 where it equals t
    return t if u == 0.0 else math.expm1(t * u) / u


def survival_upper_bound(x, t, params: ModelParams):
    """``exp(-v t e^{-x})``: survival if ``x`` could be fired at every enemy."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < 0) or np.any(t < 0):
        raise DomainError("x and t must be nonnegative")
    out = np.exp(-params.v * t * np.exp(-x))
    return float(out) if out.ndim == 0 else out


def spend_all_value(x, t, params: ModelParams):
    """Conditional survival ``a(x) e^{-t v}`` of firing everything now."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < 0) or np.any(t < 0):
        raise DomainError("x and t must be nonnegative")
    v = params.v
    out = (1.0 - v * np.exp(-x)) * np.exp(-t * v)
    return float(out) if out.ndim == 0 else out


def two_stage_value(y, x: float, t: float, params: ModelParams):
    """Conditional survival of firing ``y`` now and ``x - y`` at the next enemy.

    Any enemies after the second are met with nothing left.  The value is a
    lower bound on the optimal conditional survival for every ``y`` in
    ``[0, x]``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > x):
        raise DomainError("y must lie in [0, x]")
    if not (t >= 0):
        raise DomainError("t must be nonnegative")
    v = params.v
    A = _two_stage_weight(t, params.u)
    out = math.exp(-t) * (1.0 - v * np.exp(-y)) * (1.0 + A * (1.0 - v * np.exp(y - x)))
    return float(out) if out.ndim == 0 else out


@dataclass
class SplitCheckReport:
    samples: int
    split_violations: int
    series_violations: int
    worst_split_margin: float
    worst_series_margin: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.split_violations == 0 and self.series_violations == 0


def check_split_inequalities(samples: int, seed: int, params: ModelParams,
                             max_parts: int = 20, slack: float = 1e-12) -> SplitCheckReport:
    """Randomised check of the two product inequalities used to bound ``H``.

    For random ``i <= max_parts``, ``y > 0`` and a uniform split of ``y``
    into ``b_1 + ... + b_i``:

    * ``prod a(b_j) <= a(y/i)**i``  (equal split is best), and
    * ``a(y/i)**i <= u**i exp(v y / u)``  (only checked when ``u > 0``).

    Margins are measured on logs, so they are relative.  A margin is
    ``lhs - rhs``; violations are margins above ``slack``.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    v, u = params.v, params.u
    parts = rng.integers(1, max_parts + 1, size=samples)
    totals = rng.exponential(5.0, size=samples)
    worst_split = -math.inf
    worst_series = -math.inf
    split_bad = 0
    series_bad = 0
    for i in range(1, max_parts + 1):
        rows = np.flatnonzero(parts == i)
        if rows.size == 0:
            continue
        y = totals[rows]
        # uniform point on the simplex, scaled to y
        w = rng.dirichlet(np.ones(i), size=rows.size) * y[:, None]
        lhs = np.sum(np.log1p(-v * np.exp(-w)), axis=1)
        even = i * np.log1p(-v * np.exp(-y / i))
        m = lhs - even
        split_bad += int(np.count_nonzero(m > slack))
        worst_split = max(worst_split, float(m.max()))
        if u > 0.0:
            m2 = even - (i * math.log(u) + v * y / u)
            series_bad += int(np.count_nonzero(m2 > slack))
            worst_series = max(worst_series, float(m2.max()))
    return SplitCheckReport(samples, split_bad, series_bad, worst_split, worst_series, slack)
