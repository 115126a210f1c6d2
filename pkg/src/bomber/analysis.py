"""Checks of solved fields against the known structure of the optimum.

* monotonicity scans of the allocation (the classical conjectures A, B, C),
* location of the spend-it-all edge against its closed-form estimates,
* small-time limits of ``K/x``, ``|log(1-H)|/x`` and ``|log(1-P)|/x``,
* the lower bound on ``K`` implied by a lower bound on ``H``.

Reports never raise on a failed check; they record what failed.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import Grid, Mode, SolutionField
from .model import ModelParams, TheoremCase, inner_boundary, spend_all_boundary, theorem_case
from .regions import allocation_limit, asymptotic_allocation, region_for_ratio, survival_limit
from .solver import complements_at, policy_at, solve

__all__ = [
    "Conjecture",
    "ViolationReport",
    "check_conjecture",
    "BoundaryReport",
    "verify_spend_boundary",
    "AsymptoticsRow",
    "asymptotic_grid",
    "asymptotics_table",
    "rows_to_csv",
    "BoundCheckReport",
    "allocation_lower_bound_check",
    "asymptotic_allocation_gap",
    "to_json",
    "to_text",
]


class Conjecture(enum.Enum):
    A = "A"  # K nonincreasing in t
    B = "B"  # K nondecreasing in x
    C = "C"  # x - K nondecreasing in x


@dataclass
class ViolationReport:
    conjecture: Conjecture
    violations: list[tuple[int, int, int, float]]
    tolerance: float
    total_checked: int

    @property
    def count(self) -> int:
        return len(self.violations)

    @property
    def worst(self) -> float:
        return max((v[3] for v in self.violations), default=0.0)


def _validate_field(field: SolutionField) -> None:
    if not isinstance(field, SolutionField):
        raise ConfigurationError("expected a SolutionField")
    K = field.K
    x = field.grid.x[:, None]
    if not np.all(np.isfinite(K)) or np.any(K < -1e-12) or np.any(K > x + 1e-9):
        raise ConfigurationError("allocation array is corrupt: values outside [0, x]")


def check_conjecture(field: SolutionField, which, tolerance: float | None = None) -> ViolationReport:
    """Scan adjacent node pairs for a monotonicity violation of the allocation.

    Each violation is ``(x_index, t_index, neighbour_index, magnitude)``; the
    neighbour index is along t for A and along x for B and C.  The default
    tolerance is ``2*dx``.
    """
    _validate_field(field)
    which = Conjecture(which.value if isinstance(which, Conjecture) else str(which).upper())
    g = field.grid
    tol = 2.0 * g.dx if tolerance is None else float(tolerance)
    if not (tol > 0):
        raise DomainError("tolerance must be positive")
    K = field.K
    if which is Conjecture.A:
        excess = K[:, 1:] - K[:, :-1]
        bad = np.argwhere(excess > tol)
        viol = [(int(i), int(n), int(n) + 1, float(excess[i, n])) for i, n in bad]
    else:
        held = K if which is Conjecture.B else g.x[:, None] - K
        drop = held[:-1, :] - held[1:, :]
        bad = np.argwhere(drop > tol)
        viol = [(int(i), int(n), int(i) + 1, float(drop[i, n])) for i, n in bad]
    total = (g.nx * (g.nt - 1)) if which is Conjecture.A else ((g.nx - 1) * g.nt)
    return ViolationReport(which, viol, tol, total)


@dataclass
class BoundaryReport:
    threshold: float
    t: list[float]
    boundary: list[float]
    outer: list[float]
    inner: list[float]
    cases: list[str]
    saturated: list[bool]
    max_abs_deviation: float       # against the outer edge, cases I-III
    band_excess: float             # distance outside [inner - slack, outer + slack], case IV
    band_slack: float
    exact_mode: bool

    @property
    def band_ok(self) -> bool:
        return self.band_excess <= 0.0


def verify_spend_boundary(field: SolutionField, threshold: float | None = None,
                          t_min: float = 0.0, t_max: float | None = None,
                          band_slack: float | None = None, exact_mode: bool = False) -> BoundaryReport:
    """Locate the spend-it-all edge at each time node and compare with its estimates.

    The empirical edge at time ``t`` is the last node of the run of nodes,
    starting at ``x = 0``, on which ``K >= x - threshold``.  Past the edge
    ``x - K`` grows at roughly half the rate of ``x``, so a threshold ``tau``
    moves the detected edge out by about ``2*tau``; the default ``dx/2``
    keeps that bias within one node.

    Outside case IV (or with ``exact_mode``) the deviation from the outer
    edge is recorded.  In case IV the report records how far the edge falls
    outside ``[inner - slack, outer + slack]`` (``slack`` defaults to
    ``3*dx``).  Time nodes where every node spends all, or ``t = 0``, are
    marked saturated and skipped.
    """
    _validate_field(field)
    g = field.grid
    params = field.params
    dx = g.dx
    thr = 0.5 * dx if threshold is None else float(threshold)
    slack = 3.0 * dx if band_slack is None else float(band_slack)
    t_hi = g.t_max if t_max is None else t_max
    x = g.x
    ts, bs, fs, gs, cs, sat = [], [], [], [], [], []
    max_dev = 0.0
    band_excess = -math.inf
    for n, t in enumerate(g.t):
        if t < t_min - 1e-12 or t > t_hi + 1e-12:
            continue
        ok = field.K[:, n] >= x - thr
        if t == 0.0 or ok.all():
            ts.append(float(t)); bs.append(math.inf); fs.append(math.inf); gs.append(math.inf)
            cs.append("-"); sat.append(True)
            continue
        b = x[int(np.argmin(ok)) - 1] if ok[0] else 0.0
        f = spend_all_boundary(t, params)
        gv = inner_boundary(t, params)
        case = theorem_case(t, params)
        ts.append(float(t)); bs.append(float(b)); fs.append(f); gs.append(gv)
        cs.append(case.value); sat.append(False)
        if case is TheoremCase.IV and not exact_mode:
            excess = max(gv - slack - b, b - (f + slack))
            band_excess = max(band_excess, excess)
        else:
            max_dev = max(max_dev, abs(b - f))
    if band_excess == -math.inf:
        band_excess = 0.0
    return BoundaryReport(thr, ts, bs, fs, gs, cs, sat, max_dev, band_excess, slack, exact_mode)


@dataclass(frozen=True)
class AsymptoticsRow:
    t: float
    x: float
    rho_hat: float
    j: int
    K_over_x: float
    alpha_target: float
    logH_over_x: float
    logP_over_x: float
    beta_target: float

    @property
    def errors(self) -> tuple[float, float, float]:
        """Absolute errors of ``K/x``, ``|log(1-H)|/x`` and ``|log(1-P)|/x``."""
        return (abs(self.K_over_x - self.alpha_target),
                abs(self.logH_over_x - self.alpha_target),
                abs(self.logP_over_x - self.beta_target))


def asymptotic_grid(rho: float, t_values, dx: float = 0.05, steps_to_min: int = 10,
                    margin: float = 1.0) -> Grid:
    """Grid reaching ``x = |log t|/rho`` for every ``t``, with each ``t`` on a node.

    The ammunition step is shrunk from ``dx`` until the smallest such ``x`` is
    a multiple of four steps, which puts every ``x`` (and the quarter points
    of the smallest) on a node when the times are powers of a common base
    (``1e-2, 1e-3, ...``).  The time step is
    ``min(t) / steps_to_min``.
    """
    ts = sorted(float(t) for t in t_values)
    if not ts or ts[0] <= 0 or ts[-1] >= 1:
        raise DomainError("times must lie in (0, 1)")
    x_small = -math.log(ts[-1]) / rho
    x_big = -math.log(ts[0]) / rho
    m = 4 * max(1, math.ceil(x_small / dx / 4))
    step = x_small / m
    nx = int(math.ceil((x_big + margin) / step)) + 1
    dt = ts[0] / steps_to_min
    nt = int(round(ts[-1] / dt)) + 1
    return Grid((nx - 1) * step, nx, ts[-1], nt)


def asymptotics_table(params: ModelParams, rho: float, t_values, field: SolutionField | None = None,
                      mode: Mode | None = None, dx: float = 0.05, threads: int | None = None
                      ) -> list[AsymptoticsRow]:
    """Compare solved values with their small-time limits along ``x = |log t| / rho``.

    A suitable field is solved unless one is supplied.  Rows are sorted by
    decreasing ``t``.
    """
    if not (rho > 0):
        raise DomainError("rho must be positive")
    ts = sorted((float(t) for t in t_values), reverse=True)
    if any(not (0.0 < t < 1.0) for t in ts):
        raise DomainError("times must lie in (0, 1)")
    if field is None:
        field = solve(params, asymptotic_grid(rho, ts, dx), mode, threads=threads)
    g = field.grid
    label = region_for_ratio(rho)
    a, b = allocation_limit(label.j, rho), survival_limit(label.j, rho)
    rows = []
    for t in ts:
        x = -math.log(t) / rho
        if x > g.x_max or t > g.t_max * (1 + 1e-12):
            raise ConfigurationError(f"point x={x:.4g}, t={t:.3g} lies outside the field")
        pt = policy_at(field, x, min(t, g.t_max))
        p_comp, h_comp = complements_at(field, x, min(t, g.t_max))
        rows.append(AsymptoticsRow(
            t=t, x=x, rho_hat=rho, j=label.j,
            K_over_x=pt.k / x, alpha_target=a,
            logH_over_x=-math.log(h_comp) / x,
            logP_over_x=-math.log(p_comp) / x,
            beta_target=b,
        ))
    return rows


ROW_HEADER = ["t", "x", "rho", "j", "K_over_x", "alpha", "logH_over_x", "logP_over_x", "beta"]


def rows_to_csv(rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_HEADER)
    for r in rows:
        w.writerow([repr(r.t), repr(r.x), repr(r.rho_hat), r.j, repr(r.K_over_x), repr(r.alpha_target),
                    repr(r.logH_over_x), repr(r.logP_over_x), repr(r.beta_target)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


@dataclass
class BoundCheckReport:
    gamma: float
    margin: float
    qualifying: int
    violations: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return self.qualifying == 0


def allocation_lower_bound_check(field: SolutionField, gamma: float, margin: float) -> BoundCheckReport:
    """Where ``H >= 1 - exp(-gamma x)``, require ``K >= gamma x - margin x``.

    The qualifying test is done on ``1 - H`` so it stays meaningful when
    ``H`` rounds to one.  Violations are ``(x_index, t_index, shortfall / x)``.
    """
    _validate_field(field)
    if not (0.0 < gamma <= 1.0):
        raise DomainError("gamma must lie in (0, 1]")
    x = field.grid.x[:, None]
    with np.errstate(under="ignore"):
        qualifies = (field.H_comp <= np.exp(-gamma * x)) & (x > 0)
    short = (gamma - margin) * x - field.K
    bad = np.argwhere(qualifies & (short > 0))
    xs = field.grid.x
    viol = [(int(i), int(n), float(short[i, n] / xs[i])) for i, n in bad]
    return BoundCheckReport(gamma, margin, int(qualifies.sum()), viol)


def asymptotic_allocation_gap(x1: float, x2: float, t: float) -> float:
    """Difference of the small-time allocation approximations at ``x2`` and ``x1``."""
    if x2 < x1:
        raise DomainError("need x1 <= x2")
    if x1 == x2:
        return 0.0
    return asymptotic_allocation(x2, t) - asymptotic_allocation(x1, t)


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def to_json(report) -> str:
    """Deterministic JSON for any report or list of rows."""
    return json.dumps(_plain(report), sort_keys=True, indent=1)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, enum.Enum):
        return str(v.value)
    return str(v)


def format_columns(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    return "\n".join("  ".join(s.rjust(w) for s, w in zip(r, widths)) for r in cells) + "\n"


def to_text(report) -> str:
    """Aligned-column rendering for the terminal."""
    if isinstance(report, ViolationReport):
        head = (f"conjecture {report.conjecture.value}: {report.count} violations "
                f"of {report.total_checked} pairs (tolerance {report.tolerance:.3g})\n")
        rows = [list(v) for v in report.violations[:50]]
        return head + (format_columns(["x_index", "t_index", "neighbour", "magnitude"], rows) if rows else "")
    if isinstance(report, BoundaryReport):
        head = (f"spend-it-all edge: max |edge - outer| = {report.max_abs_deviation:.4g} "
                f"(threshold {report.threshold:.3g}); case IV band excess {report.band_excess:.4g}\n")
        rows = [[t, b, f, g, c] for t, b, f, g, c, s in zip(report.t, report.boundary, report.outer,
                                                          report.inner, report.cases, report.saturated)
                if not s]
        step = max(1, len(rows) // 40)
        return head + format_columns(["t", "edge", "outer", "inner", "case"], rows[::step])
    if isinstance(report, BoundCheckReport):
        return (f"allocation bound gamma={report.gamma:g} margin={report.margin:g}: "
                f"{report.qualifying} qualifying nodes, {len(report.violations)} violations\n")
    if isinstance(report, list) and report and isinstance(report[0], AsymptoticsRow):
        rows = [[r.t, r.x, r.rho_hat, r.j, r.K_over_x, r.alpha_target, r.logH_over_x,
                 r.logP_over_x, r.beta_target] for r in report]
        return format_columns(ROW_HEADER, rows)
    return to_json(report) + "\n"
