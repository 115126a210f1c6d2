"""Time-marching solver for the optimal survival probability.

Conditioning on the first arrival gives, for the optimal survival ``P`` and
the optimal conditional survival ``H`` given an enemy now,

    dP/dt = H(x, t) - P(x, t),    P(x, 0) = 1,
    H(x, t) = max_{0 <= k <= x} a(k) P(x - k, t).

The solver integrates the same equation for ``Q = 1 - P``,

    dQ/dt = R - Q,    R(x, t) = min_k [v e^{-k} + a(k) Q(x - k, t)],

with the classical fourth-order Runge-Kutta scheme, re-solving the inner
optimisation at every stage.  The inner optimisation scans the ammunition
nodes, then refines between nodes with a golden-section search on a monotone
cubic interpolant of ``Q``.  Every term of ``R`` is nonnegative, so small
complements are resolved to full relative precision.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernel
from ._kernel_py import hermite_interp, hermite_slopes
from .errors import ConfigurationError, DomainError
from .grid import Grid, Mode, SolutionField
from .model import ModelParams

__all__ = [
    "SOLVER_VERSION",
    "AllocationChoice",
    "PolicyPoint",
    "conditional_value",
    "optimize_allocation",
    "solve",
    "policy_at",
    "policy_arrays",
    "complements_at",
]

log = logging.getLogger(__name__)

SOLVER_VERSION = "1.0"

GOLDEN_ITERS = 24
TIE_TOL = 1e-12


class _Sweep:
    """Inner optimisation over a whole time slice."""

    def __init__(self, grid: Grid, params: ModelParams, mode: Mode,
                 threads: int, backend: str | None):
        if backend is None:
            self.fn = kernel.bellman_sweep
        else:
            try:
                self.fn = kernel.SWEEPS[backend]
            except KeyError:
                raise ConfigurationError(f"backend {backend!r} is not available") from None
        self.dx = grid.dx
        self.v = params.v
        if mode.is_discrete:
            self.ratio = mode.step / grid.dx
            # snap ratios that are whole numbers up to rounding
            if abs(self.ratio - round(self.ratio)) < 1e-9 * max(1.0, self.ratio):
                self.ratio = float(round(self.ratio))
            self.refine = False
        else:
            self.ratio = 1.0
            self.refine = mode.refine
        self.threads = threads

    def __call__(self, Q, R_out, K_out, start=0, stop=-1):
        self.fn(Q, self.dx, self.v, self.ratio, self.refine, GOLDEN_ITERS, TIE_TOL,
                R_out, K_out, start, stop, self.threads)


def conditional_value(x: float, k: float, P_slice, grid: Grid, params: ModelParams) -> float:
    """``a(k) * P(x - k)``, interpolating ``P`` from a time slice as the solver does.

    The interpolant is the monotone cubic Hermite one used inside the sweep,
    so it matches the solver's objective and never leaves the range of the
    two bracketing node values.
    """
    if not (0.0 <= k <= x):
        raise DomainError(f"allocation k={k!r} outside [0, {x!r}]")
    if x > grid.x_max * (1 + 1e-12):
        raise DomainError(f"x={x!r} beyond x_max={grid.x_max!r}")
    Q = 1.0 - np.asarray(P_slice, dtype=float)
    q = hermite_interp(Q, hermite_slopes(Q), (x - k) / grid.dx)
    return float((1.0 - params.v * math.exp(-k)) * (1.0 - q))


@dataclass(frozen=True)
class AllocationChoice:
    k_star: float
    h_star: float


def optimize_allocation(x: float, P_slice, grid: Grid, params: ModelParams,
                        mode: Mode | None = None, backend: str | None = None) -> AllocationChoice:
    """Best allocation at ammunition node ``x`` given the survival slice ``P_slice``.

    Among allocations whose conditional survival ties the optimum to a
    relative ``1e-12`` of the kill probability, the largest is returned.
    """
    mode = mode or Mode.continuous()
    i = grid.x_index(x)
    Q = np.ascontiguousarray(1.0 - np.asarray(P_slice, dtype=float))
    if Q.shape != (grid.nx,):
        raise DomainError(f"slice must have {grid.nx} entries")
    R = np.zeros(grid.nx)
    K = np.zeros(grid.nx)
    _Sweep(grid, params, mode, 1, backend)(Q, R, K, i, i + 1)
    return AllocationChoice(float(K[i]), float(1.0 - R[i]))


def solve(params: ModelParams, grid: Grid | None = None, mode: Mode | None = None,
          threads: int | None = None, backend: str | None = None) -> SolutionField:
    """Integrate the survival equation over ``grid``.

    ``threads`` caps the parallelism of the inner sweep (default from
    ``BOMBER_THREADS``); the result is identical for any value.
    """
    grid = grid or Grid()
    mode = mode or Mode.continuous()
    if grid.dt > 0.5:
        raise ConfigurationError("time step exceeds the stability guard")
    threads = kernel.default_threads() if threads is None else max(1, int(threads))
    sweep = _Sweep(grid, params, mode, threads, backend)
    nx, nt, dt = grid.nx, grid.nt, grid.dt

    P_comp = np.empty((nx, nt), order="F")
    H_comp = np.empty((nx, nt), order="F")
    K = np.empty((nx, nt), order="F")

    q = np.zeros(nx)
    stage = np.empty(nx)
    r1, r2, r3, r4 = (np.empty(nx) for _ in range(4))
    k_scratch = np.empty(nx)
    started = time.perf_counter()
    for n in range(nt):
        P_comp[:, n] = q
        sweep(q, r1, k_scratch)
        H_comp[:, n] = r1
        K[:, n] = k_scratch
        if n == nt - 1:
            break
        d1 = r1 - q
        np.add(q, 0.5 * dt * d1, out=stage)
        sweep(stage, r2, k_scratch)
        d2 = r2 - stage
        np.add(q, 0.5 * dt * d2, out=stage)
        sweep(stage, r3, k_scratch)
        d3 = r3 - stage
        np.add(q, dt * d3, out=stage)
        sweep(stage, r4, k_scratch)
        d4 = r4 - stage
        q = q + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
    elapsed = time.perf_counter() - started
    log.info("solved v=%g on %dx%d grid (%s) in %.2fs", params.v, nx, nt, mode.label, elapsed)
    meta = {"solver_version": SOLVER_VERSION, "backend": backend or kernel.BACKEND}
    return SolutionField(grid, params, mode, P_comp, H_comp, K, meta)


@dataclass(frozen=True)
class PolicyPoint:
    k: float
    p: float
    h: float


def _bracket(value, step, count):
    pos = np.asarray(value, dtype=float) / step
    lo = np.clip(np.floor(pos).astype(np.intp), 0, count - 2)
    w = np.clip(pos - lo, 0.0, 1.0)
    return lo, w


def _check_range(field: SolutionField, x, t):
    g = field.grid
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    eps = 1e-12
    if np.any(x < 0) or np.any(x > g.x_max * (1 + eps)) or np.any(np.isnan(x)):
        raise DomainError(f"x outside [0, {g.x_max}]")
    if np.any(t < 0) or np.any(t > g.t_max * (1 + eps)) or np.any(np.isnan(t)):
        raise DomainError(f"t outside [0, {g.t_max}]")
    return x, t


def policy_arrays(field: SolutionField, x, t):
    """Vectorised :func:`policy_at`; returns arrays ``(k, p, h)``."""
    x, t = _check_range(field, x, t)
    g = field.grid
    i, wx = _bracket(x, g.dx, g.nx)
    n, wt = _bracket(t, g.dt, g.nt)

    def bilinear(a):
        lo_t = a[i, n] + wx * (a[i + 1, n] - a[i, n])
        hi_t = a[i, n + 1] + wx * (a[i + 1, n + 1] - a[i, n + 1])
        return lo_t + wt * (hi_t - lo_t)

    p = 1.0 - bilinear(field.P_comp)
    h = 1.0 - bilinear(field.H_comp)
    k = np.clip(bilinear(field.K), 0.0, x)
    return k, p, h


def policy_at(field: SolutionField, x: float, t: float) -> PolicyPoint:
    """Interpolated allocation and probabilities at an arbitrary ``(x, t)``."""
    k, p, h = policy_arrays(field, x, t)
    return PolicyPoint(float(k), float(p), float(h))


def complements_at(field: SolutionField, x: float, t: float) -> tuple[float, float]:
    """``(1 - P, 1 - H)`` at ``(x, t)``, interpolated bilinearly in log space.

    Both complements vary exponentially in ``x`` for small ``t``, so this is
    far more accurate than interpolating the probabilities themselves.
    """
    x, t = _check_range(field, x, t)
    g = field.grid
    i, wx = _bracket(x, g.dx, g.nx)
    n, wt = _bracket(t, g.dt, g.nt)
    out = []
    for a in (field.P_comp, field.H_comp):
        corners = np.array([[a[i, n], a[i, n + 1]], [a[i + 1, n], a[i + 1, n + 1]]])
        if np.all(corners > 0):
            la = np.log(corners)
            lo_t = la[0, 0] + wx * (la[1, 0] - la[0, 0])
            hi_t = la[0, 1] + wx * (la[1, 1] - la[0, 1])
            out.append(float(np.exp(lo_t + wt * (hi_t - lo_t))))
        else:
            lo_t = corners[0, 0] + wx * (corners[1, 0] - corners[0, 0])
            hi_t = corners[0, 1] + wx * (corners[1, 1] - corners[0, 1])
            out.append(float(lo_t + wt * (hi_t - lo_t)))
    return out[0], out[1]
