"""Monte Carlo evaluation of allocation policies.

Trials are simulated in fixed-size blocks.  Each block draws from its own
Philox stream keyed by ``(seed, block index)``, so the survival count depends
only on the seed and the configuration, never on how blocks are spread over
threads.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import SolutionField
from .model import ModelParams, spend_all_boundary
from .solver import policy_arrays

__all__ = ["PolicyKind", "Policy", "SimReport", "simulate", "BLOCK_SIZE"]

BLOCK_SIZE = 8192


class PolicyKind(enum.Enum):
    FROM_FIELD = "FromField"
    SPEND_IT_ALL = "SpendItAll"
    FIXED_FRACTION = "FixedFraction"
    TWO_STAGE = "TwoStage"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    field: SolutionField | None = None
    fraction: float = 1.0

    @classmethod
    def from_field(cls, field: SolutionField) -> "Policy":
        return cls(PolicyKind.FROM_FIELD, field=field)

    @classmethod
    def spend_it_all(cls) -> "Policy":
        return cls(PolicyKind.SPEND_IT_ALL)

    @classmethod
    def fixed_fraction(cls, phi: float) -> "Policy":
        if not (0.0 < phi <= 1.0):
            raise DomainError(f"fraction must lie in (0, 1], got {phi!r}")
        return cls(PolicyKind.FIXED_FRACTION, fraction=float(phi))

    @classmethod
    def two_stage(cls) -> "Policy":
        return cls(PolicyKind.TWO_STAGE)

    @property
    def description(self) -> str:
        if self.kind is PolicyKind.FIXED_FRACTION:
            return f"FixedFraction({self.fraction:g})"
        if self.kind is PolicyKind.FROM_FIELD:
            g = self.field.grid
            return f"FromField(v={self.field.v:g}, {g.nx}x{g.nt}, {self.field.mode.label})"
        return self.kind.value

    def allocate(self, x: np.ndarray, t: np.ndarray, encounter: np.ndarray,
                 params: ModelParams) -> np.ndarray:
        """Amount fired at an enemy met with ammunition ``x`` and time ``t`` left.

        ``encounter`` counts earlier enemies in the trial; only the two-stage
        rule uses it (it fires everything left at the second enemy).
        """
        if self.kind is PolicyKind.SPEND_IT_ALL:
            return x.copy()
        if self.kind is PolicyKind.FIXED_FRACTION:
            return self.fraction * x
        if self.kind is PolicyKind.TWO_STAGE:
            edge = np.array([spend_all_boundary(tt, params) for tt in t]) if t.size else t
            first = np.minimum(x, 0.5 * (x + edge))
            return np.where(encounter == 0, first, x)
        k, _, _ = policy_arrays(self.field, x, t)
        return k


@dataclass(frozen=True)
class SimReport:
    trials: int
    survived: int
    p_hat: float
    std_err: float
    seed: int
    policy: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _block(policy: Policy, x0: float, t0: float, params: ModelParams, count: int,
           seed: int, block: int) -> int:
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))
    x = np.full(count, float(x0))
    t = np.full(count, float(t0))
    enc = np.zeros(count, dtype=np.int64)
    live = np.arange(count)
    survived = 0
    while live.size:
        t_next = t[live] - rng.exponential(1.0, size=live.size)
        done = t_next <= 0.0
        survived += int(np.count_nonzero(done))
        live = live[~done]
        t_next = t_next[~done]
        if not live.size:
            break
        u_hit = rng.random(live.size)
        u_kill = rng.random(live.size)
        k = policy.allocate(x[live], t_next, enc[live], params)
        k = np.clip(k, 0.0, x[live])
        # enemy survives the salvo with probability exp(-k), then strikes with probability v
        enemy_lives = u_hit < np.exp(-k)
        bomber_dies = enemy_lives & (u_kill < params.v)
        x[live] -= k
        t[live] = t_next
        enc[live] += 1
        live = live[~bomber_dies]
    return survived


def simulate(policy: Policy, x0: float, t0: float, params: ModelParams, trials: int,
             seed: int, threads: int = 1, block_size: int = BLOCK_SIZE) -> SimReport:
    """Estimate the survival probability of ``policy`` from ``(x0, t0)``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not (x0 >= 0) or not (t0 > 0):
        raise DomainError("need x0 >= 0 and t0 > 0")
    if seed < 0:
        raise DomainError("seed must be nonnegative")
    if policy.kind is PolicyKind.FROM_FIELD:
        g = policy.field.grid
        if x0 > g.x_max or t0 > g.t_max:
            raise ConfigurationError(f"start ({x0}, {t0}) lies outside the field's grid")
        if policy.field.v != params.v:
            raise ConfigurationError("field was solved for a different v")
    sizes = [block_size] * (trials // block_size)
    if trials % block_size:
        sizes.append(trials % block_size)
    jobs = [(policy, x0, t0, params, n, seed, b) for b, n in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda a: _block(*a), jobs))
    else:
        counts = [_block(*a) for a in jobs]
    survived = sum(counts)
    p = survived / trials
    return SimReport(trials, survived, p, math.sqrt(p * (1.0 - p) / trials), seed, policy.description)
