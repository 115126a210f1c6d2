"""Discretisation of the (ammunition, time) quarter plane and solver output."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import ModelParams

__all__ = ["Grid", "Mode", "SolutionField", "MAX_DT"]

# explicit stepping of a rate-1 contraction; conservative
MAX_DT = 0.5


@dataclass(frozen=True)
class Grid:
    """Uniform nodes ``x_i = i*dx`` on ``[0, x_max]`` and ``t_n = n*dt`` on ``[0, t_max]``."""

    x_max: float = 12.0
    nx: int = 1201
    t_max: float = 5.0
    nt: int = 2001

    def __post_init__(self):
        if not (self.x_max > 0) or not (self.t_max > 0):
            raise ConfigurationError("x_max and t_max must be positive")
        if int(self.nx) != self.nx or int(self.nt) != self.nt:
            raise ConfigurationError("nx and nt must be integers")
        if self.nx < 2 or self.nt < 2:
            raise ConfigurationError("nx and nt must be at least 2")
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))
        if self.dt > MAX_DT:
            raise ConfigurationError(f"time step {self.dt:g} exceeds the stability guard {MAX_DT}")

    @property
    def dx(self) -> float:
        return self.x_max / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_max / (self.nt - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    def refined(self, factor: int = 2) -> "Grid":
        """Same extent with ``factor`` times as many ammunition intervals."""
        return Grid(self.x_max, (self.nx - 1) * factor + 1, self.t_max, self.nt)

    def x_index(self, x: float) -> int:
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        pos = x / self.dx
        i = int(round(pos))
        if abs(pos - i) > 1e-9 * max(1.0, abs(pos)) or not (0 <= i < self.nx):
            raise DomainError(f"x={x!r} is not an ammunition node")
        return i

    def t_index(self, t: float) -> int:
        pos = t / self.dt
        n = int(round(pos))
        if abs(pos - n) > 1e-9 * max(1.0, abs(pos)) or not (0 <= n < self.nt):
            raise DomainError(f"t={t!r} is not a time node")
        return n


@dataclass(frozen=True)
class Mode:
    """Allocation rule: any amount (``step is None``) or whole multiples of ``step``.

    ``refine`` only applies to the continuous rule; without it the optimum is
    taken over grid nodes only.
    """

    step: float | None = None
    refine: bool = True

    def __post_init__(self):
        if self.step is not None and not (self.step > 0):
            raise ConfigurationError(f"discrete step must be positive, got {self.step!r}")

    @classmethod
    def continuous(cls, refine: bool = True) -> "Mode":
        return cls(None, refine)

    @classmethod
    def discrete(cls, step: float) -> "Mode":
        return cls(float(step), False)

    @property
    def is_discrete(self) -> bool:
        return self.step is not None

    @property
    def label(self) -> str:
        if self.is_discrete:
            return f"discrete:{self.step!r}"
        return "continuous" if self.refine else "continuous-nodes"

    @classmethod
    def from_label(cls, label: str) -> "Mode":
        if label == "continuous":
            return cls.continuous()
        if label == "continuous-nodes":
            return cls.continuous(refine=False)
        if label.startswith("discrete:"):
            return cls.discrete(float(label.split(":", 1)[1]))
        raise ConfigurationError(f"unknown mode label {label!r}")


@dataclass
class SolutionField:
    """Solver output on a grid.

    The solver works with complements: ``P_comp = 1 - P`` and
    ``H_comp = 1 - H``, which stay accurate when the survival probabilities
    are within rounding of one.  ``P`` and ``H`` are derived from them.  All
    arrays have shape ``(nx, nt)``: axis 0 is ammunition, axis 1 is time.
    """

    grid: Grid
    params: ModelParams
    mode: Mode
    P_comp: np.ndarray
    H_comp: np.ndarray
    K: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.nx, self.grid.nt)
        for name in ("P_comp", "H_comp", "K"):
            arr = getattr(self, name)
            if not isinstance(arr, np.ndarray) or arr.shape != shape:
                raise ConfigurationError(f"{name} must be an array of shape {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"{name} contains non-finite values")

    @property
    def P(self) -> np.ndarray:
        return 1.0 - self.P_comp

    @property
    def H(self) -> np.ndarray:
        return 1.0 - self.H_comp

    @property
    def v(self) -> float:
        return self.params.v
