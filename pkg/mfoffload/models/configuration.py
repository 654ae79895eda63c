"""User configurations, finite-support distributions over them, and policies."""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from mfoffload.errors import AlignmentError, ValidationError

PROB_SUM_TOL = 1e-12


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Configuration:
    """One user type: task size W (bits), complexity L (cycles),
    local rate f (cycles/s) and uplink rate R (bits/s)."""

    W: float
    L: float
    f: float
    R: float

    def __post_init__(self):
        for name in ("W", "L", "f", "R"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"Configuration.{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class SupportDistribution:
    """Ordered finite support of μ0. Policies bind to indices, so duplicated
    configurations with different weights stay distinct."""

    points: tuple[tuple[float, Configuration], ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(p), c) for p, c in self.points))
        if not self.points:
            raise ValidationError("SupportDistribution needs at least one point")
        for j, (p, _) in enumerate(self.points):
            if not (math.isfinite(p) and p >= 0):
                raise ValidationError(f"probability p_{j + 1} must be >= 0, got {p!r}")
        total = math.fsum(p for p, _ in self.points)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, expected 1 within {PROB_SUM_TOL}")

    @classmethod
    def from_lists(cls, probs, configs) -> "SupportDistribution":
        probs = list(probs)
        configs = [c if isinstance(c, Configuration) else Configuration(*c) for c in configs]
        if len(probs) != len(configs):
            raise AlignmentError(f"{len(probs)} probabilities for {len(configs)} configurations")
        return cls(tuple(zip(probs, configs)))

    @property
    def K(self) -> int:
        return len(self.points)

    @property
    def configs(self) -> tuple[Configuration, ...]:
        return tuple(c for _, c in self.points)

    @cached_property
    def p(self) -> np.ndarray:
        return _frozen([p for p, _ in self.points])

    @cached_property
    def W(self) -> np.ndarray:
        return _frozen([c.W for c in self.configs])

    @cached_property
    def L(self) -> np.ndarray:
        return _frozen([c.L for c in self.configs])

    @cached_property
    def f(self) -> np.ndarray:
        return _frozen([c.f for c in self.configs])

    @cached_property
    def R(self) -> np.ndarray:
        return _frozen([c.R for c in self.configs])

    @cached_property
    def tx_times(self) -> np.ndarray:
        """W_j / R_j per type."""
        return _frozen(self.W / self.R)

    @cached_property
    def local_times(self) -> np.ndarray:
        """L_j / f_j per type."""
        return _frozen(self.L / self.f)


@dataclass(frozen=True)
class Policy:
    """Per-type offloading probabilities, index-aligned with a SupportDistribution."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(x) for x in self.probs)
        object.__setattr__(self, "probs", probs)
        for j, x in enumerate(probs):
            if not (0.0 <= x <= 1.0):
                raise ValidationError(f"policy entry {j + 1} must lie in [0, 1], got {x!r}")

    @classmethod
    def zeros(cls, k: int) -> "Policy":
        return cls((0.0,) * k)

    @classmethod
    def ones(cls, k: int) -> "Policy":
        return cls((1.0,) * k)

    @classmethod
    def from_array(cls, values) -> "Policy":
        # Clip the rounding noise that averaging and projection leave behind
        arr = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
        return cls(tuple(arr.tolist()))

    @property
    def K(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return _frozen(self.probs)

    def is_pure(self) -> bool:
        return all(x in (0.0, 1.0) for x in self.probs)

    def check_aligned(self, dist: SupportDistribution) -> None:
        if self.K != dist.K:
            raise AlignmentError(f"policy has {self.K} entries but the distribution has {dist.K} types")
