"""Scenario types: one-shot and time-stationary offloading systems."""

import math
from dataclasses import dataclass
from enum import Enum

from mfoffload.errors import ValidationError
from mfoffload.models.configuration import SupportDistribution


class GameMode(str, Enum):
    ONE_SHOT = "oneshot"
    STATIONARY = "stationary"


def _check_positive(name: str, value: float):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class OneShotScenario:
    """All N users decide once. f_pool = N·f_per is derived, never stored."""

    dist: SupportDistribution
    f_per: float

    def __post_init__(self):
        _check_positive("f_per", self.f_per)

    @property
    def mode(self) -> GameMode:
        return GameMode.ONE_SHOT

    @property
    def K(self) -> int:
        return self.dist.K

    def f_pool(self, n: int) -> float:
        return n * self.f_per


@dataclass(frozen=True)
class StationaryScenario:
    """Tasks arrive as a Poisson process of rate λ per user."""

    dist: SupportDistribution
    f_per: float
    lam: float

    def __post_init__(self):
        _check_positive("f_per", self.f_per)
        _check_positive("lambda", self.lam)

    @property
    def mode(self) -> GameMode:
        return GameMode.STATIONARY

    @property
    def K(self) -> int:
        return self.dist.K

    def f_pool(self, n: int) -> float:
        return n * self.f_per

    def as_oneshot(self) -> OneShotScenario:
        return OneShotScenario(self.dist, self.f_per)


Scenario = OneShotScenario | StationaryScenario
