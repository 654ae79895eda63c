"""Solver and estimator outputs."""

from dataclasses import dataclass, field

import numpy as np

from mfoffload.errors import ValidationError
from mfoffload.models.configuration import Policy


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    exploitability: float
    seconds: float


@dataclass
class FictitiousPlayReport:
    final_policy: Policy
    exploitability_history: list[HistoryEntry] = field(default_factory=list)
    policy_history: list[Policy] = field(default_factory=list)
    method: str = "fictitious"
    converged: bool = False
    cycle_detected: bool = False

    @property
    def iterations_run(self) -> int:
        return len(self.exploitability_history)

    @property
    def final_exploitability(self) -> float:
        if not self.exploitability_history:
            return float("inf")
        return self.exploitability_history[-1].exploitability


@dataclass(frozen=True)
class QuadraticProgram:
    """π^T Q π + c^T π + constant. Q is kept unsymmetrised, as assembled."""

    Q: np.ndarray
    c: np.ndarray
    constant: float

    @property
    def K(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class OptimizationResult:
    argmin: Policy
    value: float
    evaluations: int
    refined: bool = False


@dataclass(frozen=True)
class FiniteEvalResult:
    N: int
    estimate: float
    standard_error: float
    samples: int
    seed: int
    mode: str = "exploitability"

    def __post_init__(self):
        if self.standard_error < 0:
            raise ValidationError("standard_error must be >= 0")
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")


@dataclass(frozen=True)
class TrajectoryEnsemble:
    time_grid: np.ndarray
    mean_ntot_over_N: np.ndarray
    ci68_halfwidth: np.ndarray
    trajectories: int
    N: int

    def tail_mean(self, start_fraction: float = 0.5) -> float:
        """Time average of the mean curve over grid points in the last part of the horizon."""
        horizon = self.time_grid[-1]
        mask = self.time_grid >= start_fraction * horizon
        return float(np.mean(self.mean_ntot_over_N[mask]))


@dataclass(frozen=True)
class ComparisonReport:
    equilibrium: Policy
    equilibrium_cost: float
    equilibrium_exploitability: float
    optimum: Policy
    optimum_cost: float

    @property
    def cost_ratio(self) -> float:
        """Selfish cost over cooperative cost (>= 1 up to solver accuracy)."""
        return self.equilibrium_cost / self.optimum_cost
