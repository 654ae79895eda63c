"""Timing formulas and mean-field objectives shared by every solver and simulator.

All functions are pure. Policies bind to support indices; every function that
pairs a policy with a distribution checks the lengths first.
"""

import logging
from typing import NamedTuple

import numpy as np

from mfoffload.errors import DegeneratePolicyError, FeasibilityError
from mfoffload.models.configuration import Configuration, Policy, SupportDistribution
from mfoffload.models.scenario import GameMode, OneShotScenario, Scenario, StationaryScenario

logger = logging.getLogger(__name__)


class TypeCosts(NamedTuple):
    """Per-type cost of offloading and of computing locally, seconds."""

    offload: np.ndarray
    local: np.ndarray

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.offload.tolist(), self.local.tolist()))


class StationaryTerms(NamedTuple):
    A: float  # Σ p_j π_j W_j/R_j
    B: float  # Σ p_j π_j L_j


# ---------------------------------------------------------------- timing

def transmission_time(c: Configuration) -> float:
    return c.W / c.R


def local_time(c: Configuration) -> float:
    return c.L / c.f


def offload_mass(dist: SupportDistribution, pi: Policy) -> float:
    """m = Σ p_j π_j, the fraction of users that offload."""
    pi.check_aligned(dist)
    return float(dist.p @ pi.as_array())


# ---------------------------------------------------------------- one-shot

def oneshot_type_costs(s: OneShotScenario, pi: Policy) -> TypeCosts:
    m = offload_mass(s.dist, pi)
    offload = s.dist.tx_times + s.dist.L * m / s.f_per
    return TypeCosts(offload, np.array(s.dist.local_times))


def _mixed_cost(dist: SupportDistribution, dev: Policy, costs: TypeCosts) -> float:
    d = dev.as_array()
    return float(dist.p @ (d * costs.offload + (1.0 - d) * costs.local))


def oneshot_objective(s: OneShotScenario, pi: Policy) -> float:
    return _mixed_cost(s.dist, pi, oneshot_type_costs(s, pi))


def deviator_oneshot_cost(s: OneShotScenario, dev: Policy, pop: Policy) -> float:
    """Cost of a single user playing `dev` while the mean field is fixed by `pop`."""
    dev.check_aligned(s.dist)
    return _mixed_cost(s.dist, dev, oneshot_type_costs(s, pop))


def oneshot_objective_batch(s: OneShotScenario, policies: np.ndarray) -> np.ndarray:
    """oneshot_objective for every row of an (M, K) array."""
    d = s.dist
    m = policies @ d.p
    offload = d.tx_times[None, :] + d.L[None, :] * m[:, None] / s.f_per
    per_type = policies * offload + (1.0 - policies) * d.local_times[None, :]
    return per_type @ d.p


# ---------------------------------------------------------------- stationary

def stationary_terms(s: StationaryScenario, pi: Policy) -> StationaryTerms:
    pi.check_aligned(s.dist)
    weights = s.dist.p * pi.as_array()
    return StationaryTerms(float(weights @ s.dist.tx_times), float(weights @ s.dist.L))


def stationary_slack(s: StationaryScenario, pi: Policy) -> float:
    """f_per - λ·Σ p_j π_j L_j; the policy is feasible iff this is positive."""
    return s.f_per - s.lam * stationary_terms(s, pi).B


def stationary_feasible(s: StationaryScenario, pi: Policy) -> bool:
    return stationary_slack(s, pi) > 0


def _require_feasible(s: StationaryScenario, pi: Policy) -> StationaryTerms:
    terms = stationary_terms(s, pi)
    slack = s.f_per - s.lam * terms.B
    if not slack > 0:
        raise FeasibilityError(
            f"policy {pi.probs} is infeasible: f_per - λ·E[XL] = {slack:.6g} <= 0",
            policy=pi,
            slack=slack,
        )
    return terms


def stationary_f_alloc(s: StationaryScenario, pi: Policy) -> float:
    """Per-job MEC rate at the stationary mean field: (f_per - λB) / (λA)."""
    terms = _require_feasible(s, pi)
    if terms.A == 0:
        raise DegeneratePolicyError("f_alloc is undefined when nobody offloads")
    return (s.f_per - s.lam * terms.B) / (s.lam * terms.A)


def stationary_delay_factor(s: StationaryScenario, pop: Policy) -> float:
    """λA / (f_per - λB): MEC delay per cycle of task complexity.

    Zero for an empty pool (A = 0): a lone job gets an unbounded rate in the
    N → ∞ limit.
    """
    terms = _require_feasible(s, pop)
    if terms.A == 0:
        return 0.0
    return s.lam * terms.A / (s.f_per - s.lam * terms.B)


def stationary_type_costs(s: StationaryScenario, pop: Policy) -> TypeCosts:
    delay = stationary_delay_factor(s, pop)
    offload = s.dist.tx_times + s.dist.L * delay
    return TypeCosts(offload, np.array(s.dist.local_times))


def stationary_objective(s: StationaryScenario, pi: Policy) -> float:
    return _mixed_cost(s.dist, pi, stationary_type_costs(s, pi))


def deviator_stationary_cost(s: StationaryScenario, dev: Policy, pop: Policy) -> float:
    dev.check_aligned(s.dist)
    return _mixed_cost(s.dist, dev, stationary_type_costs(s, pop))


def stationary_objective_batch(s: StationaryScenario, policies: np.ndarray) -> np.ndarray:
    """stationary_objective per row; infeasible rows map to +inf."""
    d = s.dist
    weights = policies * d.p[None, :]
    a = weights @ d.tx_times
    b = weights @ d.L
    slack = s.f_per - s.lam * b
    feasible = slack > 0
    delay = np.zeros_like(a)
    np.divide(s.lam * a, slack, out=delay, where=feasible & (a > 0))
    offload = d.tx_times[None, :] + d.L[None, :] * delay[:, None]
    per_type = policies * offload + (1.0 - policies) * d.local_times[None, :]
    values = per_type @ d.p
    values[~feasible] = np.inf
    return values


# ---------------------------------------------------------------- mode dispatch

def type_costs(scenario: Scenario, pop: Policy) -> TypeCosts:
    if scenario.mode is GameMode.STATIONARY:
        return stationary_type_costs(scenario, pop)
    return oneshot_type_costs(scenario, pop)


def objective(scenario: Scenario, pi: Policy) -> float:
    if scenario.mode is GameMode.STATIONARY:
        return stationary_objective(scenario, pi)
    return oneshot_objective(scenario, pi)


def deviator_cost(scenario: Scenario, dev: Policy, pop: Policy) -> float:
    if scenario.mode is GameMode.STATIONARY:
        return deviator_stationary_cost(scenario, dev, pop)
    return deviator_oneshot_cost(scenario, dev, pop)


def objective_batch(scenario: Scenario, policies: np.ndarray) -> np.ndarray:
    if scenario.mode is GameMode.STATIONARY:
        return stationary_objective_batch(scenario, policies)
    return oneshot_objective_batch(scenario, policies)
