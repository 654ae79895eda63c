"""Monte Carlo evaluation of mean-field policies in the finite N-user one-shot system.

Populations are drawn through sufficient statistics wherever the estimand
allows it: from one user's point of view the other N-1 users offload
independently with probability m = Σ p_j π_j, so their offload count is
Binomial(N-1, m); the population-average cost depends only on the
(type, decision) counts, which are Multinomial(N, p_j π_j, p_j (1-π_j)).
The explicit per-user form (SampledPopulation) backs the exact centralised
optimum and the tests that cross-check the shortcut.
"""

import asyncio
import itertools
import logging
import math

import numpy as np

from mfoffload.config import Config, config as default_config
from mfoffload.errors import BudgetError, ValidationError
from mfoffload.models.configuration import Policy
from mfoffload.models.population import SampledPopulation
from mfoffload.models.results import FiniteEvalResult
from mfoffload.models.scenario import GameMode, OneShotScenario, Scenario
from mfoffload.services import cost_model
from mfoffload.services.mfg_service import resolve_mode
from mfoffload.utils import seeding
from mfoffload.utils.parallel import gather_blocks

logger = logging.getLogger(__name__)

MAX_DEVIATION_TYPES = 20
MAX_KNAPSACK_USERS = 2000


# ---------------------------------------------------------------- per-user costs

def realized_costs(population: SampledPopulation, s: OneShotScenario) -> np.ndarray:
    """Cost of every user: X_i (W_i/R_i + L_i ΣX / (N f_per)) + (1 - X_i) L_i/f_i."""
    population.check_support(s.K)
    d = s.dist
    t, x = population.type_indices, population.decisions
    offload = d.tx_times[t] + d.L[t] * population.offload_count / (population.N * s.f_per)
    return np.where(x == 1, offload, d.local_times[t])


def realized_cost(population: SampledPopulation, s: OneShotScenario, i: int) -> float:
    if not 0 <= i < population.N:
        raise ValidationError(f"agent index {i} out of range for N={population.N}")
    return float(realized_costs(population, s)[i])


def sample_population(s: OneShotScenario, pi: Policy, n: int, rng: np.random.Generator) -> SampledPopulation:
    pi.check_aligned(s.dist)
    types = rng.choice(s.K, size=n, p=s.dist.p)
    decisions = (rng.random(n) < pi.as_array()[types]).astype(np.int64)
    return SampledPopulation(types, decisions)


def exact_coop_optimum(population: SampledPopulation, s: OneShotScenario) -> tuple[float, np.ndarray]:
    """Full-information centralised optimum of the average cost for the sampled types.

    For a fixed offload count k the best set is the k users with the smallest
    marginal cost W/R - L/f + L·k/(N f_per), so enumerating k is exact.
    Returns (average cost, optimal decisions).
    """
    population.check_support(s.K)
    d = s.dist
    t = population.type_indices
    n = population.N
    base = d.tx_times[t] - d.local_times[t]
    local_total = float(d.local_times[t].sum())

    counts = np.arange(n + 1)
    marginal = base[None, :] + np.outer(counts, d.L[t]) / (n * s.f_per)
    ordered = np.sort(marginal, axis=1)
    prefix = np.concatenate([np.zeros((n + 1, 1)), np.cumsum(ordered, axis=1)], axis=1)
    totals = local_total + prefix[counts, counts]
    k = int(np.argmin(totals))

    decisions = np.zeros(n, dtype=np.int64)
    if k > 0:
        chosen = np.argsort(marginal[k], kind="stable")[:k]
        decisions[chosen] = 1
    return float(totals[k]) / n, decisions


# ---------------------------------------------------------------- block workers

def _exploitability_block(s: OneShotScenario, pi: tuple, n_users: int, size: int, seed: int, block: int):
    """Per deviator type j: (count, Σ h, Σ h²) with h = offload cost - local cost."""
    rng = seeding.block_rng(seed, seeding.EXPLOITABILITY, block)
    d = s.dist
    m = float(d.p @ np.asarray(pi))
    types = rng.choice(s.K, size=size, p=d.p)
    others = rng.binomial(n_users - 1, m, size=size) if n_users > 1 else np.zeros(size, dtype=np.int64)
    offload = d.tx_times[types] + d.L[types] * (others + 1) / (n_users * s.f_per)
    h = offload - d.local_times[types]
    counts = np.bincount(types, minlength=s.K).astype(float)
    s1 = np.bincount(types, weights=h, minlength=s.K)
    s2 = np.bincount(types, weights=h * h, minlength=s.K)
    return counts, s1, s2


def _coop_block(s: OneShotScenario, pi: tuple, n_users: int, size: int, seed: int, block: int):
    """(Σ c, Σ c²) of the realised population-average cost c over the block."""
    rng = seeding.block_rng(seed, seeding.COOP_DEVIATION, block)
    d = s.dist
    x = np.asarray(pi)
    probs = np.concatenate([d.p * x, d.p * (1.0 - x)])
    probs = probs / probs.sum()
    counts = rng.multinomial(n_users, probs, size=size)
    n_off, n_loc = counts[:, :s.K], counts[:, s.K:]
    offloaders = n_off.sum(axis=1)
    total = n_off @ d.tx_times + offloaders / (n_users * s.f_per) * (n_off @ d.L) + n_loc @ d.local_times
    avg = total / n_users
    return float(avg.sum()), float((avg * avg).sum())


def _knapsack_block(s: OneShotScenario, pi: tuple, n_users: int, size: int, seed: int, block: int):
    """(Σ g, Σ g²) of realised average cost minus the centralised optimum."""
    rng = seeding.block_rng(seed, seeding.KNAPSACK_GAP, block)
    policy = Policy(pi)
    total = total_sq = 0.0
    for _ in range(size):
        population = sample_population(s, policy, n_users, rng)
        realised = float(realized_costs(population, s).mean())
        optimum, _ = exact_coop_optimum(population, s)
        gap = realised - optimum
        total += gap
        total_sq += gap * gap
    return total, total_sq


def _mean_and_se(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    if n < 2:
        return mean, 0.0
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


# ---------------------------------------------------------------- evaluator

class FiniteSystemEvaluator:
    def __init__(self, cfg: Config | None = None):
        self.cfg = cfg or default_config

    def _jobs(self, s: OneShotScenario, pi: Policy, n_users: int, samples: int, seed: int):
        sizes = seeding.block_sizes(samples, self.cfg.sample_block_size)
        return [(s, pi.probs, n_users, size, seed, b) for b, size in enumerate(sizes)]

    @staticmethod
    def _validate(scenario: Scenario, pi: Policy, n_users: int, samples: int) -> OneShotScenario:
        s = resolve_mode(scenario, GameMode.ONE_SHOT)
        pi.check_aligned(s.dist)
        if n_users < 1:
            raise ValidationError("N must be >= 1")
        if samples < 1:
            raise ValidationError("samples must be >= 1")
        return s

    async def estimate_exploitability_async(
        self, scenario: Scenario, pi: Policy, n_users: int,
        samples: int | None = None, seed: int = 0, workers: int | None = None,
    ) -> FiniteEvalResult:
        """Gain of agent 1 deviating to the best pure policy while agents 2..N play π.

        The same draws serve every deviation policy; the cost under π is the
        conditional expectation over agent 1's own coin flip.
        """
        samples = samples or self.cfg.exploit_samples
        s = self._validate(scenario, pi, n_users, samples)
        if s.K > MAX_DEVIATION_TYPES or samples * 2 ** s.K > self.cfg.max_deviation_evals:
            raise BudgetError(f"{samples} samples x 2^{s.K} deviation policies exceeds the evaluation budget")

        blocks = await gather_blocks(
            _exploitability_block, self._jobs(s, pi, n_users, samples, seed),
            workers or self.cfg.workers,
        )
        s1 = np.zeros(s.K)
        s2 = np.zeros(s.K)
        for _, b1, b2 in blocks:
            s1 += b1
            s2 += b2

        x = pi.as_array()
        pure = np.array(list(itertools.product((0.0, 1.0), repeat=s.K)))
        weights = x[None, :] - pure
        gains = weights @ s1 / samples
        best = int(np.argmax(gains))
        estimate, se = _mean_and_se(
            float(weights[best] @ s1), float((weights[best] ** 2) @ s2), samples,
        )
        logger.info("Exploitability N=%d: %.6g ± %.2g (%d samples)", n_users, estimate, se, samples)
        return FiniteEvalResult(n_users, estimate, se, samples, seed, mode="exploitability")

    async def estimate_coop_deviation_async(
        self, scenario: Scenario, pi: Policy, n_users: int,
        samples: int | None = None, seed: int = 0, workers: int | None = None,
    ) -> FiniteEvalResult:
        """|E[(1/N) Σ_i cost_i] - mean-field objective| with its standard error."""
        samples = samples or self.cfg.coop_samples
        s = self._validate(scenario, pi, n_users, samples)
        blocks = await gather_blocks(
            _coop_block, self._jobs(s, pi, n_users, samples, seed), workers or self.cfg.workers,
        )
        total = sum(b[0] for b in blocks)
        total_sq = sum(b[1] for b in blocks)
        mean, se = _mean_and_se(total, total_sq, samples)
        estimate = abs(mean - cost_model.oneshot_objective(s, pi))
        logger.info("Coop deviation N=%d: %.6g ± %.2g (%d samples)", n_users, estimate, se, samples)
        return FiniteEvalResult(n_users, estimate, se, samples, seed, mode="coop-deviation")

    async def estimate_knapsack_gap_async(
        self, scenario: Scenario, pi: Policy, n_users: int,
        samples: int | None = None, seed: int = 0, workers: int | None = None,
    ) -> FiniteEvalResult:
        """Mean excess of the decentralised policy's realised cost over the
        full-information centralised optimum."""
        samples = samples or self.cfg.coop_samples
        s = self._validate(scenario, pi, n_users, samples)
        if n_users > MAX_KNAPSACK_USERS:
            raise BudgetError(f"exact centralised optimum is limited to N <= {MAX_KNAPSACK_USERS}")
        blocks = await gather_blocks(
            _knapsack_block, self._jobs(s, pi, n_users, samples, seed), workers or self.cfg.workers,
        )
        mean, se = _mean_and_se(sum(b[0] for b in blocks), sum(b[1] for b in blocks), samples)
        logger.info("Knapsack gap N=%d: %.6g ± %.2g (%d samples)", n_users, mean, se, samples)
        return FiniteEvalResult(n_users, mean, se, samples, seed, mode="knapsack-gap")

    def estimate_exploitability_N(self, scenario, pi, n_users, samples=None, seed=0, workers=None):
        return asyncio.run(self.estimate_exploitability_async(scenario, pi, n_users, samples, seed, workers))

    def estimate_coop_deviation(self, scenario, pi, n_users, samples=None, seed=0, workers=None):
        return asyncio.run(self.estimate_coop_deviation_async(scenario, pi, n_users, samples, seed, workers))

    def estimate_knapsack_gap(self, scenario, pi, n_users, samples=None, seed=0, workers=None):
        return asyncio.run(self.estimate_knapsack_gap_async(scenario, pi, n_users, samples, seed, workers))
