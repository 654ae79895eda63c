"""Competitive setting: best responses, exploitability and fictitious play."""

import logging
import time

import numpy as np

from mfoffload.config import Config, config as default_config
from mfoffload.errors import FeasibilityError, ValidationError
from mfoffload.models.configuration import Policy
from mfoffload.models.results import FictitiousPlayReport, HistoryEntry
from mfoffload.models.scenario import GameMode, Scenario, StationaryScenario
from mfoffload.services import cost_model
from mfoffload.utils.formatting import format_policy

logger = logging.getLogger(__name__)

INIT_METHODS = ("best-response", "zeros")


def resolve_mode(scenario: Scenario, mode: GameMode | str | None) -> Scenario:
    """Return the scenario to evaluate under `mode`.

    A stationary scenario may be played as a one-shot game (λ is dropped);
    the reverse needs an arrival rate and is rejected.
    """
    if mode is None:
        return scenario
    mode = GameMode(mode)
    if mode is scenario.mode:
        return scenario
    if mode is GameMode.ONE_SHOT and isinstance(scenario, StationaryScenario):
        return scenario.as_oneshot()
    raise ValidationError("a one-shot scenario has no arrival rate; stationary mode needs lambda")


def _gap_terms(scenario: Scenario, pop: Policy) -> tuple[np.ndarray, np.ndarray]:
    costs = cost_model.type_costs(scenario, pop)
    gap = costs.offload - costs.local
    # Ties resolve to local
    br = (gap < 0).astype(float)
    return br, gap


class MFGSolver:
    def __init__(self, cfg: Config | None = None):
        self.cfg = cfg or default_config

    def best_response(self, scenario: Scenario, pop: Policy, mode: GameMode | str | None = None) -> Policy:
        """Pure policy: offload iff offloading is strictly cheaper under pop's mean field."""
        scenario = resolve_mode(scenario, mode)
        br, _ = _gap_terms(scenario, pop)
        return Policy(tuple(br.tolist()))

    def exploitability(self, scenario: Scenario, pi: Policy, mode: GameMode | str | None = None) -> float:
        """ΔJ(π) = J(π; π) - min_dev J(dev; π).

        The deviator cost is linear in dev, so the minimum sits at BR(π) and
        ΔJ = Σ p_j (π_j - BR_j)(offload_j - local_j), a sum of nonnegative terms.
        """
        scenario = resolve_mode(scenario, mode)
        br, gap = _gap_terms(scenario, pi)
        return float(scenario.dist.p @ ((pi.as_array() - br) * gap))

    def _initial_policy(self, scenario: Scenario, init: str) -> Policy:
        if init not in INIT_METHODS:
            raise ValidationError(f"unknown initialisation '{init}', expected one of {INIT_METHODS}")
        zeros = Policy.zeros(scenario.K)
        if init == "zeros":
            return zeros
        first = self.best_response(scenario, zeros)
        if isinstance(scenario, StationaryScenario) and not cost_model.stationary_feasible(scenario, first):
            logger.warning(
                "Best response to the all-local mean field %s is infeasible, starting from zeros",
                format_policy(first),
            )
            return zeros
        return first

    def fictitious_play(
        self,
        scenario: Scenario,
        mode: GameMode | str | None = None,
        max_iters: int | None = None,
        tol: float | None = None,
        init: str | None = None,
    ) -> FictitiousPlayReport:
        """π_{n+1} = (n·π_{1:n} + BR(π_{1:n})) / (n+1) until ΔJ(π_{1:n}) < tol."""
        scenario = resolve_mode(scenario, mode)
        max_iters = self.cfg.fp_max_iters if max_iters is None else max_iters
        tol = self.cfg.fp_tol if tol is None else tol
        init = init or self.cfg.fp_init
        if max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if tol < 0:
            raise ValidationError("tol must be >= 0")

        p = scenario.dist.p
        avg = self._initial_policy(scenario, init).as_array().copy()
        report = FictitiousPlayReport(final_policy=Policy.from_array(avg), method="fictitious")
        start = time.monotonic()

        for n in range(1, max_iters + 1):
            current = Policy.from_array(avg)
            try:
                br, gap = _gap_terms(scenario, current)
            except FeasibilityError as e:
                logger.error("Fictitious play hit an infeasible average policy at n=%d", n)
                e.partial_report = report
                raise

            dj = float(p @ ((current.as_array() - br) * gap))
            report.exploitability_history.append(HistoryEntry(n, dj, time.monotonic() - start))
            report.policy_history.append(current)
            report.final_policy = current
            logger.debug("FP n=%d ΔJ=%.3e π=%s", n, dj, format_policy(current))

            if dj < tol:
                report.converged = True
                break
            if n < max_iters:
                avg = (n * avg + br) / (n + 1)

        logger.info(
            "Fictitious play: %d iterations, ΔJ=%.3e, π=%s (%.2fs)",
            report.iterations_run, report.final_exploitability,
            format_policy(report.final_policy), time.monotonic() - start,
        )
        return report

    def best_response_iteration(
        self,
        scenario: Scenario,
        mode: GameMode | str | None = None,
        max_iters: int = 100,
        tol: float | None = None,
    ) -> FictitiousPlayReport:
        """Naive fixed-point iteration π ← BR(π) from the all-local policy.

        Generally does not converge: with a mixed equilibrium it cycles
        between pure policies, which is reported via `cycle_detected`.
        """
        scenario = resolve_mode(scenario, mode)
        tol = self.cfg.fp_tol if tol is None else tol
        if max_iters < 1:
            raise ValidationError("max_iters must be >= 1")

        current = Policy.zeros(scenario.K)
        seen = {current.probs}
        report = FictitiousPlayReport(final_policy=current, method="best-response")
        start = time.monotonic()

        for n in range(1, max_iters + 1):
            dj = self.exploitability(scenario, current)
            report.exploitability_history.append(HistoryEntry(n, dj, time.monotonic() - start))
            report.policy_history.append(current)
            report.final_policy = current
            if dj < tol:
                report.converged = True
                break
            nxt = self.best_response(scenario, current)
            if nxt.probs in seen:
                report.cycle_detected = True
                logger.info("Best-response iteration cycles back to %s at n=%d", format_policy(nxt), n)
                break
            seen.add(nxt.probs)
            current = nxt

        logger.info(
            "Best-response iteration: %d iterations, ΔJ=%.3e, converged=%s",
            report.iterations_run, report.final_exploitability, report.converged,
        )
        return report
