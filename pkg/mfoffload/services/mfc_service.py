"""Cooperative setting: the one-shot quadratic program, grid search with
projected-gradient refinement, and the stationary mean-field control problem."""

import logging
import math
import time
from collections.abc import Callable

import numpy as np

from mfoffload.config import Config, config as default_config
from mfoffload.errors import AlignmentError, BudgetError, FeasibilityError, ValidationError
from mfoffload.models.configuration import Policy
from mfoffload.models.results import ComparisonReport, OptimizationResult, QuadraticProgram
from mfoffload.models.scenario import GameMode, OneShotScenario, Scenario
from mfoffload.services import cost_model
from mfoffload.services.mfg_service import MFGSolver, resolve_mode
from mfoffload.utils.formatting import format_policy

logger = logging.getLogger(__name__)

GRID_CHUNK = 200_000
ARMIJO_SIGMA = 1e-4
FD_STEP = 1e-6
MIN_STEP = 1e-20

BatchObjective = Callable[[np.ndarray], np.ndarray]
ScalarObjective = Callable[[np.ndarray], float]


# ---------------------------------------------------------------- quadratic program

def assemble_qp(s: OneShotScenario) -> QuadraticProgram:
    """Q_jk = p_j p_k L_j / f_per, c_j = p_j (W_j/R_j - L_j/f_j), constant = Σ p_j L_j/f_j."""
    d = s.dist
    Q = np.outer(d.p * d.L, d.p) / s.f_per
    c = d.p * d.tx_times - d.p * d.local_times
    constant = float(d.p @ d.local_times)
    return QuadraticProgram(Q=Q, c=c, constant=constant)


def _as_vector(qp: QuadraticProgram, pi) -> np.ndarray:
    x = pi.as_array() if isinstance(pi, Policy) else np.asarray(pi, dtype=float)
    if x.shape != (qp.K,):
        raise AlignmentError(f"policy of shape {x.shape} for a QP of dimension {qp.K}")
    return x


def qp_objective(qp: QuadraticProgram, pi) -> float:
    x = _as_vector(qp, pi)
    return float(x @ qp.Q @ x + qp.c @ x + qp.constant)


def qp_gradient(qp: QuadraticProgram, pi) -> np.ndarray:
    x = _as_vector(qp, pi)
    return (qp.Q + qp.Q.T) @ x + qp.c


# ---------------------------------------------------------------- grid search

def lattice(resolution: float) -> np.ndarray:
    """{0, r, 2r, ..., 1}; 1 is appended when r does not divide it."""
    if not (0 < resolution <= 1):
        raise ValidationError(f"resolution must lie in (0, 1], got {resolution!r}")
    n = round(1.0 / resolution)
    if abs(n * resolution - 1.0) <= 1e-9:
        return np.linspace(0.0, 1.0, n + 1)
    points = np.arange(0.0, 1.0, resolution)
    return np.append(points, 1.0)


def _better(a: tuple[float, int], b: tuple[float, int]) -> tuple[float, int]:
    """Order-independent reduction: lower value, then lower lexicographic index."""
    return a if a <= b else b


def grid_search(
    objective: BatchObjective,
    k: int,
    resolution: float,
    cap: int = 100_000_000,
    vectorized: bool = True,
) -> OptimizationResult:
    """Minimise over the lattice {0, r, ..., 1}^K. +inf values are skipped;
    ties go to the lexicographically smallest lattice point."""
    if k < 1:
        raise ValidationError("K must be >= 1")
    axis = lattice(resolution)
    n = len(axis)
    total = n ** k
    if total > cap:
        raise BudgetError(f"grid of {n}^{k} = {total} points exceeds the cap of {cap}")
    if not vectorized:
        scalar = objective
        objective = lambda pts: np.array([scalar(row) for row in pts], dtype=float)  # noqa: E731

    best = (math.inf, total)
    for start in range(0, total, GRID_CHUNK):
        idx = np.arange(start, min(start + GRID_CHUNK, total))
        coords = np.stack(np.unravel_index(idx, (n,) * k), axis=1)
        values = np.asarray(objective(axis[coords]), dtype=float)
        values = np.where(np.isnan(values), np.inf, values)
        j = int(np.argmin(values))
        if np.isfinite(values[j]):
            best = _better(best, (float(values[j]), int(idx[j])))

    value, flat = best
    if not math.isfinite(value):
        raise FeasibilityError("every lattice point is infeasible")
    point = axis[np.array(np.unravel_index(flat, (n,) * k))]
    return OptimizationResult(argmin=Policy.from_array(point), value=value, evaluations=total)


# ---------------------------------------------------------------- local refinement

def numeric_gradient(objective: ScalarObjective, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences, one-sided at the box faces or next to infeasible points."""
    g = np.zeros_like(x)
    f0 = None
    for j in range(len(x)):
        up, down = x.copy(), x.copy()
        up[j] = min(x[j] + h, 1.0)
        down[j] = max(x[j] - h, 0.0)
        f_up, f_down = objective(up), objective(down)
        if not math.isfinite(f_up) or not math.isfinite(f_down):
            if f0 is None:
                f0 = objective(x)
            if math.isfinite(f_up):
                f_down, down = f0, x
            elif math.isfinite(f_down):
                f_up, up = f0, x
            else:
                continue
        width = up[j] - down[j]
        if width > 0:
            g[j] = (f_up - f_down) / width
    return g


def refine_local(
    objective: ScalarObjective,
    gradient: Callable[[np.ndarray], np.ndarray] | None,
    start: Policy,
    tol: float = 1e-10,
    max_steps: int = 10_000,
) -> OptimizationResult:
    """Projected gradient descent with Armijo backtracking on [0, 1]^K.

    The objective never increases; stops when ||x - P(x - ∇f)|| < tol, when
    no decrease can be found, or after max_steps.
    """
    calls = 0

    def f(x: np.ndarray) -> float:
        nonlocal calls
        calls += 1
        return float(objective(x))

    grad = gradient or (lambda x: numeric_gradient(f, x))

    x = start.as_array().copy()
    fx = f(x)
    if not math.isfinite(fx):
        raise FeasibilityError(f"refinement start {format_policy(start)} is infeasible", policy=start)

    step = 1.0
    for _ in range(max_steps):
        g = grad(x)
        if np.linalg.norm(x - np.clip(x - g, 0.0, 1.0)) < tol:
            break
        t = step
        accepted = False
        while t >= MIN_STEP:
            x_new = np.clip(x - t * g, 0.0, 1.0)
            f_new = f(x_new)
            if math.isfinite(f_new) and f_new <= fx + ARMIJO_SIGMA * float(g @ (x_new - x)):
                accepted = True
                break
            t *= 0.5
        if not accepted or f_new >= fx:
            break
        x, fx = x_new, f_new
        step = min(1.0, 2.0 * t)

    return OptimizationResult(argmin=Policy.from_array(x), value=fx, evaluations=calls, refined=True)


# ---------------------------------------------------------------- solver

class MFCSolver:
    def __init__(self, cfg: Config | None = None):
        self.cfg = cfg or default_config

    def _scalar_objective(self, scenario: Scenario) -> ScalarObjective:
        def evaluate(x: np.ndarray) -> float:
            try:
                return cost_model.objective(scenario, Policy.from_array(x))
            except FeasibilityError:
                return math.inf
        return evaluate

    def solve_mfc(
        self,
        scenario: Scenario,
        mode: GameMode | str | None = None,
        resolution: float | None = None,
        refine: bool | None = None,
    ) -> OptimizationResult:
        """Grid search, optional projected-gradient refinement, then re-evaluation
        of the winner through the model-core objective."""
        scenario = resolve_mode(scenario, mode)
        resolution = resolution or self.cfg.default_resolution(scenario.K)
        refine = self.cfg.refine if refine is None else refine
        started = time.monotonic()

        result = grid_search(
            lambda pts: cost_model.objective_batch(scenario, pts),
            scenario.K, resolution, cap=self.cfg.grid_cap,
        )
        evaluations = result.evaluations
        logger.info(
            "Grid search (r=%g, %d points): π=%s value=%.8f",
            resolution, evaluations, format_policy(result.argmin), result.value,
        )

        argmin, refined = result.argmin, False
        if refine:
            if scenario.mode is GameMode.ONE_SHOT:
                qp = assemble_qp(scenario)
                objective, gradient = (lambda x: qp_objective(qp, x)), (lambda x: qp_gradient(qp, x))
            else:
                objective, gradient = self._scalar_objective(scenario), None
            local = refine_local(
                objective, gradient, result.argmin,
                tol=self.cfg.refine_tol, max_steps=self.cfg.refine_max_steps,
            )
            evaluations += local.evaluations
            if local.value <= result.value:
                argmin, refined = local.argmin, True

        value = cost_model.objective(scenario, argmin)
        logger.info(
            "MFC solution: π=%s value=%.10f (refined=%s, %.2fs)",
            format_policy(argmin), value, refined, time.monotonic() - started,
        )
        return OptimizationResult(argmin=argmin, value=value, evaluations=evaluations, refined=refined)

    def lattice_surface(self, scenario: Scenario, resolution: float) -> tuple[np.ndarray, np.ndarray]:
        """All lattice points with their objective values (infeasible = inf), K <= 2 only."""
        if scenario.K > 2:
            raise ValidationError("lattice dumps are limited to K <= 2")
        axis = lattice(resolution)
        mesh = np.meshgrid(*([axis] * scenario.K), indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        return points, cost_model.objective_batch(scenario, points)

    def compare(
        self,
        scenario: Scenario,
        resolution: float | None = None,
        mfg: MFGSolver | None = None,
    ) -> ComparisonReport:
        """Social cost of the selfish equilibrium against the cooperative optimum."""
        mfg = mfg or MFGSolver(self.cfg)
        report = mfg.fictitious_play(scenario)
        optimum = self.solve_mfc(scenario, resolution=resolution)
        equilibrium_cost = cost_model.objective(scenario, report.final_policy)
        logger.info(
            "Equilibrium cost %.6f vs cooperative optimum %.6f",
            equilibrium_cost, optimum.value,
        )
        return ComparisonReport(
            equilibrium=report.final_policy,
            equilibrium_cost=equilibrium_cost,
            equilibrium_exploitability=report.final_exploitability,
            optimum=optimum.argmin,
            optimum_cost=optimum.value,
        )
