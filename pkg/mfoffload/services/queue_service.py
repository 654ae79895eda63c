"""Discrete-event simulation of the finite-N time-stationary system.

Tasks arrive as a Poisson process of rate λN. A local task is a pure delay of
L/f. An offloaded task is first a pure transmission delay W/R, then joins the
MEC pool, where every in-pool task is served at the same rate. The pool is
tracked in virtual time V (cycles received by each in-pool task so far): a
task joining with work L departs when V reaches V_join + L, so its remaining
work is always target - V.

Pool sharing disciplines:
  system  each in-pool task gets f_pool / N_tot, N_tot counting every
          offloaded task present (transmitting or in the pool); this is the
          allocation the stationary mean-field rate f_alloc describes
  pool    egalitarian processor sharing over in-pool tasks, f_pool / k

Event log lines (see write_event_log): time job_id kind pool_size n_tot work_before work_after
"""

import asyncio
import heapq
import logging
import math
from pathlib import Path
from typing import NamedTuple

import numpy as np

from mfoffload.config import Config, config as default_config
from mfoffload.errors import InsufficientSamplesError, ValidationError
from mfoffload.models.configuration import Policy
from mfoffload.models.job import EventRecord, Job, JobPhase
from mfoffload.models.results import TrajectoryEnsemble
from mfoffload.models.scenario import StationaryScenario
from mfoffload.services import cost_model
from mfoffload.utils import seeding
from mfoffload.utils.parallel import gather_blocks

logger = logging.getLogger(__name__)

POOL_SHARING = ("system", "pool")

ARRIVAL = "arrival"
TX_DONE = "tx_done"
POOL_DONE = "pool_done"
LOCAL_DONE = "local_done"


class TrajectoryRun(NamedTuple):
    ntot_over_n: np.ndarray
    events: list[EventRecord] | None
    jobs: list[Job]


def stationary_prediction(s: StationaryScenario, pi: Policy) -> float:
    """Mean-field jobs per user: λ(A + B / f_alloc) = λA + λB·λA / (f_per - λB)."""
    terms = cost_model.stationary_terms(s, pi)
    delay = cost_model.stationary_delay_factor(s, pi)  # raises when infeasible
    if terms.A == 0:
        return 0.0
    return s.lam * terms.A + s.lam * terms.B * delay


def simulate_trajectory(
    s: StationaryScenario,
    pi: Policy,
    n_users: int,
    horizon: float,
    grid: np.ndarray,
    seed: int,
    trajectory: int = 0,
    include_local: bool = False,
    pool_sharing: str = "system",
    record_events: bool = False,
) -> TrajectoryRun:
    """One trajectory from an empty system, sampled on `grid` as N_tot(t)/N."""
    if n_users < 1:
        raise ValidationError("N must be >= 1")
    if not horizon > 0:
        raise ValidationError("horizon must be positive")
    if pool_sharing not in POOL_SHARING:
        raise ValidationError(f"pool_sharing must be one of {POOL_SHARING}")
    pi.check_aligned(s.dist)
    grid = np.asarray(grid, dtype=float)

    rng = seeding.block_rng(seed, seeding.QUEUE_TRAJECTORY, trajectory)
    d = s.dist
    count = rng.poisson(s.lam * n_users * horizon)
    arrival_times = np.sort(rng.uniform(0.0, horizon, size=count))
    arrival_types = rng.choice(d.K, size=count, p=d.p)
    arrival_offload = rng.random(count) < pi.as_array()[arrival_types]

    f_pool = s.f_pool(n_users)
    now = 0.0
    virtual = 0.0
    timers: list[tuple[float, int]] = []   # (completion time, job id)
    pool: list[tuple[float, int]] = []     # (virtual-time target, job id)
    active: dict[int, Job] = {}
    jobs: list[Job] = []
    n_tot = 0
    n_local = 0
    events: list[EventRecord] | None = [] if record_events else None

    out = np.zeros(len(grid))
    g = 0

    def rate() -> float:
        if not pool:
            return 0.0
        return f_pool / (n_tot if pool_sharing == "system" else len(pool))

    def pool_work() -> float:
        return math.fsum(target - virtual for target, _ in pool)

    def observed() -> int:
        return n_tot + (n_local if include_local else 0)

    a = 0
    while True:
        t_arrival = arrival_times[a] if a < count else math.inf
        t_timer = timers[0][0] if timers else math.inf
        r = rate()
        t_pool = now + max(pool[0][0] - virtual, 0.0) / r if pool else math.inf

        # Completions before arrivals at equal times, then lower job id
        t_done = min(t_timer, t_pool)
        if math.isinf(t_arrival) and math.isinf(t_done):
            break
        if t_arrival < t_done:
            t_next, kind = t_arrival, ARRIVAL
        elif t_timer < t_pool or (t_timer == t_pool and timers[0][1] < pool[0][1]):
            t_next, kind = t_timer, "timer"
        else:
            t_next, kind = t_pool, POOL_DONE
        if t_next > horizon:
            break

        while g < len(grid) and grid[g] < t_next:
            out[g] = observed()
            g += 1

        if pool:
            virtual += r * (t_next - now)
        now = t_next
        before = pool_work() if record_events else 0.0

        if kind == ARRIVAL:
            j = int(arrival_types[a])
            job = Job(
                id=a, type_index=j, offloaded=bool(arrival_offload[a]), arrival_time=now,
                phase=JobPhase.TRANSMITTING if arrival_offload[a] else JobPhase.LOCAL,
            )
            if job.offloaded:
                job.completion_time = now + d.tx_times[j]
                n_tot += 1
            else:
                job.completion_time = now + d.local_times[j]
                n_local += 1
            heapq.heappush(timers, (job.completion_time, job.id))
            active[job.id] = job
            jobs.append(job)
            a += 1
        elif kind == "timer":
            _, job_id = heapq.heappop(timers)
            job = active[job_id]
            if job.phase is JobPhase.TRANSMITTING:
                job.advance(JobPhase.IN_POOL)
                job.work = float(d.L[job.type_index])
                job.service_target = virtual + job.work
                heapq.heappush(pool, (job.service_target, job.id))
                kind = TX_DONE
            else:
                job.advance(JobPhase.DONE)
                job.departure_time = now
                del active[job_id]
                n_local -= 1
                kind = LOCAL_DONE
        else:
            _, job_id = heapq.heappop(pool)
            job = active.pop(job_id)
            job.advance(JobPhase.DONE)
            job.departure_time = now
            n_tot -= 1
            # Guard against drift: the remaining pool work is measured from the departing target
            if not pool:
                virtual = job.service_target

        if record_events:
            events.append(EventRecord(now, job.id, kind, len(pool), n_tot, before, pool_work()))

    while g < len(grid):
        out[g] = observed()
        g += 1

    return TrajectoryRun(out / n_users, events, jobs)


def _trajectory_block(s, pi, n_users, horizon, grid, seed, first, size, include_local, pool_sharing):
    rows = [
        simulate_trajectory(
            s, pi, n_users, horizon, grid, seed, trajectory=first + i,
            include_local=include_local, pool_sharing=pool_sharing,
        ).ntot_over_n
        for i in range(size)
    ]
    return np.vstack(rows)


def write_event_log(events: list[EventRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(EventRecord._fields)]
    for e in events:
        lines.append(
            f"{e.time!r} {e.job_id} {e.kind} {e.pool_size} {e.n_tot} {e.work_before!r} {e.work_after!r}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class QueueSimulator:
    def __init__(self, cfg: Config | None = None):
        self.cfg = cfg or default_config

    def default_horizon(self, s: StationaryScenario) -> float:
        return self.cfg.sim_horizon_factor / s.lam

    def default_grid(self, horizon: float, points: int | None = None) -> np.ndarray:
        return np.linspace(0.0, horizon, points or self.cfg.sim_grid_points)

    async def run_ensemble_async(
        self,
        s: StationaryScenario,
        pi: Policy,
        n_users: int,
        horizon: float | None = None,
        grid: np.ndarray | None = None,
        trajectories: int | None = None,
        seed: int = 0,
        include_local: bool = False,
        pool_sharing: str | None = None,
        workers: int | None = None,
    ) -> TrajectoryEnsemble:
        """Mean N_tot/N per grid point with a 68% CI half-width of std / sqrt(trajectories)."""
        trajectories = trajectories or self.cfg.sim_trajectories
        if trajectories < 2:
            raise InsufficientSamplesError("a confidence interval needs at least 2 trajectories")
        horizon = horizon or self.default_horizon(s)
        grid = self.default_grid(horizon) if grid is None else np.asarray(grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("time grid must be strictly increasing")
        pool_sharing = pool_sharing or self.cfg.pool_sharing
        if not cost_model.stationary_feasible(s, pi):
            logger.warning("Policy %s violates the stability constraint; expect growth", pi.probs)

        jobs = []
        first = 0
        for size in seeding.block_sizes(trajectories, self.cfg.trajectory_block_size):
            jobs.append((s, pi, n_users, horizon, grid, seed, first, size, include_local, pool_sharing))
            first += size
        blocks = await gather_blocks(_trajectory_block, jobs, workers or self.cfg.workers)
        values = np.vstack(blocks)

        mean = values.mean(axis=0)
        ci = values.std(axis=0, ddof=1) / math.sqrt(trajectories)
        logger.info(
            "Ensemble N=%d: %d trajectories, tail mean N_tot/N = %.5f",
            n_users, trajectories, float(mean[grid >= horizon / 2].mean()),
        )
        return TrajectoryEnsemble(grid, mean, ci, trajectories, n_users)

    def run_ensemble(self, s, pi, n_users, horizon=None, grid=None, trajectories=None, seed=0, **kwargs):
        return asyncio.run(self.run_ensemble_async(s, pi, n_users, horizon, grid, trajectories, seed, **kwargs))
