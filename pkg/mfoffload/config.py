import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass
class Config:
    # Logging
    log_dir: str = "logs"
    log_level: str = "INFO"

    # Parallelism (1 = run blocks inline)
    workers: int = 1
    sample_block_size: int = 1000
    trajectory_block_size: int = 50

    # Fictitious play
    fp_max_iters: int = 5000
    fp_tol: float = 1e-6
    fp_init: str = "best-response"

    # Cooperative solver
    grid_cap: int = 100_000_000
    refine: bool = True
    refine_tol: float = 1e-10
    refine_max_steps: int = 10_000

    # Finite-N Monte Carlo
    exploit_samples: int = 100_000
    coop_samples: int = 20_000
    max_deviation_evals: float = 1e10

    # Queue simulation
    sim_trajectories: int = 5000
    sim_grid_points: int = 200
    sim_horizon_factor: float = 40.0
    pool_sharing: str = "system"

    def default_resolution(self, k: int) -> float:
        """Grid spacing used when the caller does not pass one."""
        if k <= 3:
            return 0.01
        if k <= 6:
            return 0.05
        return 0.1

    @classmethod
    def from_env(cls) -> "Config":
        return cls(
            log_dir=os.getenv("LOG_DIR", "logs"),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            workers=int(os.getenv("MFOFFLOAD_WORKERS", "1")),
            sample_block_size=int(os.getenv("MFOFFLOAD_BLOCK_SIZE", "1000")),
            trajectory_block_size=int(os.getenv("MFOFFLOAD_TRAJECTORY_BLOCK_SIZE", "50")),
            fp_max_iters=int(os.getenv("MFOFFLOAD_FP_MAX_ITERS", "5000")),
            fp_tol=float(os.getenv("MFOFFLOAD_FP_TOL", "1e-6")),
            fp_init=os.getenv("MFOFFLOAD_FP_INIT", "best-response"),
            grid_cap=int(float(os.getenv("MFOFFLOAD_GRID_CAP", "1e8"))),
            refine=os.getenv("MFOFFLOAD_REFINE", "true").lower() == "true",
            refine_tol=float(os.getenv("MFOFFLOAD_REFINE_TOL", "1e-10")),
            refine_max_steps=int(os.getenv("MFOFFLOAD_REFINE_MAX_STEPS", "10000")),
            exploit_samples=int(os.getenv("MFOFFLOAD_EXPLOIT_SAMPLES", "100000")),
            coop_samples=int(os.getenv("MFOFFLOAD_COOP_SAMPLES", "20000")),
            max_deviation_evals=float(os.getenv("MFOFFLOAD_MAX_DEVIATION_EVALS", "1e10")),
            sim_trajectories=int(os.getenv("MFOFFLOAD_SIM_TRAJECTORIES", "5000")),
            sim_grid_points=int(os.getenv("MFOFFLOAD_SIM_GRID_POINTS", "200")),
            sim_horizon_factor=float(os.getenv("MFOFFLOAD_SIM_HORIZON_FACTOR", "40")),
            pool_sharing=os.getenv("MFOFFLOAD_POOL_SHARING", "system"),
        )


config = Config.from_env()
