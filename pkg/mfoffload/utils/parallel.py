"""Fan independent blocks of work out over a process pool."""

import asyncio
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

logger = logging.getLogger(__name__)


async def gather_blocks(fn: Callable[..., Any], jobs: Sequence[tuple], workers: int = 1) -> list[Any]:
    """Run fn(*job) for every job; results come back in job order.

    With workers <= 1 everything runs inline in this process. `fn` must be a
    module-level function so the pool can pickle it.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        logger.debug("Dispatching %d blocks to %d workers", len(jobs), workers)
        futures = [loop.run_in_executor(pool, fn, *job) for job in jobs]
        return list(await asyncio.gather(*futures))
