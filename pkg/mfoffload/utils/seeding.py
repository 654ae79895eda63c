"""Counter-based seed derivation.

Every random stream is addressed by (root seed, component id, block index),
so a block draws the same numbers no matter which worker runs it or how
many workers there are.
"""

import numpy as np

EXPLOITABILITY = 1
COOP_DEVIATION = 2
KNAPSACK_GAP = 3
QUEUE_TRAJECTORY = 4

SEED_MASK = (1 << 64) - 1


def block_rng(seed: int, component: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed & SEED_MASK, spawn_key=(component, index))
    return np.random.default_rng(ss)


def block_sizes(total: int, block_size: int) -> list[int]:
    """Split `total` into fixed-size blocks (the last one may be short)."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    full, rest = divmod(total, block_size)
    return [block_size] * full + ([rest] if rest else [])
