"""Counter-based random streams so shot parallelism cannot change results.

Shots are cut into fixed-size blocks. Block b always draws from
``SeedSequence(master_seed, spawn_key=(b,))`` regardless of how many
threads run the blocks, and block results are reassembled in block order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

SHOTS_PER_BLOCK = 1024

T = TypeVar("T")


def block_rng(master_seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(block,)))


def block_sizes(total: int, per_block: int = SHOTS_PER_BLOCK) -> list[int]:
    if total < 0:
        raise ValueError("total must be >= 0")
    full, rest = divmod(total, per_block)
    return [per_block] * full + ([rest] if rest else [])


def run_blocks(
    fn: Callable[[int, np.random.Generator], T],
    total: int,
    master_seed: int,
    threads: int = 1,
    per_block: int = SHOTS_PER_BLOCK,
) -> list[T]:
    """Call ``fn(count, rng)`` once per block and return results in block order."""
    sizes = block_sizes(total, per_block)
    jobs = [(size, block_rng(master_seed, b)) for b, size in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [fn(size, rng) for size, rng in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
