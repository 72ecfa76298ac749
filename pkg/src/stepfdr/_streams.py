"""Counter-based random substreams.

Replication ``r`` is drawn from block ``r // BLOCK_SIZE``; each block owns a
generator keyed by ``(seed, block)`` through :class:`numpy.random.SeedSequence`
hashing. Results therefore never depend on how blocks are scheduled.
"""
import numpy as np

BLOCK_SIZE = 4096


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(block),))
    return np.random.Generator(np.random.PCG64(ss))


def block_ranges(reps: int):
    """Yield ``(block, start, stop)`` covering ``range(reps)``."""
    for block, start in enumerate(range(0, reps, BLOCK_SIZE)):
        yield block, start, min(start + BLOCK_SIZE, reps)
