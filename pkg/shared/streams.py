from typing import Tuple

import numpy as np


def make_stream(seed: int, *key: int) -> np.random.Generator:
    """
    Returns a Philox (counter-based) generator for the stream identified by
    (seed, key). Equal (seed, key) pairs always give identical draws, so a
    batch's randomness never depends on which worker runs it.
    """
    seed_seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seed_seq))


def batch_slices(total: int, batch_size: int) -> Tuple[Tuple[int, int], ...]:
    """Fixed (start, stop) batches covering range(total)."""
    batch_size = max(1, int(batch_size))
    return tuple(
        (start, min(start + batch_size, total)) for start in range(0, total, batch_size)
    )
