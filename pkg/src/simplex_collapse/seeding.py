"""Per-walk random streams.

Each walk gets its own counter-based Philox stream keyed by
``(master_seed, stream_tag, walk_id)`` through ``SeedSequence.spawn_key``, so a
walk's randomness does not depend on how walks are batched or threaded.
"""

from __future__ import annotations

import numpy as np

WALK_STREAM = 0
SDE_STREAM = 1


def walk_seed_sequence(master_seed: int, walk_id: int, stream: int = WALK_STREAM) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(walk_id)))


def walk_generator(master_seed: int, walk_id: int, stream: int = WALK_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(walk_seed_sequence(master_seed, walk_id, stream)))


def single_generator(seed: int) -> np.random.Generator:
    """Stream for a standalone walk; identical to walk 0 of ensemble ``seed``."""
    return walk_generator(seed, 0)
