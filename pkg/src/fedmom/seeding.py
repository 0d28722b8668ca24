"""Derived random streams keyed by (seed, round, client, ...)."""

import numpy as np

# Stream tags keep independent consumers of the same (seed, round) apart.
STREAM_SELECT = 1
STREAM_SHUFFLE = 2
STREAM_PARTITION = 3
STREAM_INIT = 4


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Return a generator that depends only on ``seed`` and ``keys``.

    Parallel clients each get their own stream, so results do not depend on
    scheduling order.
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
