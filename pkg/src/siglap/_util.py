"""Internal helpers."""

import numpy as np


def as_seed_sequence(seed):
    """Accept an int, None, or an existing SeedSequence interchangeably."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)
