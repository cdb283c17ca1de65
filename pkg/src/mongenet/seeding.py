import numpy as np


def seed_sequence(seed):
    """Accept an int, a sequence of ints or a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def spawn(seed, n):
    return seed_sequence(seed).spawn(n)
