"""
SBRO-FL Seeding - independent child seeds from one base seed
"""
from __future__ import annotations

import numpy as np


def derive_seed(base: int, *keys: int | str) -> int:
    """
    Derive a reproducible child seed.

    String keys are hashed byte-wise so labels such as "train" or "bootstrap"
    can name the stream; the result only depends on (base, keys).

    Args:
        base: Base (scenario or algorithmic) seed
        *keys: Stream labels and indices, e.g. ("train", round, client_id)

    Returns:
        Unsigned 63-bit seed
    """
    entropy: list[int] = [int(base)]
    for key in keys:
        if isinstance(key, str):
            entropy.extend(key.encode("utf-8"))
        else:
            entropy.append(int(key))
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def rng_for(base: int, *keys: int | str) -> np.random.Generator:
    """Shorthand for a Generator seeded with derive_seed(base, *keys)."""
    return np.random.default_rng(derive_seed(base, *keys))
