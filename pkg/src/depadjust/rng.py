"""Counter-based random substreams.

Each stream is a Philox generator whose key is the user seed and whose
counter encodes ``(domain, index)``. Streams for different indices never
overlap in practice, so work keyed by index (trial, permutation, tree)
gives identical results in any evaluation order.
"""

import numpy as np

_MASK = (1 << 128) - 1

# domain tags, one per consumer
PERMUTATION = 1
TRIAL = 2
SAMPLE = 3
TREE = 4
SPLIT = 5
MISC = 6


def substream(seed: int, index: int, domain: int = MISC) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=int(seed) & _MASK, counter=[0, 0, int(domain), int(index)])
    )
