"""Counter-based random streams.

Every trial draws from its own Philox4x64-10 generator keyed by
``(master_seed, stream_index)``, so any trial can be replayed alone and trials
can run in any order or process without changing their draws.
"""

import numpy as np

PRNG_ALGORITHM = "Philox4x64-10"
_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
