import numpy as np
import pytest

import rolekit as rk

CYCLE3 = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
# five roles: a 3-cycle of blocks plus two self-referential blocks; in the
# noiseless case all pairwise factor-row inner products are exactly 0 or 1
BLOCKS5 = [[0, 1, 0, 0, 0],
           [0, 0, 1, 0, 0],
           [1, 0, 0, 0, 0],
           [0, 0, 0, 1, 0],
           [0, 0, 0, 0, 1]]


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture
def cycle3_noiseless():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[50, 50, 50], p_in=1.0,
                            p_out=0.0, seed=7)
    return rk.generate_planted(spec)


@pytest.fixture
def cycle3_noisy():
    spec = rk.BenchmarkSpec(B=CYCLE3, sizes=[50, 50, 50], p_in=0.9,
                            p_out=0.1, seed=3)
    return rk.generate_planted(spec)
