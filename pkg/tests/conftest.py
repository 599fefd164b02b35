import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kspin import InteractionTensor


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sparse_tensor(p, k, n_edges, scale, seed) -> InteractionTensor:
    """Random sparse model with weights uniform in +/-[scale/2, scale]."""
    import itertools

    rng = np.random.default_rng(seed)
    pool = list(itertools.combinations(range(1, p + 1), k))
    picks = rng.choice(len(pool), size=min(n_edges, len(pool)), replace=False)
    entries = {}
    for i in picks:
        mag = rng.uniform(scale / 2, scale)
        entries[pool[i]] = float(mag * (1 if rng.random() < 0.5 else -1))
    return InteractionTensor(p, k, entries)
