"""Per-replication seed derivation.

A replication's generator is seeded from the tuple
``(base_seed, scenario_index, m, n, rep, stream)`` through
:class:`numpy.random.SeedSequence`, which hashes the whole tuple into the
PCG64 state.  Any single replication can therefore be rerun in isolation,
and runs are reproducible regardless of execution order.
"""

from __future__ import annotations

import numpy as np

TRAIN = 0
TEST = 1


def replication_seed(base_seed: int, scenario_index: int, m: int, n: int, rep: int,
                     stream: int = TRAIN) -> np.random.SeedSequence:
    key = (base_seed, scenario_index, m, n, rep, stream)
    if any(int(k) < 0 for k in key):
        raise ValueError(f"seed components must be nonnegative, got {key}")
    return np.random.SeedSequence([int(k) for k in key])
