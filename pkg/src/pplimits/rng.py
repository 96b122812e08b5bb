"""Seed-stream derivation for reproducible, order-independent Monte Carlo.

Every sampler in the package draws from a generator derived from an
integer seed plus a tuple of integer keys (replicate index, grid position,
task id, ...).  Two calls with the same keys always produce the same
stream, no matter which worker runs them or in which order, so replicate
batches can be farmed out freely without breaking byte-level determinism.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_rng", "replicate_rngs", "subseeds"]


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a fresh Generator keyed by (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), *map(int, keys))))


def subseeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent integer seeds for distinct sampler roles.

    Used when one experiment drives several samplers that must not share
    replicate streams (e.g. array rows vs the reference-law sampler).
    """
    state = np.random.SeedSequence(int(seed)).generate_state(count, dtype=np.uint64)
    return [int(v) for v in state]


def replicate_rngs(seed: int, start: int, stop: int, *keys: int):
    """Yield (index, Generator) for replicate indices in [start, stop)."""
    for r in range(start, stop):
        yield r, derive_rng(seed, r, *keys)
