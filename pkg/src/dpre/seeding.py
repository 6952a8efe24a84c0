"""Counter-based seeding utilities.

Every random quantity in the package is a pure function of a 64-bit seed and
integer counters (replica index, time layer, lattice site).  Worker count and
batching therefore never change results: replica r of a run with master seed s
sees the same draws no matter how the replicas are scheduled.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer; a bijective avalanche mixer on uint64."""
    with np.errstate(over="ignore"):
        z = np.bitwise_xor(z, z >> np.uint64(30)) * _M1
        z = np.bitwise_xor(z, z >> np.uint64(27)) * _M2
        return np.bitwise_xor(z, z >> np.uint64(31))


def hash_chain(seed, *counters) -> np.ndarray:
    """Hash a seed with a sequence of integer counters (broadcasting).

    Each counter is absorbed with one SplitMix64 round, so distinct
    (seed, counters) tuples map to essentially independent 64-bit words.
    """
    with np.errstate(over="ignore"):
        h = mix64(np.asarray(seed, dtype=np.uint64) + _GAMMA)
        for c in counters:
            c64 = np.asarray(c).astype(np.int64).astype(np.uint64)
            h = mix64(np.bitwise_xor(h, c64) + _GAMMA)
    return h


def uniform_from_bits(h: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles strictly inside (0, 1)."""
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def replica_seeds(master_seed: int, count: int, start: int = 0) -> np.ndarray:
    """Per-replica 64-bit seeds derived from (master, index)."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    return hash_chain(np.uint64(master_seed), idx)


def replica_generator(replica_seed) -> np.random.Generator:
    """Keyed counter-based stream for one replica (Philox)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(replica_seed)))
