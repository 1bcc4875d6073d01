"""Seeded random substreams.

Every random draw in the package comes from a PCG64 generator whose
``SeedSequence`` is keyed by ``(seed, stream, *key)``. Streams are named so
that adding a consumer never shifts another consumer's numbers:

=========  ==  ==========================================
stream     id  key
=========  ==  ==========================================
optimizer  0   none (one stream per optimizer run)
bundle     1   axon index
restarts   2   none (BFGS restart points)
runs       3   run index (seeds for repeated studies)
=========  ==  ==========================================
"""

import numpy as np

STREAMS = {"optimizer": 0, "bundle": 1, "restarts": 2, "runs": 3}


def _sequence(seed, stream, key):
    if stream not in STREAMS:
        raise KeyError(f"unknown random stream {stream!r}")
    return np.random.SeedSequence(int(seed), spawn_key=(STREAMS[stream], *map(int, key)))


def substream(seed, stream, *key):
    """Return an independent generator for ``(seed, stream, *key)``."""
    return np.random.Generator(np.random.PCG64(_sequence(seed, stream, key)))


def derive_seed(seed, stream, *key):
    """Derive a non-negative 63-bit integer seed from a parent seed."""
    state = _sequence(seed, stream, key).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
