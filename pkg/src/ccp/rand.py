"""Deterministic random stream derivation.

Every stochastic routine in the package takes an integer seed and derives
its own substreams from it, so repeated calls with the same arguments are
bit-identical and independent routines never share a stream.
"""

import numpy as np

from .errors import InputError


def _as_entropy(seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InputError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


def substream(seed, *path):
    """Generator for the substream identified by (seed, *path)."""
    entropy = [_as_entropy(seed)] + [_as_entropy(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derived_seed(seed, *path):
    """Integer seed for the substream identified by (seed, *path).

    Useful when a routine wants to hand a plain int seed to a callee
    while keeping the overall derivation tree deterministic.
    """
    entropy = [_as_entropy(seed)] + [_as_entropy(p) for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
