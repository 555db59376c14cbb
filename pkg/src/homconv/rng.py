"""Seeding utilities shared by every stochastic step in the pipeline.

A single 64-bit master seed drives splits, bootstrap row draws, weight
initialization, dropout and hyperparameter sampling.  Sub-streams are
derived with a splitmix64 mix so that derived seeds are order-independent
and replayable, and each derived seed feeds a numpy PCG64 generator.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags keep the per-purpose sub-seeds of one master seed apart.
STREAM_SPLIT = 0x01
STREAM_BOOTSTRAP = 0x02
STREAM_INIT = 0x03
STREAM_TRAIN = 0x04
STREAM_SEARCH = 0x05


def splitmix64(x: int) -> int:
    """One splitmix64 output step (finalizer of the input state)."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the `index`-th sub-seed of `master_seed`.

    Pure function of its two arguments, so derived streams can be
    consumed in any order (replicas are parallelizable).
    """
    return splitmix64((master_seed & _MASK64) ^ splitmix64(index & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a (possibly derived) 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
