"""Keyed random streams.

Every stochastic choice in the library draws from a counter-based generator
keyed by (master seed, purpose tag, index...). Streams are therefore
independent of evaluation order and of each other, which is what makes
simulated runs replayable byte-for-byte.
"""
from __future__ import annotations

from numpy.random import Generator, Philox, SeedSequence

__all__ = ["Purpose", "stream"]


class Purpose:
    """Stream namespace tags. Values are part of the replay contract."""

    TOPOLOGY = 1
    PRESET = 2
    ACTIVATION = 3
    DELAY = 4
    GRADIENT = 5
    EVAL = 6
    BLOCK = 7
    DELAY_SCHEDULE = 8
    ORACLE_NOISE = 9


def stream(master_seed: int, purpose: int, *indices: int) -> Generator:
    """Return a fresh generator for the given key.

    Identical keys give identical streams; distinct keys give streams that are
    independent for all practical purposes (Philox counter keying via
    SeedSequence).
    """
    key = (int(master_seed), int(purpose)) + tuple(int(i) for i in indices)
    return Generator(Philox(SeedSequence(key)))
