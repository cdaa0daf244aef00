"""Reproducible counter-based random-number streams for parallel Monte Carlo.

A stream is identified by ``(master_seed, stream)``.  The pair keys a Philox
counter-based bit generator, so streams with distinct keys are statistically
independent and a given key always reproduces the same sequence, bit for bit,
no matter how trials are scheduled across threads.  Per-trial streams (stream
= trial index) are therefore the unit of reproducibility: merging results by
trial index gives output that cannot depend on the thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream"]


@dataclass(frozen=True)
class RngStream:
    """Key of one reproducible stream: 64-bit master seed + stream index.

    The Philox counter (128-bit, advanced per draw) lives inside the bit
    generator returned by :meth:`generator`; fresh generators for the same
    key restart the counter at zero and replay the identical sequence.
    """

    master_seed: int
    stream: int

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if not (0 <= self.stream < 2**64):
            raise ValueError("stream index must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        """Fresh generator at counter zero for this (seed, stream) key."""
        return np.random.Generator(np.random.Philox(key=np.array([self.master_seed, self.stream], dtype=np.uint64)))

    def child(self, stream: int) -> "RngStream":
        """Stream with the same master seed and a different stream index."""
        return RngStream(self.master_seed, stream)
