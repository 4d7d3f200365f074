"""Reproducible random streams.

Every stochastic routine in the package draws from a
:class:`numpy.random.Generator` backed by the counter-based Philox
bit generator, keyed through :class:`numpy.random.SeedSequence` by the
pair ``(base_seed, stream_index)``. The pair fully determines the draw
sequence, so replications can run on any schedule (serial, threaded,
multi-process) and still produce bit-identical results.

Stream layout used by the experiment harness: replication ``r`` owns
the stream pair ``(2r, 2r + 1)``, eigenvalue draws on the even stream
and error draws on the odd one, so the two phases never share draws
and distinct replications stay disjoint. Indices at or above
``CONSTANTS_STREAM_BASE`` are reserved for moment-constant estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

_UINT64_MAX = 2**64 - 1

# Streams >= this index are reserved for asymptotic-constant estimation.
CONSTANTS_STREAM_BASE = 2**48


@dataclass(frozen=True)
class RngSeed:
    """Address of one reproducible random stream."""

    base_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("base_seed", "stream_index"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if not 0 <= value <= _UINT64_MAX:
                raise ValidationError(f"{name} must fit in an unsigned 64-bit word")

    def stream(self, index: int) -> "RngSeed":
        """Same base seed, different stream."""
        return RngSeed(self.base_seed, index)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))


def replication_streams(base_seed: int, replication: int) -> tuple[RngSeed, RngSeed]:
    """Seed pair (eigenvalue draws, error draws) for one replication."""
    return (
        RngSeed(base_seed, 2 * replication),
        RngSeed(base_seed, 2 * replication + 1),
    )
