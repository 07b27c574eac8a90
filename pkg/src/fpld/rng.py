"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
``(seed, purpose tag, index)``. Streams for different trials never share
state, so trials can run in any order (or concurrently) and still give
identical results.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_word(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Return an independent generator for ``(seed, tag, index)``."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    seq = np.random.SeedSequence([int(seed) & _MASK64, _tag_word(tag), int(index)])
    return np.random.Generator(np.random.Philox(seq))


def streams(seed: int, tag: str, count: int, start: int = 0) -> list[np.random.Generator]:
    return [stream(seed, tag, start + i) for i in range(count)]
