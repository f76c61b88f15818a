"""Counter-based random streams.

Every source of randomness in the package is a Philox generator whose
128-bit key is derived by hashing (base seed, role tag, indices).  Streams
are therefore independent, order-insensitive and reproducible: the same
(seed, path) always yields the same draws no matter how many other streams
were consumed before it.
"""

from __future__ import annotations

import hashlib

import numpy as np

_DOMAIN = b"mrmlab-stream-v1"


def stream_key(seed: int, *path) -> np.ndarray:
    """128-bit Philox key for the stream identified by (seed, *path).

    Path components may be ints or short strings (role tags such as
    "field" or "bm").
    """
    h = hashlib.blake2b(digest_size=16, person=_DOMAIN)
    h.update(int(seed).to_bytes(8, "little"))
    for part in path:
        if isinstance(part, (int, np.integer)):
            h.update(b"i" + int(part).to_bytes(8, "little", signed=True))
        elif isinstance(part, str):
            raw = part.encode()
            h.update(b"s" + len(raw).to_bytes(2, "little") + raw)
        else:
            raise TypeError(f"stream path parts must be int or str, got {part!r}")
    digest = h.digest()
    lo = int.from_bytes(digest[:8], "little")
    hi = int.from_bytes(digest[8:], "little")
    return np.array([lo, hi], dtype=np.uint64)


def stream(seed: int, *path) -> np.random.Generator:
    """Independent Generator for the stream (seed, *path)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))
