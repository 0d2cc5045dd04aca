"""Seeded random streams.

All randomness in the package flows from a single user seed through named
substreams, so results do not depend on call order or thread schedule.  A
substream is identified by a tuple of string labels; the labels are hashed
with a stable digest (not Python's randomized hash) into SeedSequence entropy.
"""

import hashlib

import numpy as np

__all__ = ["substream"]


def _label_entropy(labels: tuple[str, ...]) -> list[int]:
    digest = hashlib.blake2b("\x1f".join(labels).encode(), digest_size=16).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, *labels: str) -> np.random.Generator:
    """Generator for the named substream of ``seed``.

    Identical (seed, labels) always yields the identical stream; distinct
    labels give independent streams.
    """
    entropy = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    entropy.extend(_label_entropy(tuple(str(l) for l in labels)))
    return np.random.default_rng(np.random.SeedSequence(entropy))
