"""Deterministic random-stream derivation.

Every stochastic component in the package draws from a counter-based
generator derived from a root seed plus a path of tags, so independent
components never share a stream and the same (seed, tags) pair always
produces the same sequence regardless of call order elsewhere.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK_64 = (1 << 64) - 1


def _tag_to_int(tag: object) -> int:
    # Stable across processes: never use the builtin hash(), which is
    # salted per interpreter run for str.
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK_64
    digest = hashlib.blake2b(str(tag).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def seed_sequence(seed: int, *tags: object) -> np.random.SeedSequence:
    """Build a SeedSequence for the stream identified by (seed, *tags)."""
    entropy = [_tag_to_int(seed)] + [_tag_to_int(t) for t in tags]
    return np.random.SeedSequence(entropy)


def substream(seed: int, *tags: object) -> np.random.Generator:
    """Return an independent Generator for the stream (seed, *tags).

    Philox is counter based, so streams with distinct tag paths are
    statistically independent and cheap to spawn in any order.
    """
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *tags)))


def stream_seed(seed: int, *tags: object) -> int:
    """Collapse (seed, *tags) into a single 64-bit seed for APIs that take one."""
    return int(seed_sequence(seed, *tags).generate_state(1, np.uint64)[0])
