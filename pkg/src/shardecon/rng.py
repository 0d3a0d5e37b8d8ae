"""Keyed random substreams.

Every draw is addressed by ``(seed, agent id, height, purpose)``, so results
do not depend on the order agents are visited in or on how work is split
across threads.
"""

from __future__ import annotations

import hashlib
import random


def _key_bytes(seed: int, key: tuple) -> bytes:
    return repr((seed, *key)).encode()


def substream(seed: int, *key) -> random.Random:
    digest = hashlib.blake2b(_key_bytes(seed, key), digest_size=16).digest()
    return random.Random(int.from_bytes(digest, "big"))


def unit(seed: int, *key) -> float:
    """One uniform draw in [0, 1) for the given key, without building a Random."""
    digest = hashlib.blake2b(_key_bytes(seed, key), digest_size=8).digest()
    return (int.from_bytes(digest, "big") >> 11) * (1.0 / (1 << 53))
