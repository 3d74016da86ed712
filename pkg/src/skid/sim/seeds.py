"""Deterministic named random streams.

Every stochastic draw in a session flows from a generator derived from the
session seed plus a tuple of names, so any component can be re-derived in
isolation and two runs with equal seeds follow identical streams.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _token_entropy(token) -> int:
    data = repr(token).encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def named_rng(seed: int, *names) -> np.random.Generator:
    entropy = [int(seed)] + [_token_entropy(n) for n in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))
