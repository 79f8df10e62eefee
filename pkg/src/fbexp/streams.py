"""Derivation of independent random streams from a master seed.

Every consumer (codebooks, messages, channel noise, partitions, pilots) gets
its own stream keyed by ``(master_seed, purpose, index)`` so no two of them
ever share random numbers.
"""

from __future__ import annotations

import zlib

import numpy as np

# Trials are generated in fixed-size blocks. Trial t lives in block
# t // TRIAL_BLOCK at row t % TRIAL_BLOCK, whatever the total trial count.
TRIAL_BLOCK = 4096


def _purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def derive_rng(master_seed: int, purpose: str, index: int | str = 0) -> np.random.Generator:
    if isinstance(index, str):
        index = _purpose_key(index)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(_purpose_key(purpose), int(index)))
    return np.random.default_rng(seq)


def trial_block(trial: int) -> tuple[int, int]:
    return divmod(int(trial), TRIAL_BLOCK)
