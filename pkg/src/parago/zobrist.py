"""Zobrist keys for whole-board position hashing.

One fixed table is generated at import time from a hard-coded seed so that
position hashes are reproducible across runs and processes.  Keys are indexed
by ``(color, row * 19 + col)``, which makes them valid for every board size
up to 19 and stable when the same coordinates appear on different sizes.

The hash covers stone placement only (not the side to move): the superko
rule enforced by the rules engine is positional.
"""

import numpy as np

_SEED = 0x60_0D_F0_0D
_MAX_EDGE = 19

# TABLE[color - 1, row * 19 + col], color in {1: black, 2: white}
TABLE = (
    np.random.Generator(np.random.PCG64(_SEED))
    .integers(np.iinfo(np.int64).min, np.iinfo(np.int64).max, size=(2, _MAX_EDGE * _MAX_EDGE))
    .astype(np.int64)
)

# Salt applied to hashes before they enter the open-addressing table so the
# empty-board hash (0) does not collide with the empty-slot sentinel.
TABLE_SALT = np.int64(-0x61C8864680B583EB)


def stone_key(color: int, row: int, col: int) -> int:
    """Key toggled into the position hash when a stone appears or leaves."""
    return int(TABLE[color - 1, row * _MAX_EDGE + col])
