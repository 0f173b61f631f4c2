"""Seed derivation.

Every random stream is a numpy ``Generator`` built from a master seed plus a
tuple of integer keys, so run ``i`` of an experiment gets the same stream no
matter how runs are scheduled.
"""

import zlib

import numpy as np


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    return int(k)


def make_rng(seed, *keys):
    if seed is None:
        raise ValueError("a seed is mandatory")
    return np.random.default_rng([int(seed), *(_key(k) for k in keys)])
