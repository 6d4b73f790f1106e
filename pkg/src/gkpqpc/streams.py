"""Counter-based random streams addressed by (key, trial, quadrature, qubit).

Each simulation point gets a Philox key derived from the run seed and the
point's coordinates.  Trial ``t`` owns a fixed, padded slice of the Philox
output, so any trial range can be regenerated on its own and the draws do
not depend on how trials are split across workers.
"""

from __future__ import annotations

import struct

import numpy as np
from numpy.random import Philox, SeedSequence
from scipy.special import ndtri

_WORDS_PER_BLOCK = 4
_U53 = 2.0**-53


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def point_key(seed: int, *coords) -> np.ndarray:
    """Philox key for the simulation point at ``coords`` (ints or floats)."""
    words = []
    for c in coords:
        if isinstance(c, float):
            words.append(_float_bits(c))
        else:
            words.append(int(c))
    ss = SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=tuple(words))
    return ss.generate_state(2, dtype=np.uint64)


def trial_stride(draws_per_trial: int) -> int:
    """Raw 64-bit words reserved per trial (rounded up to whole Philox blocks)."""
    blocks = -(-draws_per_trial // _WORDS_PER_BLOCK)
    return blocks * _WORDS_PER_BLOCK


def standard_normals(key: np.ndarray, start: int, stop: int, draws_per_trial: int) -> np.ndarray:
    """Standard normals for trials ``start..stop-1``, shape ``(stop - start, draws_per_trial)``.

    Uses inverse-CDF sampling so every trial consumes a fixed number of words.
    """
    count = stop - start
    if count <= 0:
        return np.empty((0, draws_per_trial))
    stride = trial_stride(draws_per_trial)
    bitgen = Philox(key=key)
    bitgen.advance(start * (stride // _WORDS_PER_BLOCK))
    raw = bitgen.random_raw(count * stride).reshape(count, stride)[:, :draws_per_trial]
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return ndtri(uniforms)
