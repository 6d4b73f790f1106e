"""Highly-reliable measurement (HRM) of a GKP qubit.

A raw quadrature outcome is binned to the nearest multiple of sqrt(pi) as
usual, except that outcomes landing within ``delta`` of a bin boundary are
flagged as erasures instead of being trusted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .wrapped_noise import SQRT_PI


class HrmOutcome(enum.IntEnum):
    """Ternary measurement result. The integer value doubles as the array code."""

    PLUS = 1
    MINUS = -1
    DISCARD = 0

    @property
    def kept(self) -> bool:
        return self is not HrmOutcome.DISCARD


class ShiftClass(enum.IntEnum):
    """Ground-truth label of a shift, coded like the outcome it causes on logical +1."""

    CORRECT = 1
    INCORRECT = -1
    DISCARD = 0


@dataclass(frozen=True)
class HrmParams:
    delta: float = 0.0

    def __post_init__(self):
        d = float(self.delta)
        if not (0.0 <= d < SQRT_PI / 2):
            raise ValueError(f"delta must lie in [0, sqrt(pi)/2), got {self.delta!r}")
        object.__setattr__(self, "delta", d)

    @classmethod
    def from_sqrtpi(cls, multiple: float) -> "HrmParams":
        """Build from ``delta / sqrt(pi)``, the form in which delta is usually quoted."""
        return cls(multiple * SQRT_PI)

    @property
    def delta_sqrtpi(self) -> float:
        return self.delta / SQRT_PI


@dataclass(frozen=True)
class SyndromeValue:
    s_m: float
    n: int
    delta_m: float


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def decompose(s_m: float) -> SyndromeValue:
    """Split ``s_m`` into ``n * sqrt(pi) + delta_m`` with ``|delta_m| <= sqrt(pi)/2``."""
    s_m = float(s_m)
    if not math.isfinite(s_m):
        raise ValueError(f"measurement outcome must be finite, got {s_m!r}")
    n = int(_round_half_away(s_m / SQRT_PI))
    return SyndromeValue(s_m, n, s_m - n * SQRT_PI)


def _as_delta(params) -> float:
    if isinstance(params, HrmParams):
        return params.delta
    return HrmParams(params).delta


def classify(s_m: float, params) -> HrmOutcome:
    """Map a raw outcome to +1 / -1 (even / odd grid index) or DISCARD."""
    delta = _as_delta(params)
    syn = decompose(s_m)
    if SQRT_PI / 2 - abs(syn.delta_m) < delta:
        return HrmOutcome.DISCARD
    return HrmOutcome.PLUS if syn.n % 2 == 0 else HrmOutcome.MINUS


def classify_array(s_m, params) -> np.ndarray:
    """Vectorised :func:`classify`; returns int8 codes (+1, -1, 0)."""
    delta = _as_delta(params)
    s = np.asarray(s_m, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise ValueError("measurement outcomes must be finite")
    n = _round_half_away(s / SQRT_PI)
    delta_m = s - n * SQRT_PI
    bit = np.where(np.mod(n, 2) == 0, 1, -1).astype(np.int8)
    return np.where(SQRT_PI / 2 - np.abs(delta_m) < delta, np.int8(0), bit).astype(np.int8)


def classify_true_shift(u: float, params) -> ShiftClass:
    """Label a canonical shift by what the HRM would do with it.

    Shifts exactly on a danger-zone edge count as DISCARD.
    """
    delta = _as_delta(params)
    a = abs(float(u))
    if a < SQRT_PI / 2 - delta:
        return ShiftClass.CORRECT
    if a > SQRT_PI / 2 + delta:
        return ShiftClass.INCORRECT
    return ShiftClass.DISCARD


def classify_true_shift_array(u, params) -> np.ndarray:
    """Vectorised :func:`classify_true_shift` returning int8 codes (+1, -1, 0)."""
    delta = _as_delta(params)
    a = np.abs(np.asarray(u, dtype=np.float64))
    out = np.zeros(a.shape, dtype=np.int8)
    out[a < SQRT_PI / 2 - delta] = 1
    out[a > SQRT_PI / 2 + delta] = -1
    return out
