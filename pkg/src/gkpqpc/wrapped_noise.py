"""Wrapped Gaussian shift noise on the GKP grid.

A Gaussian displacement ``g ~ N(0, sigma^2)`` acts on square-lattice GKP
codewords only modulo ``2*sqrt(pi)``, so everything here works with the
folded shift ``u`` in ``[-sqrt(pi), sqrt(pi))`` and its wrapped density.

The same scalar standard deviation is used for the channel strength and
for finite GKP squeezing; callers decide how to label it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

SQRT_PI = math.sqrt(math.pi)
PERIOD = 2.0 * SQRT_PI
HASHING_BOUND = 1.0 / math.sqrt(math.e)
VACUUM_VARIANCE = 0.5

# images with |k| <= _MIN_IMAGES are always summed
_MIN_IMAGES = 5
# exp(-x^2/2) < 1e-16 for x > 8.6
_TAIL_SIGMAS = 8.6


@dataclass(frozen=True)
class NoiseParams:
    """Standard deviation of a zero-mean Gaussian shift, per quadrature."""

    std_dev: float

    def __post_init__(self):
        s = float(self.std_dev)
        if not math.isfinite(s) or s < 0:
            raise ValueError(f"std_dev must be finite and >= 0, got {self.std_dev!r}")
        object.__setattr__(self, "std_dev", s)


@dataclass(frozen=True)
class OutcomeProbabilities:
    """Probabilities that an HRM outcome is correct, incorrect or discarded."""

    p_correct: float
    p_incorrect: float
    p_discard: float

    @property
    def success_probability(self) -> float:
        return 1.0 - self.p_discard

    @property
    def postselected_error(self) -> float:
        """Error probability among kept (non-discarded) outcomes."""
        keep = 1.0 - self.p_discard
        if keep <= 0.0:
            raise ZeroDivisionError("postselected error undefined when every outcome is discarded")
        return self.p_incorrect / keep

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_correct, self.p_incorrect, self.p_discard)


def _std(noise) -> float:
    if isinstance(noise, NoiseParams):
        return noise.std_dev
    return NoiseParams(noise).std_dev


def _image_count(std_dev: float) -> int:
    return _MIN_IMAGES + int(math.ceil(_TAIL_SIGMAS * std_dev / PERIOD)) + 1


def wrap(x):
    """Fold real values into the canonical window ``[-sqrt(pi), sqrt(pi))``."""
    x = np.asarray(x, dtype=np.float64)
    u = x - PERIOD * np.floor((x + SQRT_PI) / PERIOD)
    # rounding in the subtraction can land exactly on the open end
    u = np.where(u >= SQRT_PI, u - PERIOD, u)
    u = np.where(u < -SQRT_PI, u + PERIOD, u)
    if u.ndim == 0:
        return float(u)
    return u


def wrapped_pdf(u, noise):
    """Density of the wrapped Gaussian shift at ``u``.

    Evaluated as the sum of Gaussian images ``N(u + 2k*sqrt(pi); 0, sigma^2)``,
    which equals ``theta3(-u / (2 sqrt(pi)), i sigma^2 / 2) / (2 sqrt(pi))``.
    ``u`` may be a scalar or an array; values outside the window are folded.
    """
    s = _std(noise)
    if s == 0.0:
        raise ValueError("wrapped_pdf needs std_dev > 0 (the noiseless density is a delta)")
    arr = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("u must be finite")
    x = np.asarray(wrap(arr), dtype=np.float64)
    kmax = _image_count(s)
    k = np.arange(-kmax, kmax + 1, dtype=np.float64)
    z = (x[..., None] + PERIOD * k) / s
    out = np.exp(-0.5 * z * z).sum(axis=-1) / (s * math.sqrt(2.0 * math.pi))
    if out.ndim == 0:
        return float(out)
    return out


def sample_wrapped_shift(noise, rng: np.random.Generator, size=None):
    """Draw ``g ~ N(0, sigma^2)`` and fold it into ``[-sqrt(pi), sqrt(pi))``."""
    s = _std(noise)
    if s == 0.0:
        return 0.0 if size is None else np.zeros(size)
    return wrap(rng.normal(0.0, s, size=size))


def _band_mass(center: float, half_width: float, s: float, kmax: int) -> float:
    """Mass of N(0, s^2) within ``half_width`` of ``center + 2k sqrt(pi)``, summed over k."""
    if half_width <= 0.0:
        return 0.0
    c = center + PERIOD * np.arange(-kmax, kmax + 1, dtype=np.float64)
    return float(np.sum(ndtr((c + half_width) / s) - ndtr((c - half_width) / s)))


def outcome_probabilities(noise, delta: float) -> OutcomeProbabilities:
    """Exact HRM outcome probabilities for danger-zone half-width ``delta``.

    Correct: ``|u| < sqrt(pi)/2 - delta``; incorrect: ``|u| > sqrt(pi)/2 + delta``;
    discard: the closed band in between (wrapped shift ``u``).
    """
    s = _std(noise)
    delta = float(delta)
    if not (0.0 <= delta < SQRT_PI / 2):
        raise ValueError(f"delta must lie in [0, sqrt(pi)/2), got {delta!r}")
    if s == 0.0:
        return OutcomeProbabilities(1.0, 0.0, 0.0)
    kmax = _image_count(s)
    keep_half = SQRT_PI / 2 - delta
    p_c = _band_mass(0.0, keep_half, s, kmax)
    p_i = _band_mass(SQRT_PI, keep_half, s, kmax)
    # two bands of width 2*delta centred on +-sqrt(pi)/2 and their images
    p_d = _band_mass(SQRT_PI / 2, delta, s, kmax) + _band_mass(-SQRT_PI / 2, delta, s, kmax)
    return OutcomeProbabilities(p_c, p_i, p_d)


def squeezing_db_to_std(db: float) -> NoiseParams:
    """Squeezing level in dB (relative to vacuum variance 1/2) to a noise std."""
    db = float(db)
    if not math.isfinite(db):
        raise ValueError("db must be finite")
    return NoiseParams(math.sqrt(VACUUM_VARIANCE * 10.0 ** (-db / 10.0)))


def std_to_squeezing_db(noise) -> float:
    s = _std(noise)
    if s <= 0.0:
        raise ValueError("squeezing is undefined for std_dev = 0")
    return -10.0 * math.log10(s * s / VACUUM_VARIANCE)
