"""Exact logical failure probabilities for small parity codes.

Every physical qubit independently yields a correct, incorrect, or discarded
outcome, so ``E_X`` and ``E_Z`` are finite sums over outcome patterns.
Small codes are enumerated pattern by pattern; larger ones are collapsed to
per-block count triples, since both decoders depend on a block only through
its numbers of correct, flipped and discarded entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .qpc import QpcShape, decode_x_batch, decode_z_batch
from .wrapped_noise import OutcomeProbabilities

MAX_QUBITS = 16
NAIVE_MAX_QUBITS = 12


class BudgetError(ValueError):
    """Raised when an exact computation would exceed its size budget."""


@dataclass(frozen=True)
class ExactFailure:
    e_x: float
    e_z: float

    @property
    def p_e(self) -> float:
        return 1.0 - (1.0 - self.e_x) * (1.0 - self.e_z)


def _triple(probs) -> tuple[float, float, float]:
    if isinstance(probs, OutcomeProbabilities):
        return probs.as_tuple()
    pc, pi, pd = (float(p) for p in probs)
    if min(pc, pi, pd) < 0 or abs(pc + pi + pd - 1.0) > 1e-9:
        raise ValueError(f"not a probability triple: {probs!r}")
    return pc, pi, pd


def exact_failure_enumerated(shape: QpcShape, probs) -> ExactFailure:
    """Brute force over all 3**(n*m) outcome grids for logical +1."""
    pc, pi, pd = _triple(probs)
    nm = shape.size
    if nm > NAIVE_MAX_QUBITS:
        raise BudgetError(f"naive enumeration limited to {NAIVE_MAX_QUBITS} qubits, got {nm}")
    # base-3 digits of 0..3**nm - 1 index the grids
    digits = (np.arange(3**nm)[:, None] // 3 ** np.arange(nm)) % 3
    codes = np.array([1, -1, 0], dtype=np.int8)[digits]
    n_correct = (codes == 1).sum(axis=1)
    n_wrong = (codes == -1).sum(axis=1)
    weights = pc**n_correct * pi**n_wrong * pd ** (nm - n_correct - n_wrong)
    grids = codes.reshape(-1, shape.n, shape.m)
    x_ok = decode_x_batch(grids) == 1
    z_ok = decode_z_batch(grids) == 1
    return ExactFailure(
        e_x=float(1.0 - weights[x_ok].sum()),
        e_z=float(1.0 - weights[z_ok].sum()),
    )


def _multinomial(*counts: int) -> int:
    out = factorial(sum(counts))
    for c in counts:
        out //= factorial(c)
    return out


def _block_categories(m: int, pc: float, pi: float, pd: float):
    """Per-block probabilities of (X: good, bad, erased) and (Z: plus, minus, tie)."""
    x_good = x_bad = x_erased = 0.0
    z_plus = z_minus = z_tie = 0.0
    for a in range(m + 1):
        for b in range(m + 1 - a):
            e = m - a - b
            w = _multinomial(a, b, e) * pc**a * pi**b * pd**e
            if e > 0:
                x_erased += w
            elif b % 2 == 0:
                x_good += w
            else:
                x_bad += w
            if a > b:
                z_plus += w
            elif b > a:
                z_minus += w
            else:
                z_tie += w
    return (x_good, x_bad, x_erased), (z_plus, z_minus, z_tie)


def exact_failure_blockwise(shape: QpcShape, probs) -> ExactFailure:
    """Exact failure via per-block count triples; cost polynomial in n and m."""
    pc, pi, pd = _triple(probs)
    (xg, xb, xe), (zp, zm, zt) = _block_categories(shape.m, pc, pi, pd)
    n = shape.n
    x_ok = 0.0
    z_ok = 0.0
    for g in range(n + 1):
        for b in range(n + 1 - g):
            w = _multinomial(g, b, n - g - b)
            if g > b:
                x_ok += w * xg**g * xb**b * xe ** (n - g - b)
            if g + b == n and b % 2 == 0:
                # here g counts +1 block votes and b counts -1 votes; no ties allowed
                z_ok += w * zp**g * zm**b
    return ExactFailure(e_x=1.0 - x_ok, e_z=1.0 - z_ok)


def exact_failure(shape: QpcShape, probs) -> ExactFailure:
    """Exact ``E_X`` and ``E_Z`` for codes with at most 16 physical qubits."""
    nm = shape.size
    if nm > MAX_QUBITS:
        raise BudgetError(f"exact oracle limited to {MAX_QUBITS} qubits, got {nm} ({shape})")
    if nm <= NAIVE_MAX_QUBITS:
        return exact_failure_enumerated(shape, probs)
    return exact_failure_blockwise(shape, probs)
