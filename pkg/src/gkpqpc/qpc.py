"""Logical X / Z readout of the (n, m) quantum parity code from HRM outcomes.

Outcome grids are int8 arrays of shape ``(n, m)`` (or ``(..., n, m)`` for
batches) holding +1, -1, or 0 for a discarded qubit.  Rows are blocks.

X basis: any block with a discard is dropped, surviving blocks contribute
their parity, and the strict majority of parities wins.
Z basis: each block takes a strict majority over its kept entries, and the
logical value is the product of the block votes.
A missing majority anywhere is a heralded failure.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np


class LogicalResult(enum.IntEnum):
    PLUS = 1
    MINUS = -1
    FAILURE = 0


@dataclass(frozen=True, order=True)
class QpcShape:
    n: int
    m: int

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def size(self) -> int:
        return self.n * self.m

    @classmethod
    def parse(cls, text: str) -> "QpcShape":
        """Parse ``"5x4"`` (n blocks of m qubits)."""
        match = re.fullmatch(r"\s*(\d+)\s*[xX×]\s*(\d+)\s*", text)
        if not match:
            raise ValueError(f"shape must look like NxM, got {text!r}")
        return cls(int(match.group(1)), int(match.group(2)))

    def __str__(self):
        return f"{self.n}x{self.m}"


def as_grid(cells, shape: QpcShape | None = None) -> np.ndarray:
    """Validate and convert an outcome grid (nested lists, enums or an array)."""
    grid = np.asarray(cells, dtype=np.int8)
    if grid.ndim < 2:
        raise ValueError(f"outcome grid must be at least 2-D, got shape {grid.shape}")
    if shape is not None and grid.shape[-2:] != (shape.n, shape.m):
        raise ValueError(f"grid has shape {grid.shape[-2:]}, expected ({shape.n}, {shape.m})")
    if not np.isin(grid, (-1, 0, 1)).all():
        raise ValueError("grid entries must be +1, -1 or 0 (discard)")
    return grid


def decode_x_batch(grids: np.ndarray) -> np.ndarray:
    # a block with a discard has product 0 and so abstains from the vote
    parity = np.prod(grids, axis=-1, dtype=np.int64)
    return np.sign(parity.sum(axis=-1)).astype(np.int8)


def decode_z_batch(grids: np.ndarray) -> np.ndarray:
    # discards are 0 and do not count toward a block's vote
    votes = np.sign(grids.sum(axis=-1, dtype=np.int64))
    return np.prod(votes, axis=-1).astype(np.int8)


def decode_x(grid) -> LogicalResult:
    return LogicalResult(int(decode_x_batch(as_grid(grid)[None])[0]))


def decode_z(grid) -> LogicalResult:
    return LogicalResult(int(decode_z_batch(as_grid(grid)[None])[0]))


def logical_error_indicator(result, true_value: int) -> bool:
    """True for a wrong logical value or a heralded failure."""
    if true_value not in (1, -1):
        raise ValueError(f"true_value must be +1 or -1, got {true_value!r}")
    return int(result) != true_value
