import itertools

import numpy as np
import pytest

from gkpqpc.oracle import (
    BudgetError,
    exact_failure,
    exact_failure_blockwise,
    exact_failure_enumerated,
)
from gkpqpc.qpc import LogicalResult, QpcShape, decode_x, decode_z
from gkpqpc.wrapped_noise import SQRT_PI, outcome_probabilities


def slow_enumeration(shape, probs):
    """Pattern-by-pattern sum using the scalar decoders."""
    pc, pi, pd = probs
    weight = {1: pc, -1: pi, 0: pd}
    ex = ez = 0.0
    for cells in itertools.product((1, -1, 0), repeat=shape.size):
        w = 1.0
        for c in cells:
            w *= weight[c]
        grid = np.array(cells).reshape(shape.n, shape.m)
        ex += w * (decode_x(grid) is not LogicalResult.PLUS)
        ez += w * (decode_z(grid) is not LogicalResult.PLUS)
    return ex, ez


def test_single_qubit():
    f = exact_failure(QpcShape(1, 1), (0.9, 0.05, 0.05))
    assert f.e_x == pytest.approx(0.1, abs=1e-15)
    assert f.e_z == pytest.approx(0.1, abs=1e-15)


def test_noiseless():
    f = exact_failure(QpcShape(1, 1), (1.0, 0.0, 0.0))
    assert (f.e_x, f.e_z, f.p_e) == (0.0, 0.0, 0.0)


def test_two_by_two_against_slow_enumeration():
    shape = QpcShape(2, 2)
    ex, ez = slow_enumeration(shape, (0.8, 0.1, 0.1))
    f = exact_failure(shape, (0.8, 0.1, 0.1))
    assert f.e_x == pytest.approx(ex, abs=1e-14)
    assert f.e_z == pytest.approx(ez, abs=1e-14)
    # by hand: X succeeds when both blocks are kept with parity +1, or one is and the other is erased
    keep = 0.9**2
    good = (keep + 0.7**2) / 2
    er = 1 - keep
    x_ok = good**2 + 2 * good * er
    assert f.e_x == pytest.approx(1 - x_ok, abs=1e-14)


SMALL = [(n, m) for n in range(1, 10) for m in range(1, 10) if n * m <= 9]


@pytest.mark.parametrize("n,m", SMALL)
def test_blockwise_matches_enumeration(n, m):
    shape = QpcShape(n, m)
    for probs in ((0.8, 0.1, 0.1), (0.62, 0.03, 0.35), (0.89, 0.11, 0.0), (0.5, 0.25, 0.25)):
        a = exact_failure_enumerated(shape, probs)
        b = exact_failure_blockwise(shape, probs)
        assert abs(a.e_x - b.e_x) < 1e-12
        assert abs(a.e_z - b.e_z) < 1e-12


def test_slow_enumeration_agrees_on_a_few_shapes():
    for n, m in [(1, 3), (3, 1), (2, 3), (3, 2)]:
        shape = QpcShape(n, m)
        ex, ez = slow_enumeration(shape, (0.7, 0.1, 0.2))
        f = exact_failure(shape, (0.7, 0.1, 0.2))
        assert f.e_x == pytest.approx(ex, abs=1e-13)
        assert f.e_z == pytest.approx(ez, abs=1e-13)


def test_large_shapes_use_blockwise_path():
    f = exact_failure(QpcShape(4, 4), (0.7, 0.1, 0.2))
    g = exact_failure_blockwise(QpcShape(4, 4), (0.7, 0.1, 0.2))
    assert f == g
    assert 0 <= f.e_x <= 1 and 0 <= f.e_z <= 1


def test_budget():
    with pytest.raises(BudgetError):
        exact_failure(QpcShape(4, 5), (0.9, 0.05, 0.05))
    with pytest.raises(BudgetError):
        exact_failure_enumerated(QpcShape(13, 1), (0.9, 0.05, 0.05))


def test_p_e_relation():
    f = exact_failure(QpcShape(3, 2), outcome_probabilities(0.55, 0.2))
    assert f.p_e == pytest.approx(1 - (1 - f.e_x) * (1 - f.e_z), abs=1e-15)


def test_bad_probabilities():
    with pytest.raises(ValueError):
        exact_failure(QpcShape(1, 1), (0.5, 0.4, 0.4))


@pytest.mark.parametrize("shape", [QpcShape(1, 1), QpcShape(2, 2), QpcShape(3, 2), QpcShape(2, 3)])
def test_failure_increases_with_noise(shape):
    xs = np.linspace(0.2, 1.0, 17)
    fs = [exact_failure(shape, outcome_probabilities(x, 0.0)) for x in xs]
    for a, b in zip(fs, fs[1:]):
        assert b.e_x > a.e_x and b.e_z > a.e_z


def test_m_one_z_not_worse_than_x_direction():
    # with m = 1 the Z readout is a product of n single votes, the X readout a majority
    for n in (3, 5):
        f = exact_failure(QpcShape(n, 1), outcome_probabilities(0.5, 0.223 * SQRT_PI))
        assert f.e_z >= f.e_x
