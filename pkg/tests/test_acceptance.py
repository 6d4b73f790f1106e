"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N PASS|FAIL`` line; the lines are repeated in
the terminal summary.  Runtime is roughly ten minutes on one core.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.optimize import brentq

from gkpqpc.cli import main
from gkpqpc.experiment import (
    TrialConfig,
    balance_shapes,
    estimate_failure,
    find_threshold,
    optimize_delta,
    sweep,
)
from gkpqpc.hrm import HrmParams
from gkpqpc.oracle import exact_failure, exact_failure_blockwise
from gkpqpc.qpc import QpcShape, decode_x_batch, decode_z_batch
from gkpqpc.stats import linear_fit
from gkpqpc.wrapped_noise import HASHING_BOUND, SQRT_PI, NoiseParams, outcome_probabilities, wrapped_pdf

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

D223 = 0.223 * SQRT_PI
LADDER_N = (3, 5, 7, 9)
BALANCE_TRIALS = 50_000
THRESHOLD_TRIALS = 1_000_000
SEED = 0


def test_c01_hashing_bound(verdict):
    ok = HASHING_BOUND == 1 / math.sqrt(math.e) and abs(HASHING_BOUND - 0.6065306597126334) <= 1e-16
    verdict(1, "hashing bound constant", ok, f"{HASHING_BOUND!r}")


def test_c02_hrm_identities(verdict):
    stds = np.linspace(0.1, 1.5, 20)
    deltas = np.linspace(0.0, 0.85, 20)
    worst_sum = worst_quad = 0.0

    def mass(s, lo, hi):
        return integrate.quad(lambda x: wrapped_pdf(x, s), lo, hi, epsabs=1e-12, epsrel=1e-11, limit=200)[0]

    for s in stds:
        for d in deltas:
            pr = outcome_probabilities(s, d)
            worst_sum = max(worst_sum, abs(sum(pr.as_tuple()) - 1.0))
            c = SQRT_PI / 2 - d
            pc = 2 * mass(s, 0.0, c)
            pi = 2 * mass(s, SQRT_PI / 2 + d, SQRT_PI)
            pd = 2 * mass(s, c, SQRT_PI / 2 + d) if d > 0 else 0.0
            worst_quad = max(
                worst_quad, abs(pr.p_correct - pc), abs(pr.p_incorrect - pi), abs(pr.p_discard - pd)
            )
    ok = worst_sum <= 1e-12 and worst_quad <= 1e-6
    verdict(2, "HRM probability identities", ok, f"max |sum-1|={worst_sum:.1e}, max |analytic-quad|={worst_quad:.1e}")


def test_c03_discard_rate(verdict):
    pd = outcome_probabilities(0.607, D223).p_discard
    verdict(3, "discard rate at threshold", abs(pd - 0.38) <= 0.02, f"p_discard={pd:.4f}, target 0.38+-0.02")


def test_c04_oracle_equivalence(verdict):
    trials = 1_000_000
    worst = 0.0
    for n, m in [(1, 1), (2, 2), (3, 2), (2, 3)]:
        for xi in (0.45, 0.55, 0.65):
            for d in (0.0, D223):
                est = estimate_failure(TrialConfig(QpcShape(n, m), NoiseParams(xi), HrmParams(d), trials, SEED))
                exact = exact_failure(QpcShape(n, m), outcome_probabilities(xi, d))
                for got, want in ((est.e_x, exact.e_x), (est.e_z, exact.e_z)):
                    se = math.sqrt(want * (1 - want) / trials)
                    worst = max(worst, abs(got - want) / se)
    verdict(4, "Monte Carlo matches exact enumeration", worst <= 3.0, f"worst deviation {worst:.2f} SE over 48 rates")


def _threshold(delta):
    hrm = HrmParams(delta)
    ladder = balance_shapes(LADDER_N, HASHING_BOUND, hrm, BALANCE_TRIALS, SEED)
    report = find_threshold(ladder, hrm, (0.45, 0.70), THRESHOLD_TRIALS, SEED)
    a, b = report.headline_crossover.shape_a, report.headline_crossover.shape_b

    # the blockwise sum has no size limit of its own, so the exact crossing is available
    def diff(x):
        pr = outcome_probabilities(x, delta)
        return exact_failure_blockwise(b, pr).p_e - exact_failure_blockwise(a, pr).p_e

    try:
        exact = brentq(diff, 0.45, 0.70, xtol=1e-6)
    except ValueError:
        exact = None
    return report, exact


def _threshold_detail(report, exact):
    c = report.headline_crossover
    ladder = ",".join(str(s) for s in report.shapes)
    ci = f"[{c.xi_lo:.4f}, {c.xi_hi:.4f}]" if c.found else "n/a"
    head = "none" if c.xi is None else f"{c.xi:.4f}"
    ex = "n/a" if exact is None else f"{exact:.4f}"
    return f"ladder {ladder}, headline {head}, 95% CI {ci}, exact crossover of the same pair {ex}"


def test_c05_conventional_threshold(verdict):
    report, exact = _threshold(0.0)
    h = report.headline
    ok = h is not None and abs(h - 0.555) <= 0.015
    verdict(5, "threshold at delta=0 is 0.555+-0.015", ok, _threshold_detail(report, exact))


def test_c06_hashing_bound_threshold(verdict):
    report, exact = _threshold(D223)
    h = report.headline
    ok = h is not None and abs(h - 0.607) <= 0.015
    verdict(6, "threshold at delta=0.223 sqrt(pi) is 0.607+-0.015", ok, _threshold_detail(report, exact))


def test_c07_delta_optimization(verdict):
    grid = list(np.linspace(0.0, 0.55, 7))
    res = optimize_delta(None, grid, trials=100_000, seed=SEED, balance_trials=BALANCE_TRIALS)
    by_delta = {p.delta: p.threshold for p in res.points}
    near = min(grid, key=lambda d: abs(d - D223))
    t0, tn = by_delta[0.0], by_delta[near]
    ok = t0 is not None and tn is not None and tn - t0 >= 0.03
    table = ", ".join(f"{d:.3f}:{'none' if t is None else f'{t:.4f}'}" for d, t in by_delta.items())
    star = "none" if res.threshold_star is None else f"{res.threshold_star:.4f}"
    verdict(
        7,
        "delta near 0.395 beats delta=0 by >=0.03",
        ok,
        f"thresholds {table}; refined optimum {star} at delta {res.delta_star:.3f}",
    )


def test_c08_linear_decoding(verdict):
    rng = np.random.default_rng(SEED)
    sizes, costs = [], []
    for nm in (10, 100, 1000, 10_000):
        n = int(round(math.sqrt(nm)))
        m = nm // n
        batch = max(20, 200_000 // nm)
        grids = rng.choice(np.array([1, -1, 0], dtype=np.int8), size=(batch, n, m), p=[0.6, 0.1, 0.3])
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            decode_x_batch(grids)
            decode_z_batch(grids)
            best = min(best, time.perf_counter() - t0)
        sizes.append(n * m)
        costs.append(best / batch)
    _, _, r2 = linear_fit(sizes, costs)
    verdict(8, "decode time linear in nm", r2 > 0.95, f"R^2={r2:.4f}")


def test_c09_determinism(verdict, tmp_path):
    outputs = {}
    for w in (1, 4, 16):
        out = tmp_path / f"w{w}"
        code = main(
            [
                "sweep", "--shapes", "3x2,5x3,7x4", "--xi", "0.50:0.65/4", "--delta-sqrtpi", "0.223",
                "--trials", "40000", "--seed", "42", "--workers", str(w), "--out", str(out),
            ]  # fmt: skip
        )
        assert code == 0
        outputs[w] = (out / "sweep.csv").read_bytes()
    ok = outputs[1] == outputs[4] == outputs[16]
    verdict(9, "sweep output identical for 1, 4, 16 workers", ok, f"{len(outputs[1])} bytes each")


def test_c10_monotonicity(verdict):
    problems = []
    deltas = np.linspace(0.0, 0.85, 40)
    for s in np.linspace(0.2, 1.0, 17):
        prs = [outcome_probabilities(s, d) for d in deltas]
        succ = [p.success_probability for p in prs]
        post = [p.postselected_error for p in prs]
        if any(b > a + 1e-15 for a, b in zip(succ, succ[1:])):
            problems.append(f"success rises in delta at std {s:.2f}")
        if any(b > a + 1e-15 for a, b in zip(post, post[1:])):
            problems.append(f"postselected error rises in delta at std {s:.2f}")
    xs = list(np.linspace(0.40, 0.70, 7))
    shapes = [QpcShape(3, 2), QpcShape(5, 3), QpcShape(3, 3), QpcShape(7, 4)]
    for d in (0.0, D223):
        ests = sweep(shapes, xs, HrmParams(d), 100_000, SEED)
        for k, shape in enumerate(shapes):
            row = ests[k * len(xs) : (k + 1) * len(xs)]
            for a, b in zip(row, row[1:]):
                slack = 3 * math.sqrt(a.p_e * (1 - a.p_e) / a.trials + b.p_e * (1 - b.p_e) / b.trials)
                if b.p_e < a.p_e - slack:
                    problems.append(f"p_e drops for {shape} at xi {b.xi:.3f}, delta {d:.3f}")
    verdict(10, "monotonicity in delta and xi", not problems, "; ".join(problems) or "no violations")
