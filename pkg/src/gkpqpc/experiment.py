"""Monte Carlo estimation of QPC failure rates under the Gaussian shift channel.

The channel is simulated at code capacity: every physical qubit receives one
independent wrapped Gaussian shift per quadrature, ``u`` feeding the Z-basis
outcome grid and ``v`` the X-basis grid.  The encoded value is +1 in both
bases; the decoders and the noise are symmetric under a logical flip.

All randomness is addressed by (seed, shape, xi, delta, trial, quadrature,
qubit), so results are identical however the trials are scheduled.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import streams
from .hrm import HrmParams, classify_true_shift_array
from .qpc import QpcShape, decode_x_batch, decode_z_batch
from .stats import wilson_interval
from .wrapped_noise import HASHING_BOUND, NoiseParams, wrap

log = logging.getLogger(__name__)

N_BATCHES = 20
CHUNK_TRIALS = 8192
BOOTSTRAP_RESAMPLES = 200
_BOOTSTRAP_TAG = 0xB0075


@dataclass(frozen=True)
class TrialConfig:
    shape: QpcShape
    noise: NoiseParams
    hrm: HrmParams
    trials: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.noise, NoiseParams):
            object.__setattr__(self, "noise", NoiseParams(self.noise))
        if not isinstance(self.hrm, HrmParams):
            object.__setattr__(self, "hrm", HrmParams(self.hrm))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def xi(self) -> float:
        return self.noise.std_dev

    @property
    def delta(self) -> float:
        return self.hrm.delta

    def key(self) -> np.ndarray:
        return streams.point_key(self.seed, self.shape.n, self.shape.m, self.xi, self.delta)


@dataclass(frozen=True)
class BatchCounts:
    trials: int
    x_errors: int
    z_errors: int
    discards: int

    def __add__(self, other: "BatchCounts") -> "BatchCounts":
        return BatchCounts(
            self.trials + other.trials,
            self.x_errors + other.x_errors,
            self.z_errors + other.z_errors,
            self.discards + other.discards,
        )


def _outcome_grids(config: TrialConfig, start: int, stop: int):
    """Ternary Z-basis and X-basis grids for trials ``start..stop-1``."""
    n, m = config.shape.n, config.shape.m
    nm = n * m
    g = streams.standard_normals(config.key(), start, stop, 2 * nm)
    shifts = wrap(config.xi * g)
    codes = classify_true_shift_array(shifts, config.hrm)
    z_grid = codes[:, :nm].reshape(-1, n, m)
    x_grid = codes[:, nm:].reshape(-1, n, m)
    return z_grid, x_grid


def simulate_range(config: TrialConfig, start: int, stop: int) -> BatchCounts:
    """Error and discard counts over trials ``start..stop-1``."""
    total = BatchCounts(0, 0, 0, 0)
    for lo in range(start, stop, CHUNK_TRIALS):
        hi = min(lo + CHUNK_TRIALS, stop)
        z_grid, x_grid = _outcome_grids(config, lo, hi)
        x_err = decode_x_batch(x_grid) != 1
        z_err = decode_z_batch(z_grid) != 1
        discards = int(np.count_nonzero(z_grid == 0) + np.count_nonzero(x_grid == 0))
        total = total + BatchCounts(hi - lo, int(x_err.sum()), int(z_err.sum()), discards)
    return total


def run_trial(config: TrialConfig, trial_index: int) -> tuple[bool, bool, int]:
    """One code-capacity trial: (logical X error, logical Z error, discarded qubits)."""
    c = simulate_range(config, trial_index, trial_index + 1)
    return bool(c.x_errors), bool(c.z_errors), c.discards


@dataclass(frozen=True)
class FailureEstimate:
    shape: QpcShape
    xi: float
    delta: float
    trials: int
    x_errors: int
    z_errors: int
    discards: int
    batches: tuple[BatchCounts, ...] = field(repr=False, compare=False, default=())

    @property
    def e_x(self) -> float:
        return self.x_errors / self.trials

    @property
    def e_z(self) -> float:
        return self.z_errors / self.trials

    @property
    def p_e(self) -> float:
        return 1.0 - (1.0 - self.e_x) * (1.0 - self.e_z)

    @property
    def e_x_ci(self) -> tuple[float, float]:
        return wilson_interval(self.x_errors, self.trials)

    @property
    def e_z_ci(self) -> tuple[float, float]:
        return wilson_interval(self.z_errors, self.trials)

    @property
    def p_e_ci(self) -> tuple[float, float]:
        # p_e is increasing in both e_x and e_z, so the Wilson bounds map through
        (xl, xh), (zl, zh) = self.e_x_ci, self.e_z_ci
        return (1.0 - (1.0 - xl) * (1.0 - zl), 1.0 - (1.0 - xh) * (1.0 - zh))

    @property
    def discard_rate(self) -> float:
        return self.discards / (2 * self.shape.size * self.trials)


def _batch_bounds(trials: int) -> list[tuple[int, int]]:
    nb = min(N_BATCHES, trials)
    return [(b * trials // nb, (b + 1) * trials // nb) for b in range(nb)]


def _simulate_task(task):
    config, start, stop = task
    return simulate_range(config, start, stop)


class _Runner:
    """Runs trial batches serially or on a process pool; results never depend on which."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def estimates(self, configs: Sequence[TrialConfig]) -> list[FailureEstimate]:
        tasks = []
        owners = []
        for i, cfg in enumerate(configs):
            for start, stop in _batch_bounds(cfg.trials):
                tasks.append((cfg, start, stop))
                owners.append(i)
        if self._pool is None:
            results = [_simulate_task(t) for t in tasks]
        else:
            results = list(self._pool.map(_simulate_task, tasks))
        per_config: list[list[BatchCounts]] = [[] for _ in configs]
        for i, r in zip(owners, results):
            per_config[i].append(r)
        out = []
        for cfg, batches in zip(configs, per_config):
            tot = BatchCounts(0, 0, 0, 0)
            for b in batches:
                tot = tot + b
            out.append(
                FailureEstimate(
                    shape=cfg.shape,
                    xi=cfg.xi,
                    delta=cfg.delta,
                    trials=tot.trials,
                    x_errors=tot.x_errors,
                    z_errors=tot.z_errors,
                    discards=tot.discards,
                    batches=tuple(batches),
                )
            )
        return out


def estimate_failure(config: TrialConfig, workers: int = 1) -> FailureEstimate:
    """Estimate E_X, E_Z and p_E for one simulation point."""
    with _Runner(workers) as runner:
        return runner.estimates([config])[0]


def sweep(
    shapes: Sequence[QpcShape],
    xi_grid: Sequence[float],
    hrm: HrmParams,
    trials: int,
    seed: int,
    workers: int = 1,
) -> list[FailureEstimate]:
    """Failure estimates over every (shape, xi) pair, shape-major order."""
    if not shapes or not len(xi_grid):
        raise ValueError("sweep needs at least one shape and one xi value")
    configs = [
        TrialConfig(shape, NoiseParams(xi), hrm, trials, seed) for shape in shapes for xi in xi_grid
    ]
    with _Runner(workers) as runner:
        return runner.estimates(configs)


# ---------------------------------------------------------------- thresholds


@dataclass(frozen=True)
class Crossover:
    shape_a: QpcShape
    shape_b: QpcShape
    xi: float | None
    xi_lo: float | None = None
    xi_hi: float | None = None
    bracket: tuple[float, float] | None = None

    @property
    def found(self) -> bool:
        return self.xi is not None


@dataclass(frozen=True)
class ThresholdReport:
    delta: float
    shapes: tuple[QpcShape, ...]
    crossovers: tuple[Crossover, ...]
    interval: tuple[float, float]
    trials_per_point: int

    @property
    def headline(self) -> float | None:
        """Crossover of the two largest codes."""
        return self.crossovers[-1].xi if self.crossovers else None

    @property
    def headline_crossover(self) -> Crossover | None:
        return self.crossovers[-1] if self.crossovers else None

    @property
    def hashing_gap(self) -> float | None:
        h = self.headline
        return None if h is None else h - HASHING_BOUND


def _log_linear_cross(lo, hi, pa_lo, pa_hi, pb_lo, pb_hi) -> float:
    """Crossing of two curves whose logs are linear in xi between lo and hi."""
    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.log([pa_lo, pa_hi])
        lb = np.log([pb_lo, pb_hi])
    if not (np.all(np.isfinite(la)) and np.all(np.isfinite(lb))):
        la, lb = np.array([pa_lo, pa_hi]), np.array([pb_lo, pb_hi])
    d0 = la[0] - lb[0]
    d1 = la[1] - lb[1]
    if d0 == d1:
        return 0.5 * (lo + hi)
    t = d0 / (d0 - d1)
    return lo + t * (hi - lo)


def _log_ratio_weights(pa, pb, trials) -> np.ndarray:
    """Inverse delta-method variances of log(pb / pa)."""
    pa = np.clip(pa, 1.0 / trials, 1.0)
    pb = np.clip(pb, 1.0 / trials, 1.0)
    var = (1.0 - pa) / (pa * trials) + (1.0 - pb) / (pb * trials)
    return 1.0 / np.maximum(var, 1e-300)


def _fit_cross(xs, pa, pb, weights, center) -> float:
    """Root of a weighted quadratic fit to log(pb / pa), nearest ``center``.

    With fewer than three points, or no real root inside the window, falls
    back to the log-linear crossing of the outermost points.
    """
    lo, hi = float(xs[0]), float(xs[-1])
    fallback = float(np.clip(_log_linear_cross(lo, hi, pa[0], pa[-1], pb[0], pb[-1]), lo, hi))
    if len(xs) < 3 or np.any(pa <= 0) or np.any(pb <= 0):
        return fallback
    d = np.log(pb) - np.log(pa)
    coef = np.polyfit(xs - center, d, 2, w=np.sqrt(weights))
    roots = [r.real + center for r in np.roots(coef) if abs(r.imag) < 1e-12]
    roots = [r for r in roots if lo <= r <= hi]
    if not roots:
        return fallback
    return float(min(roots, key=lambda r: abs(r - center)))


def _resampled_pe(est: FailureEstimate, idx: np.ndarray) -> np.ndarray:
    tr = np.array([b.trials for b in est.batches], dtype=float)
    xe = np.array([b.x_errors for b in est.batches], dtype=float)
    ze = np.array([b.z_errors for b in est.batches], dtype=float)
    n = tr[idx].sum(axis=-1)
    ex = xe[idx].sum(axis=-1) / n
    ez = ze[idx].sum(axis=-1) / n
    return 1.0 - (1.0 - ex) * (1.0 - ez)


class _Evaluator:
    """Memoised p_E(shape, xi) at a fixed delta, trial count and seed."""

    def __init__(self, runner: _Runner, hrm: HrmParams, trials: int, seed: int):
        self.runner = runner
        self.hrm = hrm
        self.trials = trials
        self.seed = seed
        self.cache: dict[tuple[QpcShape, float], FailureEstimate] = {}

    def get(self, pairs: Iterable[tuple[QpcShape, float]]) -> list[FailureEstimate]:
        pairs = [(s, round(float(x), 12)) for s, x in pairs]
        todo = [p for p in dict.fromkeys(pairs) if p not in self.cache]
        if todo:
            configs = [TrialConfig(s, NoiseParams(x), self.hrm, self.trials, self.seed) for s, x in todo]
            for p, est in zip(todo, self.runner.estimates(configs)):
                self.cache[p] = est
        return [self.cache[p] for p in pairs]


def _locate_crossover(
    ev: _Evaluator,
    a: QpcShape,
    b: QpcShape,
    interval: tuple[float, float],
    refinements: int,
    interp_width: float,
) -> Crossover:
    lo, hi = interval
    ea_lo, eb_lo, ea_hi, eb_hi = ev.get([(a, lo), (b, lo), (a, hi), (b, hi)])
    d_lo = eb_lo.p_e - ea_lo.p_e
    d_hi = eb_hi.p_e - ea_hi.p_e
    if d_lo * d_hi > 0 or (d_lo == 0 and d_hi == 0):
        log.info("no crossover for %s vs %s in [%g, %g]", a, b, lo, hi)
        return Crossover(a, b, None)
    visited = [interval[0], interval[1]]
    for _ in range(refinements):
        mid = round(0.5 * (lo + hi), 12)
        visited.append(mid)
        ea_mid, eb_mid = ev.get([(a, mid), (b, mid)])
        d_mid = eb_mid.p_e - ea_mid.p_e
        if d_mid == 0:
            lo = hi = mid
            break
        if (d_mid > 0) == (d_lo > 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    bracket = (lo, hi)
    # fit across a window no narrower than interp_width to damp sampling noise
    center = 0.5 * (lo + hi)
    left = max([x for x in visited if x <= center - interp_width / 2] or [min(visited)])
    right = min([x for x in visited if x >= center + interp_width / 2] or [max(visited)])
    left, right = min(left, lo), max(right, hi)
    xs = np.array(sorted({x for x in visited if left <= x <= right}))
    ests_a = ev.get([(a, x) for x in xs])
    ests_b = ev.get([(b, x) for x in xs])
    pa = np.array([e.p_e for e in ests_a])
    pb = np.array([e.p_e for e in ests_b])
    weights = _log_ratio_weights(pa, pb, ev.trials)
    xi = _fit_cross(xs, pa, pb, weights, center)

    # bootstrap over trial batches, resampling every point of both curves independently
    rng = np.random.default_rng(
        np.random.SeedSequence(ev.seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(a.n, a.m, b.n, b.m, _BOOTSTRAP_TAG))
    )
    samples = []
    for est in ests_a + ests_b:
        nb = len(est.batches)
        idx = rng.integers(0, nb, size=(BOOTSTRAP_RESAMPLES, nb))
        samples.append(_resampled_pe(est, idx))
    samples = np.array(samples).T
    k = len(xs)
    boot = np.array([_fit_cross(xs, row[:k], row[k:], weights, center) for row in samples])
    boot = boot[np.isfinite(boot)]
    if boot.size:
        ci = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5)))
    else:
        ci = (None, None)
    return Crossover(a, b, xi, ci[0], ci[1], bracket)


def _validate_interval(interval) -> tuple[float, float]:
    lo, hi = (float(v) for v in interval)
    if not (0.0 < lo < hi < 1.0):
        raise ValueError(f"search interval must satisfy 0 < lo < hi < 1, got {interval!r}")
    return lo, hi


def _find_threshold(
    runner, shapes, hrm, interval, trials, seed, refinements, interp_width=0.02
) -> ThresholdReport:
    ordered = sorted(shapes, key=lambda s: (s.size, s.n))
    ev = _Evaluator(runner, hrm, trials, seed)
    crossovers = tuple(
        _locate_crossover(ev, a, b, interval, refinements, interp_width)
        for a, b in zip(ordered, ordered[1:])
    )
    return ThresholdReport(hrm.delta, tuple(ordered), crossovers, interval, trials)


def find_threshold(
    shapes: Sequence[QpcShape],
    hrm: HrmParams,
    search_interval: tuple[float, float] = (0.45, 0.70),
    trials_per_point: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    refinements: int = 6,
    interp_width: float = 0.02,
) -> ThresholdReport:
    """Locate p_E crossovers between consecutive codes (ordered by size).

    Each pair is bracketed by bisection on the sign of the p_E difference; the
    crossing is the root of a weighted quadratic fit to log(p_E ratio) over
    the evaluated points in a window at least ``interp_width`` wide around the
    final bracket.
    Pairs whose curves do not cross inside the interval are reported with
    ``xi=None``.
    """
    if len(shapes) < 2:
        raise ValueError("find_threshold needs at least two shapes")
    interval = _validate_interval(search_interval)
    with _Runner(workers) as runner:
        return _find_threshold(
            runner, shapes, hrm, interval, trials_per_point, seed, refinements, interp_width
        )


# ------------------------------------------------------------- shape ladders


def _pick_balanced(candidates: Sequence[FailureEstimate]) -> QpcShape:
    # drop shapes beaten on both E_X and E_Z by another shape with the same n
    front = [
        c
        for c in candidates
        if not any(
            o is not c and o.e_x <= c.e_x and o.e_z <= c.e_z and (o.e_x < c.e_x or o.e_z < c.e_z)
            for o in candidates
        )
    ]
    best = min(front, key=lambda c: (abs(c.e_x - c.e_z), c.shape.m))
    return best.shape


def _balance(runner, n_list, xi_probe, hrm, trials, seed, m_values) -> list[QpcShape]:
    m_values = list(m_values)
    configs = [
        TrialConfig(QpcShape(n, m), NoiseParams(xi_probe), hrm, trials, seed)
        for n in n_list
        for m in m_values
    ]
    ests = runner.estimates(configs)
    k = len(m_values)
    return [_pick_balanced(ests[i * k : (i + 1) * k]) for i in range(len(n_list))]


DEFAULT_LADDER_N = (3, 5, 7, 9)
DEFAULT_M_VALUES = tuple(range(1, 11))


def balance_shapes(
    n_list: Sequence[int] = DEFAULT_LADDER_N,
    xi_probe: float = HASHING_BOUND,
    hrm: HrmParams = HrmParams(0.0),
    trials: int = 50_000,
    seed: int = 0,
    m_values: Sequence[int] = DEFAULT_M_VALUES,
    workers: int = 1,
) -> list[QpcShape]:
    """For each n, the block size m giving E_X closest to E_Z at ``xi_probe``.

    Shapes that are worse in both E_X and E_Z than another candidate with the
    same n are excluded before comparing |E_X - E_Z|.
    """
    if not n_list:
        raise ValueError("n_list must not be empty")
    with _Runner(workers) as runner:
        return _balance(runner, n_list, xi_probe, hrm, trials, seed, m_values)


# ------------------------------------------------------------ delta search


@dataclass(frozen=True)
class DeltaPoint:
    delta: float
    threshold: float | None
    report: ThresholdReport


@dataclass(frozen=True)
class DeltaOptimization:
    points: tuple[DeltaPoint, ...]
    delta_star: float
    threshold_star: float | None


def _refine_peak(xs: Sequence[float], ys: Sequence[float | None]) -> tuple[float, float | None]:
    finite = [i for i, y in enumerate(ys) if y is not None]
    if not finite:
        return xs[0], None
    i = max(finite, key=lambda j: ys[j])
    if 0 < i < len(xs) - 1 and ys[i - 1] is not None and ys[i + 1] is not None:
        x3 = np.array(xs[i - 1 : i + 2], dtype=float)
        y3 = np.array(ys[i - 1 : i + 2], dtype=float)
        a, b, c = np.polyfit(x3, y3, 2)
        if a < 0:
            x_star = float(np.clip(-b / (2 * a), x3[0], x3[2]))
            return x_star, float(np.polyval((a, b, c), x_star))
    return float(xs[i]), float(ys[i])


def optimize_delta(
    shapes: Sequence[QpcShape] | None,
    delta_grid: Sequence[float],
    search_interval: tuple[float, float] = (0.45, 0.70),
    trials: int = 100_000,
    seed: int = 0,
    *,
    n_list: Sequence[int] = DEFAULT_LADDER_N,
    xi_probe: float = HASHING_BOUND,
    balance_trials: int | None = None,
    m_values: Sequence[int] = DEFAULT_M_VALUES,
    refinements: int = 6,
    workers: int = 1,
) -> DeltaOptimization:
    """Threshold as a function of delta, maximised with a quadratic refinement.

    With ``shapes=None`` a balanced ladder is rebuilt for every delta.
    Deltas whose headline pair does not cross are skipped in the argmax.
    """
    deltas = [float(d) for d in delta_grid]
    if not deltas:
        raise ValueError("delta grid must not be empty")
    for d in deltas:
        HrmParams(d)
    interval = _validate_interval(search_interval)
    points = []
    with _Runner(workers) as runner:
        for d in deltas:
            hrm = HrmParams(d)
            ladder = shapes
            if ladder is None:
                ladder = _balance(runner, n_list, xi_probe, hrm, balance_trials or trials, seed, m_values)
            report = _find_threshold(runner, ladder, hrm, interval, trials, seed, refinements)
            log.info("delta=%.4f ladder=%s threshold=%s", d, [str(s) for s in report.shapes], report.headline)
            points.append(DeltaPoint(d, report.headline, report))
    if len(deltas) == 1:
        return DeltaOptimization(tuple(points), deltas[0], points[0].threshold)
    d_star, t_star = _refine_peak(deltas, [p.threshold for p in points])
    return DeltaOptimization(tuple(points), d_star, t_star)
