"""Command-line front end.

Every command writes its tables/reports plus ``<command>.manifest.json`` into
``--out``.  The manifest records the resolved parameters and the SHA-256 of
each output, and ``gkpqpc rerun MANIFEST`` repeats the run.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 size budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (
    DEFAULT_LADDER_N,
    balance_shapes,
    find_threshold,
    optimize_delta,
    sweep,
)
from .hrm import HrmParams
from .oracle import BudgetError, exact_failure
from .qpc import QpcShape
from .svg import Plot, Series, render
from .wrapped_noise import (
    HASHING_BOUND,
    SQRT_PI,
    NoiseParams,
    outcome_probabilities,
    squeezing_db_to_std,
    std_to_squeezing_db,
)

log = logging.getLogger("gkpqpc")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BUDGET = 4

HRM_COLUMNS = [
    "squeezing_db",
    "std_dev",
    "delta",
    "p_correct",
    "p_incorrect",
    "p_discard",
    "success_prob",
    "postselected_error",
]
SWEEP_COLUMNS = [
    "n",
    "m",
    "xi",
    "delta",
    "trials",
    "e_x",
    "e_x_lo",
    "e_x_hi",
    "e_z",
    "e_z_lo",
    "e_z_hi",
    "p_e",
    "p_e_lo",
    "p_e_hi",
    "discard_rate",
]


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ parsing


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive), ``a:b/count`` (evenly spaced) or ``v1,v2,...``."""
    text = text.strip()
    try:
        if "/" in text:
            span, count = text.split("/")
            a, b = (float(v) for v in span.split(":"))
            return [float(v) for v in np.linspace(a, b, int(count))]
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            return [round(a + k * step, 12) for k in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use a:b:step, a:b/count or a,b,c") from None


def parse_shapes(text: str) -> list[QpcShape]:
    try:
        return [QpcShape.parse(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_shape(text: str) -> QpcShape:
    try:
        return QpcShape.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def parse_interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"interval must look like lo:hi, got {text!r}") from None
    return a, b


def _deltas(args, single: bool):
    if args.delta_sqrtpi is not None:
        values = [k * SQRT_PI for k in args.delta_sqrtpi]
    elif args.delta is not None:
        values = list(args.delta)
    else:
        values = [0.0]
    for d in values:
        try:
            HrmParams(d)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if single:
        if len(values) != 1:
            raise UsageError("this command takes a single delta")
        return values[0]
    return values


def _add_delta(p: argparse.ArgumentParser, many: bool):
    g = p.add_mutually_exclusive_group()
    what = "grid" if many else "value"
    g.add_argument("--delta", type=parse_grid, help=f"danger-zone half-width {what}, absolute units")
    g.add_argument("--delta-sqrtpi", type=parse_grid, help=f"danger-zone half-width {what} in units of sqrt(pi)")


def _add_common(p: argparse.ArgumentParser, seeded: bool = True):
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--svg", action="store_true", help="also write an SVG plot")
    if seeded:
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--workers", type=positive_int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkpqpc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="print reference constants")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("hrm-curves", help="analytic HRM outcome probabilities")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--std", type=parse_grid, help="noise std grid")
    g.add_argument("--db", type=parse_grid, help="squeezing grid in dB")
    _add_delta(p, many=True)
    _add_common(p, seeded=False)
    p.set_defaults(func=cmd_hrm_curves)

    p = sub.add_parser("sweep", help="Monte Carlo failure rates over shapes x xi")
    p.add_argument("--shapes", type=parse_shapes, required=True, help='e.g. "5x4,7x5"')
    p.add_argument("--xi", type=parse_grid, required=True, help="channel std grid, e.g. 0.40:0.70:0.01")
    _add_delta(p, many=False)
    p.add_argument("--trials", type=positive_int, default=100_000)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold", help="crossover threshold of a code ladder")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--shapes", type=parse_shapes)
    g.add_argument("--ladder", choices=["auto"], help="balance m for each n (E_X ~ E_Z)")
    p.add_argument("--ladder-n", type=parse_grid, default=list(DEFAULT_LADDER_N))
    p.add_argument("--probe", type=float, default=HASHING_BOUND, help="xi at which the ladder is balanced")
    p.add_argument("--balance-trials", type=positive_int, default=None)
    _add_delta(p, many=False)
    p.add_argument("--interval", type=parse_interval, default=(0.45, 0.70))
    p.add_argument("--trials", type=positive_int, default=100_000)
    p.add_argument("--refinements", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("optimize-delta", help="threshold versus delta")
    p.add_argument("--shapes", type=parse_shapes, default=None, help="fixed ladder (default: auto per delta)")
    p.add_argument("--ladder-n", type=parse_grid, default=list(DEFAULT_LADDER_N))
    p.add_argument("--probe", type=float, default=HASHING_BOUND)
    p.add_argument("--balance-trials", type=positive_int, default=None)
    _add_delta(p, many=True)
    p.add_argument("--interval", type=parse_interval, default=(0.45, 0.70))
    p.add_argument("--trials", type=positive_int, default=50_000)
    p.add_argument("--refinements", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=cmd_optimize_delta)

    p = sub.add_parser("oracle", help="exact E_X, E_Z for a small code")
    p.add_argument("--shape", type=parse_shape, required=True)
    p.add_argument("--xi", type=float, required=True)
    _add_delta(p, many=False)
    _add_common(p, seeded=False)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (default: the recorded one)")
    p.set_defaults(func=cmd_rerun)
    return parser


# ------------------------------------------------------------------ output


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(row[c]) for c in columns])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


class _Outputs:
    def __init__(self, directory: Path):
        self.directory = directory
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str):
        path = self.directory / name
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        log.info("wrote %s", path)


def _manifest(args, outputs: _Outputs, params: dict, started: float):
    doc = {
        "command": args.command,
        "argv": args._argv,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "outputs": outputs.files,
    }
    outputs.write(f"{args.command}.manifest.json", _json_text(doc))


def _shape_list(shapes):
    return [str(s) for s in shapes]


# ------------------------------------------------------------------ commands


def cmd_info(args):
    print(f"hashing bound xi_HB = 1/sqrt(e) = {HASHING_BOUND!r}")
    print(f"sqrt(pi) = {SQRT_PI!r}")
    print(f"delta = 0.223 sqrt(pi) = {0.223 * SQRT_PI!r}")
    return EXIT_OK


def cmd_hrm_curves(args):
    started = time.time()
    if args.db is not None:
        stds = [squeezing_db_to_std(db).std_dev for db in args.db]
    else:
        stds = list(args.std)
    if any(not (s > 0) for s in stds):
        raise UsageError("std grid values must be > 0")
    deltas = _deltas(args, single=False)
    rows = []
    for d in deltas:
        for s in stds:
            pr = outcome_probabilities(NoiseParams(s), d)
            keep = pr.success_probability
            rows.append(
                {
                    "squeezing_db": std_to_squeezing_db(s),
                    "std_dev": s,
                    "delta": d,
                    "p_correct": pr.p_correct,
                    "p_incorrect": pr.p_incorrect,
                    "p_discard": pr.p_discard,
                    "success_prob": keep,
                    "postselected_error": pr.p_incorrect / keep if keep > 0 else float("nan"),
                }
            )
    out = _Outputs(args.out)
    out.write("hrm_curves.csv", _csv_text(HRM_COLUMNS, rows))
    if args.svg:
        for col, title in (("postselected_error", "Postselected error"), ("success_prob", "Success probability")):
            plot = Plot(title, "squeezing (dB)", col, log_y=(col == "postselected_error"))
            for d in deltas:
                sel = [r for r in rows if r["delta"] == d]
                plot.series.append(
                    Series(f"delta={d / SQRT_PI:.3g} sqrt(pi)", [r["squeezing_db"] for r in sel], [r[col] for r in sel])
                )
            out.write(f"hrm_{col}.svg", render(plot))
    _manifest(args, out, {"std_dev": stds, "delta": deltas}, started)
    return EXIT_OK


def _estimate_row(e):
    (xl, xh), (zl, zh), (pl, ph) = e.e_x_ci, e.e_z_ci, e.p_e_ci
    return {
        "n": e.shape.n,
        "m": e.shape.m,
        "xi": e.xi,
        "delta": e.delta,
        "trials": e.trials,
        "e_x": e.e_x,
        "e_x_lo": xl,
        "e_x_hi": xh,
        "e_z": e.e_z,
        "e_z_lo": zl,
        "e_z_hi": zh,
        "p_e": e.p_e,
        "p_e_lo": pl,
        "p_e_hi": ph,
        "discard_rate": e.discard_rate,
    }


def cmd_sweep(args):
    started = time.time()
    delta = _deltas(args, single=True)
    if any(not (x >= 0) for x in args.xi):
        raise UsageError("xi values must be >= 0")
    ests = sweep(args.shapes, args.xi, HrmParams(delta), args.trials, args.seed, workers=args.workers)
    rows = [_estimate_row(e) for e in ests]
    out = _Outputs(args.out)
    out.write("sweep.csv", _csv_text(SWEEP_COLUMNS, rows))
    if args.svg:
        plot = Plot(
            f"Failure probability, delta={delta / SQRT_PI:.3g} sqrt(pi)",
            "xi",
            "p_E",
            log_y=True,
            vlines=[(HASHING_BOUND, "1/sqrt(e)")],
        )
        for shape in args.shapes:
            sel = [r for r in rows if (r["n"], r["m"]) == (shape.n, shape.m)]
            plot.series.append(Series(f"({shape.n},{shape.m})", [r["xi"] for r in sel], [r["p_e"] for r in sel]))
        out.write("sweep.svg", render(plot))
    params = {
        "shapes": _shape_list(args.shapes),
        "xi": list(args.xi),
        "delta": delta,
        "trials": args.trials,
        "seed": args.seed,
    }
    _manifest(args, out, params, started)
    return EXIT_OK


def _crossover_doc(c):
    return {
        "shape_a": str(c.shape_a),
        "shape_b": str(c.shape_b),
        "crossover": c.xi,
        "ci_lo": c.xi_lo,
        "ci_hi": c.xi_hi,
        "bracket": list(c.bracket) if c.bracket else None,
    }


def _report_doc(report):
    return {
        "delta": report.delta,
        "delta_sqrtpi": report.delta / SQRT_PI,
        "ladder": _shape_list(report.shapes),
        "interval": list(report.interval),
        "trials_per_point": report.trials_per_point,
        "crossovers": [_crossover_doc(c) for c in report.crossovers],
        "headline_threshold": report.headline,
        "hashing_bound": HASHING_BOUND,
        "gap_to_hashing_bound": report.hashing_gap,
    }


def cmd_threshold(args):
    started = time.time()
    delta = _deltas(args, single=True)
    hrm = HrmParams(delta)
    if args.shapes is not None:
        shapes = args.shapes
        if len(shapes) < 2:
            raise UsageError("--shapes needs at least two codes")
    else:
        n_list = [int(n) for n in args.ladder_n]
        shapes = balance_shapes(
            n_list, args.probe, hrm, args.balance_trials or args.trials, args.seed, workers=args.workers
        )
    try:
        report = find_threshold(shapes, hrm, args.interval, args.trials, args.seed, args.workers, args.refinements)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = _report_doc(report)
    doc["ladder_mode"] = "auto" if args.shapes is None else "fixed"
    doc["seed"] = args.seed
    out = _Outputs(args.out)
    out.write("threshold.json", _json_text(doc))
    params = {
        "shapes": _shape_list(shapes),
        "ladder": args.ladder,
        "ladder_n": args.ladder_n,
        "probe": args.probe,
        "delta": delta,
        "interval": list(args.interval),
        "trials": args.trials,
        "refinements": args.refinements,
        "seed": args.seed,
    }
    _manifest(args, out, params, started)
    return EXIT_OK


def cmd_optimize_delta(args):
    started = time.time()
    deltas = _deltas(args, single=False)
    try:
        result = optimize_delta(
            args.shapes,
            deltas,
            args.interval,
            args.trials,
            args.seed,
            n_list=[int(n) for n in args.ladder_n],
            xi_probe=args.probe,
            balance_trials=args.balance_trials,
            refinements=args.refinements,
            workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {
        "points": [
            {
                "delta": p.delta,
                "delta_sqrtpi": p.delta / SQRT_PI,
                "threshold": p.threshold,
                "ladder": _shape_list(p.report.shapes),
                "crossovers": [_crossover_doc(c) for c in p.report.crossovers],
            }
            for p in result.points
        ],
        "delta_star": result.delta_star,
        "delta_star_sqrtpi": result.delta_star / SQRT_PI,
        "threshold_star": result.threshold_star,
        "hashing_bound": HASHING_BOUND,
        "seed": args.seed,
    }
    out = _Outputs(args.out)
    out.write("optimize_delta.json", _json_text(doc))
    if args.svg:
        pts = [p for p in result.points if p.threshold is not None]
        plot = Plot(
            "Threshold versus delta",
            "delta / sqrt(pi)",
            "threshold xi",
            series=[Series("threshold", [p.delta / SQRT_PI for p in pts], [p.threshold for p in pts])],
        )
        out.write("optimize_delta.svg", render(plot))
    params = {
        "shapes": _shape_list(args.shapes) if args.shapes else None,
        "ladder_n": args.ladder_n,
        "probe": args.probe,
        "delta": deltas,
        "interval": list(args.interval),
        "trials": args.trials,
        "refinements": args.refinements,
        "seed": args.seed,
    }
    _manifest(args, out, params, started)
    return EXIT_OK


def cmd_oracle(args):
    started = time.time()
    delta = _deltas(args, single=True)
    if not (args.xi >= 0 and math.isfinite(args.xi)):
        raise UsageError("--xi must be a finite value >= 0")
    probs = outcome_probabilities(NoiseParams(args.xi), delta)
    exact = exact_failure(args.shape, probs)
    doc = {
        "shape": str(args.shape),
        "xi": args.xi,
        "delta": delta,
        "p_correct": probs.p_correct,
        "p_incorrect": probs.p_incorrect,
        "p_discard": probs.p_discard,
        "e_x": exact.e_x,
        "e_z": exact.e_z,
        "p_e": exact.p_e,
    }
    out = _Outputs(args.out)
    out.write("oracle.json", _json_text(doc))
    _manifest(args, out, {"shape": str(args.shape), "xi": args.xi, "delta": delta}, started)
    return EXIT_OK


def cmd_rerun(args):
    try:
        manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read {args.manifest}: {exc.strerror or exc}") from exc
    argv = list(manifest["argv"])
    if args.out is not None:
        argv = _replace_out(argv, str(args.out))
    return main(argv)


def _replace_out(argv: list[str], out: str) -> list[str]:
    res = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res + ["--out", out]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    args._argv = [a for a in argv if a not in ("-v", "--verbose")]
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gkpqpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as exc:
        print(f"gkpqpc: size error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"gkpqpc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
