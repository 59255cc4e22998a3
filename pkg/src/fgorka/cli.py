"""Command-line interface: ``fgorka {track,bench,synth,eval,diag}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .bench import BenchRow, parse_range, run_benchmark
from .diagnostics import level_discrepancy
from .driver import FgConfig, pad_to_multiple, split_path, track, track_multi
from .metrics import shift_error
from .path_solver import BudgetExceededError
from .resampling import make_pair
from .shiftops import ShiftPath
from .smoothing import build_system
from .synthgen import SynthSpec, generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_IO = 4

log = logging.getLogger("fgorka")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fgorka", description="Coarse-to-fine object tracking.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("track", help="recover shift paths and object stacks")
    t.add_argument("--input", required=True, help="matrix file, CSV or frame directory")
    t.add_argument("--C", dest="c_max", type=_positive_int, required=True)
    t.add_argument("--mu", type=_nonneg_float, default=100.0)
    t.add_argument("--K", dest="band_k", type=_positive_int, default=5)
    t.add_argument("--r", type=int, choices=(2, 3), default=2)
    t.add_argument("--kind", choices=("wavelet", "fourier", "optimal"), default="fourier")
    t.add_argument("--J", dest="j_up", type=_nonneg_int, default=0)
    t.add_argument("--rounding", choices=("up", "down"), default="up")
    t.add_argument("--objects", type=_positive_int, default=1)
    t.add_argument("--object-mu", type=_nonneg_float, nargs="+", default=None,
                   help="one smoothing weight per extracted object")
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--truth", default=None, help="path CSV to score against")

    b = sub.add_parser("bench", help="time plain and coarse-to-fine solves")
    b.add_argument("--M", dest="m", type=_positive_int, default=641)
    b.add_argument("--N", dest="n", type=_positive_int, default=100)
    b.add_argument("--C-range", dest="c_range", default="5")
    b.add_argument("--K-range", dest="k_range", default="2:6")
    b.add_argument("--r", type=int, choices=(2, 3), default=3)
    b.add_argument("--kind", choices=("wavelet", "fourier", "optimal"), default="fourier")
    b.add_argument("--J", dest="j_up", type=_nonneg_int, default=0)
    b.add_argument("--mu", type=_nonneg_float, default=100.0)
    b.add_argument("--trials", type=_positive_int, default=1)
    b.add_argument("--compare-plain", action="store_true")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None, help="CSV file (default: stdout)")

    s = sub.add_parser("synth", help="write a synthetic stack and its planted path")
    s.add_argument("--config", default=None, help="key=value spec file")
    s.add_argument("--seed", type=int, default=None, help="overrides the spec seed")
    s.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="path error between two path CSV files")
    e.add_argument("recovered")
    e.add_argument("truth")

    d = sub.add_parser("diag", help="one-level error report")
    d.add_argument("--input", required=True)
    d.add_argument("--path", required=True, help="fine path CSV (denominator 1)")
    d.add_argument("--r", type=int, choices=(2, 3), default=2)
    d.add_argument("--kind", choices=("wavelet", "fourier", "optimal"), default="fourier")
    d.add_argument("--mu", type=_nonneg_float, default=100.0)
    d.add_argument("--seed", type=int, default=0)
    return parser


# --------------------------------------------------------------------------
# commands


def _cmd_track(args) -> int:
    data = fio.load_stack(args.input)
    if args.object_mu is not None and len(args.object_mu) != args.objects:
        raise _UsageError("--object-mu needs one value per object")
    try:
        cfg = FgConfig(c_max=args.c_max, mu=args.mu, band_k=args.band_k, r=args.r,
                       kind=args.kind, j_up=args.j_up, l_rounding=args.rounding)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.objects == 1 and args.object_mu is None:
        results = [track(data, cfg)]
    else:
        results = track_multi(data, cfg, args.objects, args.object_mu)
    truth = fio.read_path_csv(args.truth) if args.truth else None
    with open(out / "diagnostics.jsonl", "w") as fh:
        for i, res in enumerate(results):
            fio.write_path_csv(out / f"path_{i}.csv", res.path)
            fio.write_matrix(out / f"object_{i}.orka", res.object)
            for rec in res.per_level:
                fh.write(json.dumps({"object": i, **rec.as_dict()}, sort_keys=True) + "\n")
            fh.write(json.dumps({"object": i, "value": res.value, "levels": res.levels,
                                 "j_up": res.j_up, "pad": list(res.pad)}, sort_keys=True) + "\n")
            if truth is not None:
                print("object %d error %.17g" % (i, shift_error(res.path, truth)))
    return EXIT_OK


def _cmd_bench(args) -> int:
    rows = run_benchmark(args.m, args.n, parse_range(args.c_range), parse_range(args.k_range),
                         r=args.r, kind=args.kind, trials=args.trials, mu=args.mu,
                         compare_plain=args.compare_plain, seed=args.seed, j_up=args.j_up)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BenchRow.HEADER)
        for row in rows:
            writer.writerow(row.as_row())
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = SynthSpec()
    if args.config:
        spec = SynthSpec.from_text(Path(args.config).read_text())
    if args.seed is not None:
        spec = SynthSpec(**{**spec.__dict__, "seed": args.seed})
    data, truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_matrix(out / "data.orka", data)
    fio.write_path_csv(out / "truth.csv", truth)
    (out / "spec.txt").write_text(spec.to_text())
    return EXIT_OK


def _cmd_eval(args) -> int:
    rec = fio.read_path_csv(args.recovered)
    truth = fio.read_path_csv(args.truth)
    print("%.17g" % shift_error(rec, truth))
    return EXIT_OK


def _cmd_diag(args) -> int:
    data = fio.load_stack(args.input)
    if data.ndim != 2:
        raise _UsageError("diag expects an (M, N) stack")
    fine = fio.read_path_csv(args.path)
    if fine.denominator != 1:
        raise _UsageError("diag needs an integral fine path")
    data, _ = pad_to_multiple(data, args.r)
    coarse, _ = split_path(fine, args.r)
    pair = make_pair(args.kind, data.shape[0], args.r, data=data)
    system = build_system(data.shape[1], args.mu, 1)
    shifted = np.asarray(fine.shifts) - fine.shifts[0]
    report = level_discrepancy(data, pair, system, ShiftPath(shifted), ShiftPath(coarse))
    print(report.to_json())
    return EXIT_OK


class _UsageError(Exception):
    pass


_COMMANDS = {"track": _cmd_track, "bench": _cmd_bench, "synth": _cmd_synth,
             "eval": _cmd_eval, "diag": _cmd_diag}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"fgorka: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        print(f"fgorka: budget exceeded: {exc.states} projected states "
              f"({exc.nbytes} bytes > {exc.budget})", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, ValueError) as exc:
        print(f"fgorka: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
