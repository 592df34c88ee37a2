"""Command-line entry point: ``arbo {decode,verify,calibrate,oracle,gen}``.

Exit codes: 0 success / all checks pass, 1 input error, 2 decoding or
verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .calibration import CalibrationError, calibration_report
from .core import ArboError, ScoreValueError, Temperature
from .decode import DecodeError, DecodeOptions, decode, verify_invariance
from .io import format_conllu, format_scores, read_scores
from .oracle import run_oracle
from .synth import GenerationError, GenSpec, generate
from .weighting import log_softmax_weights

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; keep 2 for algorithmic failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


def _workers() -> int:
    raw = os.environ.get("ARBO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"ARBO_THREADS must be an integer, got {raw!r}") from None


def _map(fn, items):
    """Order-preserving map, across processes when ARBO_THREADS > 1."""
    items = list(items)
    workers = _workers()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _load(path):
    try:
        return read_scores(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except (ArboError, ValueError) as e:
        raise InputError(f"{path}: {e}") from None


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _temperature(text):
    try:
        return Temperature(float(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _temperature_list(text):
    temps = [_temperature(part) for part in text.split(",") if part.strip()]
    if len(temps) < 2:
        raise argparse.ArgumentTypeError("give at least two comma-separated temperatures")
    return temps


def _decode_one(job):
    x, t, options = job
    return decode(log_softmax_weights(x, t), 0, options)


def cmd_decode(args) -> int:
    sentences = _load(args.scores)
    options = DecodeOptions(root_constraint=args.root_constraint)
    trees = _map(_decode_one, [(x, args.temperature, options) for x, _ in sentences])
    _emit(args.out, "".join(format_conllu(x.words, tree) for (x, _), tree in zip(sentences, trees)))
    return EXIT_OK


def _verify_one(job):
    x, temps, options, gaps = job
    return verify_invariance(x, temps, 0, options, gaps=gaps)


def cmd_verify(args) -> int:
    sentences = _load(args.scores)
    options = DecodeOptions(root_constraint=args.root_constraint)
    jobs = [(x, args.temperatures, options, not args.no_gaps) for x, _ in sentences]
    reports = _map(_verify_one, jobs)
    invariant = sum(r.identical for r in reports)
    doc = {
        "temperatures": [t.t for t in args.temperatures],
        "root_constraint": args.root_constraint,
        "invariant": invariant,
        "total": len(reports),
        "sentences": [dict(index=i, **r.to_dict()) for i, r in enumerate(reports)],
    }
    if args.report:
        _emit(args.report, _dump_json(doc))
    print(f"{invariant}/{len(reports)} invariant")
    return EXIT_OK if invariant == len(reports) else EXIT_FAILURE


def _write_bins_csv(path, bins):
    with open(path, "w", newline="", encoding="utf-8") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["bin_lo", "bin_hi", "mean_conf", "accuracy", "count"])
        for b in bins:
            out.writerow([
                repr(b.lo), repr(b.hi),
                "" if b.mean_confidence is None else repr(b.mean_confidence),
                "" if b.accuracy is None else repr(b.accuracy),
                b.count,
            ])


def cmd_calibrate(args) -> int:
    sentences = _load(args.scores)
    if not sentences:
        raise InputError(f"{args.scores}: no sentences")
    missing = [i for i, (_, gold) in enumerate(sentences) if gold is None]
    if missing:
        raise InputError(f"{args.scores}: gold_heads missing for sentence(s) {missing[:10]}")
    if args.bins < 1:
        raise InputError("--bins must be at least 1")
    options = DecodeOptions(root_constraint=args.root_constraint)
    try:
        report = calibration_report(sentences, args.bins, options)
    except CalibrationError as e:
        raise InputError(f"{args.scores}: {e}") from None
    doc = report.to_dict()
    doc["uas_equal"] = report.uas_before == report.uas_after
    _emit(args.report, _dump_json(doc))
    if args.csv:
        _write_bins_csv(args.csv, report.after.bins)
    if args.csv_uncalibrated:
        _write_bins_csv(args.csv_uncalibrated, report.before.bins)
    print(
        f"T={report.fitted_temperature.t:.4f} nll {report.nll_before:.6f} -> {report.nll_after:.6f} "
        f"ece {report.before.ece:.6f} -> {report.after.ece:.6f} "
        f"uas {report.uas_before:.6f} -> {report.uas_after:.6f}",
        file=sys.stderr,
    )
    return EXIT_OK if doc["uas_equal"] else EXIT_FAILURE


def cmd_oracle(args) -> int:
    instances = [x for x, _ in _load(args.scores)] if args.scores else None
    if not 2 <= args.n_max <= 8:
        raise InputError("--n-max must be between 2 and 8")
    result = run_oracle(args.n_max, args.trials, args.seed, args.root_constraint, instances)
    print(f"decoder: {result.decoder_pass}/{result.trials}")
    print(f"identity: {result.identity_pass}/{result.trials}")
    if result.skipped:
        print(f"skipped {result.skipped} input sentence(s) with n > 8")
    return EXIT_OK if result.ok else EXIT_FAILURE


def cmd_gen(args) -> int:
    try:
        spec = GenSpec(
            seed=args.seed,
            n_range=(args.n_min, args.n_max),
            logit_scale=args.logit_scale,
            sharpening=args.sharpening,
            count=args.count,
        )
    except ValueError as e:
        raise InputError(str(e)) from None
    _emit(args.out, format_scores(generate(spec)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arbo", description="Arborescence decoding and temperature calibration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="decode score files to CoNLL-U trees")
    p.add_argument("scores")
    p.add_argument("--root-constraint", action="store_true", help="exactly one child of ROOT")
    p.add_argument("--temperature", type=_temperature, default=Temperature(1.0))
    p.add_argument("--out", default="-", help="CoNLL-U output path (default: stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="check decoded trees across temperatures")
    p.add_argument("scores")
    p.add_argument("--temperatures", type=_temperature_list, default=_temperature_list("0.1,0.5,1,2,10"))
    p.add_argument("--root-constraint", action="store_true")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--no-gaps", action="store_true", help="skip runner-up gap computation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("calibrate", help="fit a temperature and report calibration")
    p.add_argument("scores")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--report", default="-", help="JSON report path (default: stdout)")
    p.add_argument("--csv", help="reliability bins at the fitted temperature")
    p.add_argument("--csv-uncalibrated", help="reliability bins at T=1")
    p.add_argument("--root-constraint", action="store_true", help="constrain trees used for UAS")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("oracle", help="CLE vs enumeration and weight-identity trials")
    p.add_argument("scores", nargs="?", help="optional score file to check as well")
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root-constraint", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a synthetic score file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--sharpening", type=float, default=1.0)
    p.add_argument("--logit-scale", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # --help exits 0; usage errors were remapped to EXIT_INPUT by _Parser
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as e:
        print(f"arbo: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (DecodeError, ScoreValueError, GenerationError) as e:
        print(f"arbo: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as e:
        print(f"arbo: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
