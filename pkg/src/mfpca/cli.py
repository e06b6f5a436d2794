"""``mfpca`` command line: synth, detect-multi, detect-single, eval.

Exit codes: 0 = ran, nothing flagged; 1 = ran, anomalies flagged; 2 = error.
``eval`` exits 0 on success.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from mfpca import io
from mfpca.detect import detect_multi_sensor, detect_single_sensor
from mfpca.eval import auc_summary, report_labels, roc_auc
from mfpca.pca import Method, PcaMethod
from mfpca.synth import SynthConfig, generate

log = logging.getLogger("mfpca")

EXIT_OK = 0
EXIT_ANOMALY = 1
EXIT_ERROR = 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _styled(text: str, code: str) -> str:
    if os.environ.get("MFPCA_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _add_detect_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path, help="recording CSV")
    p.add_argument("--out", type=Path, default=None, help="report JSON path (default: <input>.report.json)")
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.L1_KERNEL.value)
    cal = p.add_mutually_exclusive_group()
    cal.add_argument("--calibrate", type=Path, help="clean recording CSV used to learn the threshold")
    cal.add_argument("--threshold", type=_positive_float, help="fixed CSD threshold")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--persistence", type=_positive_int, default=2)
    p.add_argument("--tolerance", type=_positive_float, default=1e-8, help="recursive-l1 only")
    p.add_argument("--max-iterations", type=_positive_int, default=1000, help="recursive-l1 only")
    p.add_argument("--sample-rate", type=_positive_float, default=None, help="override the rate inferred from time_s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfpca", description=__doc__.splitlines()[0].replace("``", ""))
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic recording and its ground truth")
    p.add_argument("config", type=Path, help="SynthConfig JSON")
    p.add_argument("out", type=Path, help="recording CSV to write")
    p.add_argument("--truth", type=Path, default=None, help="truth JSON (default: <out>.truth.json)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("detect-multi", help="flag anomalous sensors across channels")
    _add_detect_args(p)
    p.add_argument("--segment-len", type=_positive_int, default=500)

    p = sub.add_parser("detect-single", help="flag anomalous windows of one channel")
    _add_detect_args(p)
    p.add_argument("--channel", required=True)
    p.add_argument("--window-len", type=_positive_int, default=224)
    p.add_argument("--window-count", type=_positive_int, default=5)
    p.add_argument("--components", type=_positive_int, default=1)

    p = sub.add_parser("eval", help="ROC/AUC of one or more reports against ground truth")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    return parser


def _method(args) -> PcaMethod:
    return PcaMethod(Method(args.method), args.tolerance, args.max_iterations)


def _report_path(args) -> Path:
    return args.out if args.out is not None else args.input.with_suffix(".report.json")


def _require_calibration(args) -> None:
    if args.calibrate is None and args.threshold is None:
        raise UsageError("either --calibrate CLEAN.csv or --threshold T is required")


def _finish(report, args) -> int:
    path = _report_path(args)
    io.write_report_json(report, path)
    if report.any_anomaly:
        names = ", ".join(report.anomalous_channels) or "none persistent"
        print(_styled(f"anomalies flagged; anomalous channels: {names}", "31"))
        print(f"report: {path}")
        return EXIT_ANOMALY
    print(f"no anomalies; report: {path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        raw = json.loads(args.config.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise io.FormatError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = SynthConfig.from_dict(raw)
    except TypeError as exc:
        raise io.FormatError(f"{args.config}: {exc}") from None
    rec = generate(cfg)
    truth_path = args.truth or args.out.with_suffix(".truth.json")
    io.write_recording_csv(rec, args.out)
    io.write_truth_json(rec.ground_truth, truth_path)
    print(f"wrote {args.out} ({rec.n_samples} samples x {rec.n_channels} channels) and {truth_path}")
    return EXIT_OK


def cmd_detect_multi(args) -> int:
    _require_calibration(args)
    rec = io.read_recording_csv(args.input, args.sample_rate)
    training = io.read_recording_csv(args.calibrate, args.sample_rate) if args.calibrate else None
    report = detect_multi_sensor(
        rec,
        _method(args),
        args.segment_len,
        args.alpha,
        args.persistence,
        training=training,
        threshold=args.threshold,
    )
    return _finish(report, args)


def cmd_detect_single(args) -> int:
    _require_calibration(args)
    rec = io.read_recording_csv(args.input, args.sample_rate)
    if args.channel not in rec.channels:
        raise UsageError(f"channel {args.channel!r} not in {args.input} header {list(rec.channels)}")
    training = None
    if args.calibrate:
        clean = io.read_recording_csv(args.calibrate, args.sample_rate)
        if args.channel in clean.channels:
            training = clean.channel(args.channel)
        elif clean.n_channels == 1:
            training = clean.samples[:, 0]
        else:
            raise UsageError(f"calibration file {args.calibrate} has no channel {args.channel!r}")
    report = detect_single_sensor(
        rec.channel(args.channel),
        _method(args),
        args.window_len,
        args.window_count,
        args.components,
        args.alpha,
        args.persistence,
        training=training,
        threshold=args.threshold,
        name=args.channel,
        sample_rate_hz=rec.sample_rate_hz,
    )
    return _finish(report, args)


def cmd_eval(args) -> int:
    truth = io.read_truth_json(args.truth)
    reports = [io.read_report_json(p) for p in args.reports]
    first = reports[0]
    key = (first.channels, [(r.start, r.stop) for r in first.rows])
    named = []
    for path, report in zip(args.reports, reports):
        if (report.channels, [(r.start, r.stop) for r in report.rows]) != key:
            raise UsageError(f"{path} does not cover the same (segment, channel) cells as {args.reports[0]}")
        curve = roc_auc(report.scores, report_labels(report, truth))
        roc_path = args.out_dir / f"{path.stem}.roc.csv"
        io.atomic_write_text(roc_path, io.roc_to_csv(curve))
        named.append((report.method.name, curve.auc))
    rows = auc_summary(named)
    lines = ["method,auc,auc_increment"] + [f"{n},{a:.4f},{inc}" for n, a, inc in rows]
    io.atomic_write_text(args.out_dir / "summary.csv", "\n".join(lines) + "\n")
    width = max(len(n) for n, _, _ in rows)
    print(f"{'method':<{width}}  auc     increment")
    for n, a, inc in rows:
        print(f"{n:<{width}}  {a:.4f}  {inc}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "detect-multi": cmd_detect_multi,
    "detect-single": cmd_detect_single,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"mfpca: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
