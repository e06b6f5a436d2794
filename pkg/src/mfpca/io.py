"""File formats: recording CSV, ground-truth JSON, report JSON, ROC CSV.

Recording CSV: header ``time_s,<ch1>,<ch2>,...``, one row per sample, UTF-8,
LF line endings. Floats are written with 17 significant digits so a
write/read round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from mfpca.detect import Calibration, CsdReport, Row
from mfpca.eval import RocCurve
from mfpca.pca import Method, PcaMethod
from mfpca.recording import AnomalousRange, GroundTruth, SensorRecording

__all__ = [
    "REPORT_SCHEMA_ID",
    "TRUTH_SCHEMA_ID",
    "FormatError",
    "fmt_float",
    "atomic_write_text",
    "recording_to_csv",
    "write_recording_csv",
    "read_recording_csv",
    "truth_to_dict",
    "truth_from_dict",
    "write_truth_json",
    "read_truth_json",
    "report_to_dict",
    "report_from_dict",
    "write_report_json",
    "read_report_json",
    "roc_to_csv",
    "load_report_schema",
]

REPORT_SCHEMA_ID = "mfpca.report/1"
TRUTH_SCHEMA_ID = "mfpca.truth/1"


class FormatError(ValueError):
    """Malformed input file; message carries the file and line where possible."""


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        # mkstemp creates 0600; give the result the usual umask-based mode.
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- recordings --------------------------------------------------------------


def recording_to_csv(recording: SensorRecording) -> str:
    out = _io.StringIO()
    out.write(",".join(("time_s",) + recording.channels) + "\n")
    rate = recording.sample_rate_hz
    for i, row in enumerate(recording.samples):
        out.write(",".join([fmt_float(i / rate)] + [fmt_float(v) for v in row]) + "\n")
    return out.getvalue()


def write_recording_csv(recording: SensorRecording, path) -> None:
    atomic_write_text(path, recording_to_csv(recording))


def read_recording_csv(path, sample_rate_hz: float | None = None) -> SensorRecording:
    """Parse a recording CSV. The sample rate is taken from the first time step unless given."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0].strip() != "time_s" or len(header) < 2:
            raise FormatError(f"{path}:1: header must be 'time_s,<channel>,...'")
        channels = [h.strip() for h in header[1:]]
        if any(not c for c in channels) or len(set(channels)) != len(channels):
            raise FormatError(f"{path}:1: channel names must be non-empty and unique")
        times: list[float] = []
        rows: list[list[float]] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise FormatError(f"{path}:{line}: non-numeric field in {row!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise FormatError(f"{path}:{line}: non-finite value")
            times.append(vals[0])
            rows.append(vals[1:])
    if not rows:
        raise FormatError(f"{path}: no data rows")
    if sample_rate_hz is None:
        if len(times) >= 2 and times[1] > times[0]:
            # Rounded so 1 / (1 / r) recovers r for rates written by this module.
            sample_rate_hz = float(f"{1.0 / (times[1] - times[0]):.12g}")
        else:
            sample_rate_hz = 2.0
    return SensorRecording(tuple(channels), np.array(rows), sample_rate_hz)


# -- ground truth ------------------------------------------------------------


def truth_to_dict(truth: GroundTruth) -> dict:
    return {
        "schema": TRUTH_SCHEMA_ID,
        "channels": list(truth.channels),
        "n_samples": truth.n_samples,
        "anomalous_channels": list(truth.anomalous_channels),
        "anomalous_ranges": [
            {"channel": r.channel, "start": r.start, "stop": r.stop} for r in truth.anomalous_ranges
        ],
    }


def truth_from_dict(d: dict) -> GroundTruth:
    try:
        if d.get("schema") != TRUTH_SCHEMA_ID:
            raise FormatError(f"unsupported truth schema {d.get('schema')!r}")
        return GroundTruth(
            tuple(d["channels"]),
            int(d["n_samples"]),
            tuple(d.get("anomalous_channels", ())),
            tuple(AnomalousRange(r["channel"], int(r["start"]), int(r["stop"])) for r in d.get("anomalous_ranges", ())),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed truth file: {exc}") from None


def write_truth_json(truth: GroundTruth, path) -> None:
    atomic_write_text(path, _dumps(truth_to_dict(truth)))


def read_truth_json(path) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        try:
            return truth_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from None


# -- reports -----------------------------------------------------------------


def report_to_dict(report: CsdReport) -> dict:
    """JSON-ready report. ``rows`` mirror a segment x channel score table."""
    cal = report.calibration
    return {
        "schema": REPORT_SCHEMA_ID,
        "mode": report.mode,
        "method": {
            "name": report.method.name,
            "tolerance": report.method.tolerance,
            "max_iterations": report.method.max_iterations,
        },
        "channels": list(report.channels),
        "sample_rate_hz": report.sample_rate_hz,
        "params": dict(report.params),
        "calibration": {"mu": cal.mu, "sigma": cal.sigma, "alpha": cal.alpha, "threshold": cal.threshold},
        "persistence": report.persistence,
        "constant_channels": list(report.constant_channels),
        "rows": [
            {
                "index": r.index,
                "block": r.block,
                "start": r.start,
                "stop": r.stop,
                "time_s": [r.start_s, r.end_s],
                "scores": [float(v) for v in report.scores[k]],
                "flags": [bool(f) for f in report.flags[k]],
            }
            for k, r in enumerate(report.rows)
        ],
        "anomalous_channels": list(report.anomalous_channels),
        "any_anomaly": report.any_anomaly,
    }


def report_from_dict(d: dict) -> CsdReport:
    try:
        if d.get("schema") != REPORT_SCHEMA_ID:
            raise FormatError(f"unsupported report schema {d.get('schema')!r}")
        m = d["method"]
        method = PcaMethod(Method(m["name"]), float(m["tolerance"]), int(m["max_iterations"]))
        rows = tuple(
            Row(int(r["index"]), int(r["start"]), int(r["stop"]), float(r["time_s"][0]), float(r["time_s"][1]), r.get("block"))
            for r in d["rows"]
        )
        scores = np.array([r["scores"] for r in d["rows"]], dtype=float).reshape(len(rows), len(d["channels"]))
        c = d["calibration"]
        report = CsdReport(
            mode=d["mode"],
            method=method,
            channels=tuple(d["channels"]),
            rows=rows,
            scores=scores,
            calibration=Calibration(float(c["mu"]), float(c["sigma"]), float(c["alpha"]), float(c["threshold"])),
            persistence=int(d["persistence"]),
            sample_rate_hz=float(d["sample_rate_hz"]),
            constant_channels=tuple(d.get("constant_channels", ())),
            params=dict(d.get("params", {})),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed report: {exc}") from None
    stored = np.array([r["flags"] for r in d["rows"]], dtype=bool).reshape(report.flags.shape)
    if not np.array_equal(stored, report.flags):
        raise FormatError("report flags disagree with scores and threshold")
    return report


def write_report_json(report: CsdReport, path) -> None:
    atomic_write_text(path, _dumps(report_to_dict(report)))


def read_report_json(path) -> CsdReport:
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return report_from_dict(d)


def load_report_schema() -> dict:
    return json.loads((Path(__file__).parent / "schemas" / "report.schema.json").read_text("utf-8"))


# -- ROC ---------------------------------------------------------------------


def roc_to_csv(curve: RocCurve) -> str:
    lines = ["fpr,tpr"] + [f"{fmt_float(f)},{fmt_float(t)}" for f, t in curve.points]
    return "\n".join(lines) + "\n"
