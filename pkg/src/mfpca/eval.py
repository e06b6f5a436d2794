"""ROC curves and AUC for comparing detectors on labeled CSD scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mfpca.detect import CsdReport
from mfpca.recording import GroundTruth

__all__ = ["RocCurve", "roc_auc", "report_labels", "auc_summary"]


@dataclass(frozen=True, eq=False)
class RocCurve:
    """``points[k] = (fpr, tpr)`` from (0, 0) to (1, 1); ``thresholds[k]`` produced point ``k``.

    A point at threshold ``t`` flags every score ``> t``; the first point uses
    ``+inf`` and the last ``-inf``.
    """

    points: np.ndarray
    thresholds: np.ndarray
    auc: float
    positives: int
    negatives: int


def roc_auc(scores, labels) -> RocCurve:
    """ROC over all distinct score values, AUC by the trapezoidal rule.

    Tied scores move the curve diagonally, which credits ties with one half
    and makes the AUC equal to the Mann-Whitney statistic
    ``P(s+ > s-) + P(s+ == s-) / 2``.
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels, dtype=bool).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative label")

    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # Last index of each run of equal scores.
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    tp = np.concatenate(([0], tp))
    fp = np.concatenate(([0], fp))
    # Twice the area in count units: exact integer arithmetic.
    area2 = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = area2 / (2 * n_pos * n_neg)
    points = np.column_stack((fp / n_neg, tp / n_pos))
    distinct = s[ends]
    thresholds = np.concatenate(([np.inf], distinct[1:], [-np.inf]))
    return RocCurve(points, thresholds, auc, n_pos, n_neg)


def report_labels(report: CsdReport, truth: GroundTruth) -> np.ndarray:
    """Ground-truth label for every cell of ``report.scores``.

    A (row, channel) cell is positive when the channel is anomalous for the
    whole recording or a labeled range on it overlaps the row's samples.
    """
    missing = [c for c in report.channels if c not in truth.channels]
    if missing:
        raise ValueError(f"report channels {missing} not in ground truth")
    for row in report.rows:
        if row.stop > truth.n_samples:
            raise ValueError(
                f"row {row.index} covers samples up to {row.stop}, truth has {truth.n_samples}"
            )
    return np.array(
        [[truth.is_anomalous(c, row.start, row.stop) for c in report.channels] for row in report.rows],
        dtype=bool,
    ).reshape(report.scores.shape)


def auc_summary(named: list[tuple[str, float]]) -> list[tuple[str, float, str]]:
    """Rows of (name, auc, increment vs the first entry); the baseline shows ``-``."""
    out = []
    for k, (name, auc) in enumerate(named):
        inc = "-" if k == 0 else f"{auc - named[0][1]:+.4f}"
        out.append((name, auc, inc))
    return out
