"""Reconstruction-error anomaly detection for sensor arrays and single sensors.

Multi-sensor: the recording is min-max scaled to [-1, 1] per channel, cut into
segments, and each segment (N samples x D sensors, centered per segment) is
projected onto its dominant principal direction. A sensor's score in a
segment is the cumulative squared difference (CSD) between its samples and
their reconstruction.

Single-sensor: one channel is cut into windows of N samples; L neighboring
windows form an N x L matrix and each window is scored the same way against
the L x L (kernel) covariance's leading directions.

A score strictly above ``threshold = mu + alpha * sigma`` flags the
(segment, channel) cell. mu and sigma come from scores on clean training data.
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field

import numpy as np

from mfpca.pca import Method, PcaMethod, PrincipalBasis, fit
from mfpca.recording import SensorRecording

__all__ = [
    "NormalizedData",
    "SegmentMatrix",
    "Calibration",
    "CsdReport",
    "normalize",
    "normalize_channel",
    "segment",
    "reconstruct",
    "csd",
    "column_csd",
    "calibrate_threshold",
    "multi_sensor_scores",
    "single_sensor_scores",
    "detect_multi_sensor",
    "detect_single_sensor",
    "persistent_runs",
]

logger = logging.getLogger(__name__)

NORMALIZATION_NOTE = "min-max to [-1, 1] per channel over the whole recording; mean removed per segment"


@dataclass(frozen=True, eq=False)
class NormalizedData:
    values: np.ndarray
    constant_channels: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class SegmentMatrix:
    """Centered block of samples ``[start, stop)``; columns are sensors or windows."""

    values: np.ndarray
    segment_index: int
    start: int
    stop: int
    sample_rate_hz: float = 2.0

    @property
    def time_span(self) -> tuple[float, float]:
        return (self.start / self.sample_rate_hz, self.stop / self.sample_rate_hz)


@dataclass(frozen=True)
class Calibration:
    mu: float
    sigma: float
    alpha: float
    threshold: float


@dataclass(frozen=True)
class Row:
    """Index metadata for one row of a report's score table."""

    index: int
    start: int
    stop: int
    start_s: float
    end_s: float
    block: int | None = None


@dataclass(frozen=True, eq=False)
class CsdReport:
    """Scores, threshold and flags for one detection run.

    ``scores[r, c]`` is the CSD of column ``c`` in row ``r``: rows are
    segments and columns sensors (multi-sensor), or rows are windows and the
    single column is the analysed channel (single-sensor).
    """

    mode: str
    method: PcaMethod
    channels: tuple[str, ...]
    rows: tuple[Row, ...]
    scores: np.ndarray
    calibration: Calibration
    persistence: int
    sample_rate_hz: float
    constant_channels: tuple[str, ...] = ()
    anomalous_channels: tuple[str, ...] = field(init=False)
    flags: np.ndarray = field(init=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        if scores.shape != (len(self.rows), len(self.channels)):
            raise ValueError(f"scores shape {scores.shape} does not match rows x channels")
        if np.any(scores < 0):
            raise ValueError("CSD scores must be non-negative")
        flags = scores > self.calibration.threshold
        scores.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "flags", flags)
        anomalous = tuple(
            name
            for j, name in enumerate(self.channels)
            if persistent_runs(flags[:, j], self.persistence)
        )
        object.__setattr__(self, "anomalous_channels", anomalous)

    @property
    def threshold(self) -> float:
        return self.calibration.threshold

    @property
    def any_anomaly(self) -> bool:
        return bool(self.flags.any())

    def flagged_rows(self, channel: str | None = None) -> list[int]:
        j = 0 if channel is None else self.channels.index(channel)
        return [r.index for r, f in zip(self.rows, self.flags[:, j]) if f]


def persistent_runs(flags, persistence: int) -> bool:
    """True when ``flags`` holds at least ``persistence`` consecutive True values."""
    run = 0
    for f in flags:
        run = run + 1 if f else 0
        if run >= persistence:
            return True
    return False


def normalize_channel(x) -> tuple[np.ndarray, bool]:
    """Min-max scale one channel to [-1, 1]. Constant input maps to zeros and returns True."""
    x = np.asarray(x, dtype=float)
    lo = float(np.min(x))
    hi = float(np.max(x))
    if hi == lo:
        return np.zeros_like(x), True
    return 2.0 * (x - lo) / (hi - lo) - 1.0, False


def normalize(recording: SensorRecording) -> NormalizedData:
    """Per-channel min-max scaling to [-1, 1] over the full recording.

    Centering is left to :func:`segment`. Constant channels become zeros and
    are listed in ``constant_channels``.
    """
    out = np.empty_like(recording.samples)
    constant = []
    for j, name in enumerate(recording.channels):
        out[:, j], is_const = normalize_channel(recording.samples[:, j])
        if is_const:
            logger.warning("channel %s is constant; scored as zeros", name)
            constant.append(name)
    return NormalizedData(out, tuple(constant))


def segment(normalized, segment_len: int, sample_rate_hz: float = 2.0) -> list[SegmentMatrix]:
    """Cut into consecutive non-overlapping segments and center each column.

    A trailing partial segment is kept only if it has at least
    ``segment_len / 2`` samples.
    """
    values = normalized.values if isinstance(normalized, NormalizedData) else normalized
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if segment_len < 2:
        raise ValueError(f"segment_len must be >= 2, got {segment_len}")
    t_len = values.shape[0]
    if t_len < segment_len / 2:
        raise ValueError(f"{t_len} samples is shorter than half a segment ({segment_len})")
    out = []
    for k, start in enumerate(range(0, t_len, segment_len)):
        stop = min(start + segment_len, t_len)
        if stop - start < segment_len / 2:
            break
        block = values[start:stop]
        centered = block - block.mean(axis=0)
        centered.setflags(write=False)
        out.append(SegmentMatrix(centered, k, start, stop, sample_rate_hz))
    return out


def _as_matrix(X) -> np.ndarray:
    return np.asarray(X.values if isinstance(X, SegmentMatrix) else X, dtype=float)


def reconstruct(X, basis: PrincipalBasis | np.ndarray, l: int = 1) -> np.ndarray:
    """Project every row of ``X`` onto the span of the first ``l`` basis vectors.

    With ``V`` the ``(l, D)`` array of those vectors this is ``X V^T V``; for
    column vectors it is the ``V V^T x`` form applied to each measurement.
    """
    X = _as_matrix(X)
    vectors = basis.vectors if isinstance(basis, PrincipalBasis) else np.atleast_2d(basis)
    if not 1 <= l <= vectors.shape[0]:
        raise ValueError(f"l must be in [1, {vectors.shape[0]}], got {l}")
    if vectors.shape[1] != X.shape[1]:
        raise ValueError(f"basis dimension {vectors.shape[1]} != data dimension {X.shape[1]}")
    V = vectors[:l]
    return (X @ V.T) @ V


def csd(x, x_hat) -> float:
    """Cumulative squared difference ``sum_j (x_j - x_hat_j)^2``, summed left to right."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    d = x - x_hat
    if d.size == 0:
        return 0.0
    return float(np.cumsum(d * d)[-1])


def column_csd(X, X_hat) -> np.ndarray:
    """CSD of every column of ``X`` against ``X_hat``."""
    X = _as_matrix(X)
    X_hat = np.asarray(X_hat, dtype=float)
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {X_hat.shape}")
    return np.array([csd(X[:, j], X_hat[:, j]) for j in range(X.shape[1])])


def calibrate_threshold(training_scores, alpha: float = 3.0) -> Calibration:
    """``mu + alpha * sigma`` from clean scores; sigma uses the n-1 divisor."""
    scores = [float(s) for s in np.ravel(np.asarray(training_scores, dtype=float))]
    if len(scores) < 2:
        raise ValueError(f"need at least 2 training scores, got {len(scores)}")
    mu = statistics.mean(scores)
    sigma = statistics.stdev(scores, xbar=mu)
    return Calibration(mu, sigma, float(alpha), mu + alpha * sigma)


def _fixed_threshold(threshold: float, alpha: float) -> Calibration:
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return Calibration(float(threshold), 0.0, float(alpha), float(threshold))


def _score_block(X: np.ndarray, method: PcaMethod, l: int) -> np.ndarray:
    if not np.any(X):
        return np.zeros(X.shape[1])
    basis = fit(X, method)
    if basis.degenerate:
        logger.debug("degenerate dominant eigenvalue; using solver's top vector")
    return column_csd(X, reconstruct(X, basis, l))


def _as_method(method) -> PcaMethod:
    return method if isinstance(method, PcaMethod) else PcaMethod(Method(method))


def multi_sensor_scores(
    recording: SensorRecording, method, segment_len: int = 500
) -> tuple[list[SegmentMatrix], np.ndarray, tuple[str, ...]]:
    """Per-(segment, sensor) CSD scores, using each segment's own dominant direction."""
    method = _as_method(method)
    if recording.n_channels < 2:
        raise ValueError("multi-sensor detection needs at least 2 channels")
    norm = normalize(recording)
    segments = segment(norm, segment_len, recording.sample_rate_hz)
    scores = np.array([_score_block(s.values, method, 1) for s in segments])
    return segments, scores, norm.constant_channels


def _calibration(training_scores, threshold, alpha) -> Calibration:
    if threshold is not None:
        return _fixed_threshold(threshold, alpha)
    if training_scores is None:
        raise ValueError("provide clean training data or an explicit threshold")
    return calibrate_threshold(training_scores, alpha)


def detect_multi_sensor(
    recording: SensorRecording,
    method=Method.L1_KERNEL,
    segment_len: int = 500,
    alpha: float = 3.0,
    persistence: int = 2,
    *,
    training: SensorRecording | None = None,
    threshold: float | None = None,
) -> CsdReport:
    """Score every sensor in every segment and flag those above the threshold.

    The threshold is ``threshold`` if given, otherwise calibrated from the
    scores of ``training`` (a clean recording) under the same method. A sensor
    is reported anomalous once it is flagged in ``persistence`` consecutive
    segments.
    """
    method = _as_method(method)
    if persistence < 1:
        raise ValueError("persistence must be >= 1")
    segments, scores, constant = multi_sensor_scores(recording, method, segment_len)
    train_scores = None
    if threshold is None and training is not None:
        if training.channels != recording.channels:
            logger.info("training channels %s differ from %s", training.channels, recording.channels)
        train_scores = multi_sensor_scores(training, method, segment_len)[1]
    cal = _calibration(train_scores, threshold, alpha)
    rows = tuple(
        Row(s.segment_index, s.start, s.stop, *s.time_span) for s in segments
    )
    return CsdReport(
        mode="multi",
        method=method,
        channels=recording.channels,
        rows=rows,
        scores=scores,
        calibration=cal,
        persistence=persistence,
        sample_rate_hz=recording.sample_rate_hz,
        constant_channels=constant,
        params={"segment_len": segment_len, "normalization": NORMALIZATION_NOTE},
    )


def single_sensor_scores(
    channel, method, window_len: int = 224, window_count: int = 5, l: int = 1
) -> tuple[list[tuple[int, int, int]], np.ndarray]:
    """CSD of every window, scored within non-overlapping blocks of ``window_count`` windows.

    Returns ``(windows, scores)`` with ``windows[k] = (block, start, stop)``.
    """
    method = _as_method(method)
    x = np.asarray(channel, dtype=float).ravel()
    if window_len < 2 or window_count < 1:
        raise ValueError("window_len must be >= 2 and window_count >= 1")
    if not 1 <= l <= window_count:
        raise ValueError(f"l must be in [1, {window_count}], got {l}")
    if method.tag is Method.RECURSIVE_L1 and l > 1:
        raise ValueError("recursive l1-PCA yields a single direction; use l = 1")
    block_len = window_len * window_count
    if x.size < block_len:
        raise ValueError(f"channel has {x.size} samples; need at least {block_len}")
    if not np.all(np.isfinite(x)):
        raise ValueError("channel must be finite")
    scaled, _ = normalize_channel(x)
    windows: list[tuple[int, int, int]] = []
    scores: list[float] = []
    for b in range(x.size // block_len):
        base = b * block_len
        X = scaled[base : base + block_len].reshape(window_count, window_len).T
        X = X - X.mean(axis=0)
        scores.extend(_score_block(X, method, l))
        windows.extend(
            (b, base + k * window_len, base + (k + 1) * window_len) for k in range(window_count)
        )
    return windows, np.array(scores)


def detect_single_sensor(
    channel,
    method=Method.L1_KERNEL,
    window_len: int = 224,
    window_count: int = 5,
    l: int = 1,
    alpha: float = 3.0,
    persistence: int = 2,
    *,
    training=None,
    threshold: float | None = None,
    name: str = "sensor",
    sample_rate_hz: float = 2.0,
) -> CsdReport:
    """Flag windows of one channel that its neighbors do not reconstruct well.

    ``training`` is a clean channel (array) scored the same way to set the
    threshold, unless ``threshold`` is given.
    """
    method = _as_method(method)
    if persistence < 1:
        raise ValueError("persistence must be >= 1")
    windows, scores = single_sensor_scores(channel, method, window_len, window_count, l)
    train_scores = None
    if threshold is None and training is not None:
        train_scores = single_sensor_scores(training, method, window_len, window_count, l)[1]
    cal = _calibration(train_scores, threshold, alpha)
    rows = tuple(
        Row(k, start, stop, start / sample_rate_hz, stop / sample_rate_hz, block)
        for k, (block, start, stop) in enumerate(windows)
    )
    return CsdReport(
        mode="single",
        method=method,
        channels=(name,),
        rows=rows,
        scores=scores.reshape(-1, 1),
        calibration=cal,
        persistence=persistence,
        sample_rate_hz=sample_rate_hz,
        params={"window_len": window_len, "window_count": window_count, "components": l},
    )
