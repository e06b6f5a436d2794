"""Recording and ground-truth containers shared by detection, synthesis and I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SensorRecording", "GroundTruth", "AnomalousRange"]


@dataclass(frozen=True)
class AnomalousRange:
    """Half-open sample range ``[start, stop)`` on one channel."""

    channel: str
    start: int
    stop: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.stop:
            raise ValueError(f"invalid range [{self.start}, {self.stop})")

    def overlaps(self, start: int, stop: int) -> bool:
        return self.start < stop and start < self.stop


@dataclass(frozen=True)
class GroundTruth:
    """Known anomalies of a recording, independent of any segmentation.

    ``anomalous_channels`` are faulty for the whole recording (e.g. an
    obstructed sensor); ``anomalous_ranges`` mark local events such as spikes.
    """

    channels: tuple[str, ...]
    n_samples: int
    anomalous_channels: tuple[str, ...] = ()
    anomalous_ranges: tuple[AnomalousRange, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "anomalous_channels", tuple(self.anomalous_channels))
        object.__setattr__(self, "anomalous_ranges", tuple(self.anomalous_ranges))
        known = set(self.channels)
        for name in self.anomalous_channels:
            if name not in known:
                raise ValueError(f"unknown anomalous channel {name!r}")
        for r in self.anomalous_ranges:
            if r.channel not in known:
                raise ValueError(f"unknown channel {r.channel!r} in range")
            if r.stop > self.n_samples:
                raise ValueError(f"range [{r.start}, {r.stop}) exceeds {self.n_samples} samples")

    def is_anomalous(self, channel: str, start: int, stop: int) -> bool:
        """Whether ``channel`` is anomalous anywhere in samples ``[start, stop)``."""
        if channel in self.anomalous_channels:
            return True
        return any(r.channel == channel and r.overlaps(start, stop) for r in self.anomalous_ranges)


@dataclass(frozen=True, eq=False)
class SensorRecording:
    """Multichannel time series, ``samples`` shaped (T, D)."""

    channels: tuple[str, ...]
    samples: np.ndarray
    sample_rate_hz: float = 2.0
    ground_truth: GroundTruth | None = field(default=None)

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError(f"samples must be a non-empty T x D matrix, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        channels = tuple(str(c) for c in self.channels)
        if len(channels) != samples.shape[1]:
            raise ValueError(f"{len(channels)} channel names for {samples.shape[1]} columns")
        if len(set(channels)) != len(channels):
            raise ValueError("channel names must be unique")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", channels)

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.samples.shape[1])

    def channel(self, name: str) -> np.ndarray:
        try:
            idx = self.channels.index(name)
        except ValueError:
            raise KeyError(f"no channel named {name!r}; have {list(self.channels)}") from None
        return self.samples[:, idx]
