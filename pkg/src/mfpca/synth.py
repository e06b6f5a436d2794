"""Seeded generator of correlated gas-sensor waveforms with injectable faults.

All channels respond to one shared exposure profile: a piecewise-constant gas
concentration made of rise/hold/decay episodes (gas released into a test
chamber and vented again). Each sensor follows it through a first-order response

    y[t] = y[t-1] + (1 - exp(-1 / tau)) * (c[t] - y[t-1])

plus independent Gaussian noise. ``tau_jitter`` spreads the per-sensor time
constants uniformly over ``tau * (1 +/- tau_jitter)`` and ``episode_jitter``
shifts explicit episode starts and durations by up to that many samples,
emulating unit-to-unit and run-to-run variation. An obstructed sensor uses ``tau * lag_factor``,
so it rises and recovers more slowly. A spiking sensor gets isolated positive
impulses at Bernoulli(``spike_rate``) sample positions inside ``spike_span``.

Randomness comes only from :mod:`mfpca.prng` streams derived from ``seed``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from mfpca.prng import Stream
from mfpca.recording import AnomalousRange, GroundTruth, SensorRecording

__all__ = ["Episode", "SynthConfig", "exposure_profile", "first_order_response", "generate", "spike_positions"]

# Substream ids; fixed so recordings stay reproducible across versions.
_EPISODES = 1
_SPIKE_POS = 2
_SPIKE_AMP = 3
_JITTER = 4
_TAU = 5
_NOISE = 100


@dataclass(frozen=True)
class Episode:
    """Exposure at ``level`` for samples ``[start, start + duration)``."""

    start: int
    duration: int
    level: float = 1.0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    channels: int = 3
    duration_samples: int = 2000
    sample_rate_hz: float = 2.0
    episodes: tuple[Episode, ...] = ()
    random_episodes: int = 6
    tau: float = 20.0
    tau_jitter: float = 0.0
    episode_jitter: int = 0
    noise_std: float = 0.01
    obstructed_channel: int | None = None
    lag_factor: float = 3.0
    spike_channel: int | None = None
    spike_rate: float = 0.0
    spike_amplitude: float = 1.0
    spike_span: tuple[int, int] | None = None
    channel_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "episodes", tuple(e if isinstance(e, Episode) else Episode(**e) for e in self.episodes)
        )
        if self.spike_span is not None:
            object.__setattr__(self, "spike_span", tuple(self.spike_span))
        if self.channel_names is not None:
            object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if self.channels < 1 or self.duration_samples < 1:
            raise ValueError("channels and duration_samples must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0 <= self.tau_jitter < 1:
            raise ValueError("tau_jitter must lie in [0, 1)")
        if self.episode_jitter < 0:
            raise ValueError("episode_jitter must be non-negative")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.random_episodes < 0:
            raise ValueError("random_episodes must be non-negative")
        for name in ("obstructed_channel", "spike_channel"):
            idx = getattr(self, name)
            if idx is not None and not 0 <= idx < self.channels:
                raise ValueError(f"{name}={idx} out of range for {self.channels} channels")
        if self.obstructed_channel is not None and not self.lag_factor >= 1:
            # lag_factor == 1 is allowed: an obstructed channel identical to the rest.
            raise ValueError("lag_factor must be >= 1")
        if not 0 <= self.spike_rate <= 1:
            raise ValueError("spike_rate must lie in [0, 1]")
        if not self.spike_amplitude > 0:
            raise ValueError("spike_amplitude must be positive")
        if self.spike_span is not None:
            lo, hi = self.spike_span
            if not 0 <= lo < hi <= self.duration_samples:
                raise ValueError(f"spike_span {self.spike_span} outside the recording")
        if self.channel_names is not None and len(self.channel_names) != self.channels:
            raise ValueError("channel_names length must equal channels")

    @property
    def names(self) -> tuple[str, ...]:
        if self.channel_names is not None:
            return self.channel_names
        return tuple(f"sensor{i + 1}" for i in range(self.channels))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["episodes"] = [asdict(e) for e in self.episodes]
        d["spike_span"] = list(self.spike_span) if self.spike_span is not None else None
        d["channel_names"] = list(self.channel_names) if self.channel_names is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SynthConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _random_episodes(cfg: SynthConfig) -> list[Episode]:
    k = cfg.random_episodes
    if k == 0:
        return []
    u = Stream(cfg.seed, _EPISODES).uniform(3 * k)
    slot = cfg.duration_samples / k
    out = []
    for i in range(k):
        start = int(i * slot + u[3 * i] * 0.4 * slot)
        duration = max(1, int((0.2 + 0.3 * u[3 * i + 1]) * slot))
        level = 0.5 + 0.5 * float(u[3 * i + 2])
        out.append(Episode(start, duration, level))
    return out


def exposure_profile(cfg: SynthConfig) -> np.ndarray:
    """Piecewise-constant concentration driving every sensor."""
    c = np.zeros(cfg.duration_samples)
    episodes = list(cfg.episodes) or _random_episodes(cfg)
    if cfg.episode_jitter and episodes:
        j = cfg.episode_jitter
        u = Stream(cfg.seed, _JITTER).uniform(2 * len(episodes))
        episodes = [
            Episode(
                e.start + int(np.floor(u[2 * i] * (2 * j + 1))) - j,
                max(1, e.duration + int(np.floor(u[2 * i + 1] * (2 * j + 1))) - j),
                e.level,
            )
            for i, e in enumerate(episodes)
        ]
    for e in episodes:
        lo = max(0, e.start)
        hi = min(cfg.duration_samples, e.start + e.duration)
        if hi > lo:
            c[lo:hi] = e.level
    return c


def first_order_response(c: np.ndarray, tau: float) -> np.ndarray:
    """Discrete first-order lag of ``c`` with time constant ``tau`` samples, starting at 0."""
    a = 1.0 - math.exp(-1.0 / tau)
    y = np.empty_like(c, dtype=float)
    prev = 0.0
    for t, target in enumerate(c):
        prev = prev + a * (target - prev)
        y[t] = prev
    return y


def generate(config: SynthConfig) -> SensorRecording:
    """Build a recording (with ground truth) from ``config``. Deterministic in the config."""
    cfg = config
    t_len = cfg.duration_samples
    names = cfg.names
    c = exposure_profile(cfg)
    taus = np.full(cfg.channels, cfg.tau)
    if cfg.tau_jitter > 0:
        taus = cfg.tau * (1.0 + cfg.tau_jitter * (2.0 * Stream(cfg.seed, _TAU).uniform(cfg.channels) - 1.0))
    responses: dict[float, np.ndarray] = {}
    data = np.empty((t_len, cfg.channels))
    for ch in range(cfg.channels):
        tau = float(taus[ch])
        if ch == cfg.obstructed_channel:
            tau *= cfg.lag_factor
        if tau not in responses:
            responses[tau] = first_order_response(c, tau)
        base = responses[tau]
        if cfg.noise_std > 0:
            data[:, ch] = base + cfg.noise_std * Stream(cfg.seed, _NOISE + ch).normal(t_len)
        else:
            data[:, ch] = base

    ranges: list[AnomalousRange] = []
    if cfg.spike_channel is not None and cfg.spike_rate > 0:
        lo, hi = cfg.spike_span if cfg.spike_span is not None else (0, t_len)
        hits = np.flatnonzero(Stream(cfg.seed, _SPIKE_POS).uniform(hi - lo) < cfg.spike_rate) + lo
        amps = cfg.spike_amplitude * (0.5 + 0.5 * Stream(cfg.seed, _SPIKE_AMP).uniform(len(hits)))
        data[hits, cfg.spike_channel] += amps
        name = names[cfg.spike_channel]
        for p in hits:
            p = int(p)
            if ranges and ranges[-1].stop == p:
                ranges[-1] = AnomalousRange(name, ranges[-1].start, p + 1)
            else:
                ranges.append(AnomalousRange(name, p, p + 1))

    anomalous = (names[cfg.obstructed_channel],) if cfg.obstructed_channel is not None else ()
    truth = GroundTruth(names, t_len, anomalous, tuple(ranges))
    return SensorRecording(names, data, cfg.sample_rate_hz, truth)


def spike_positions(recording: SensorRecording) -> list[int]:
    """Sample indices of the injected spikes listed in the recording's ground truth."""
    if recording.ground_truth is None:
        return []
    return [p for r in recording.ground_truth.anomalous_ranges for p in range(r.start, r.stop)]
