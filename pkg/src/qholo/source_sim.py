"""Monte Carlo time tags for a heralded pair source and for classical light.

All timestamps are integer picoseconds.  Every generator takes an explicit
seed, so reruns are bit-identical.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter

from ._kernels import dead_time_mask
from .errors import ConfigurationError, DataError

PS_PER_S = 10**12


def to_ps(seconds):
    return int(round(seconds * PS_PER_S))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    """Strictly increasing detection times (ps) recorded on one channel."""

    channel: int
    tags: np.ndarray
    duration_ps: int = 0

    def __post_init__(self):
        tags = np.ascontiguousarray(self.tags, dtype=np.int64)
        if tags.ndim != 1:
            raise DataError("time tags must be one-dimensional")
        if tags.size > 1 and not np.all(tags[1:] > tags[:-1]):
            raise DataError(f"channel {self.channel}: time tags are not strictly increasing")
        if tags.size and tags[0] < 0:
            raise DataError(f"channel {self.channel}: negative time tag")
        duration = int(self.duration_ps)
        if tags.size and duration and tags[-1] > duration:
            raise DataError(f"channel {self.channel}: tag beyond stream duration")
        tags.setflags(write=False)
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "duration_ps", duration)

    def __len__(self):
        return self.tags.size

    @property
    def duration(self):
        return self.duration_ps / PS_PER_S

    def with_channel(self, channel):
        return TimeTagStream(channel, self.tags, self.duration_ps)

    def window(self, start_ps, stop_ps):
        """Tags in ``[start_ps, stop_ps)``, timestamps unchanged."""
        lo, hi = np.searchsorted(self.tags, [start_ps, stop_ps])
        return TimeTagStream(self.channel, self.tags[lo:hi], self.duration_ps)

    def __eq__(self, other):
        if not isinstance(other, TimeTagStream):
            return NotImplemented
        return (self.channel == other.channel
                and self.duration_ps == other.duration_ps
                and np.array_equal(self.tags, other.tags))


@dataclass(frozen=True)
class SourceConfig:
    """Heralded pair source.

    ``multi_pair_prob`` is the chance that an emission slot carries a second
    pair; the extra photon shows up in the signal arm only, 1 ps after the
    first one.
    """

    pair_rate: float
    multi_pair_prob: float = 0.0
    duration: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.pair_rate > 0:
            raise ConfigurationError("source.pair_rate must be > 0")
        if self.pair_rate >= PS_PER_S:
            raise ConfigurationError("source.pair_rate must be below 1e12 /s")
        if not 0 <= self.multi_pair_prob < 1:
            raise ConfigurationError("source.multi_pair_prob must be in [0, 1)")
        if not self.duration > 0:
            raise ConfigurationError("source.duration must be > 0")


@dataclass(frozen=True)
class DetectorConfig:
    """SPCM model.  Defaults: 460 /s dark rate, typical Si-APD dead time and jitter."""

    efficiency: float = 0.5
    dark_rate: float = 460.0
    dead_time: float = 22e-9
    jitter_sigma: float = 350e-12

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise ConfigurationError("detector.efficiency must be in [0, 1]")
        if self.dark_rate < 0:
            raise ConfigurationError("detector.dark_rate must be >= 0")
        if self.dead_time < 0:
            raise ConfigurationError("detector.dead_time must be >= 0")
        if self.jitter_sigma < 0:
            raise ConfigurationError("detector.jitter_sigma must be >= 0")

    @classmethod
    def ideal(cls, efficiency=1.0):
        return cls(efficiency=efficiency, dark_rate=0.0, dead_time=0.0, jitter_sigma=0.0)


class Bunching(str, Enum):
    POISSONIAN = "poissonian"
    THERMAL = "thermal"


@dataclass(frozen=True)
class ClassicalSourceConfig:
    mean_rate: float
    bunching: Bunching = Bunching.POISSONIAN
    coherence_time: float = 0.0
    duration: float = 1.0
    seed: int = 0
    channel: int = 0
    # intensity samples per coherence time for the thermal model
    steps_per_coherence: int = field(default=8, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bunching", Bunching(self.bunching))
        if not self.mean_rate > 0:
            raise ConfigurationError("classical.mean_rate must be > 0")
        if not self.duration > 0:
            raise ConfigurationError("classical.duration must be > 0")
        if self.bunching is Bunching.THERMAL and not self.coherence_time > 0:
            raise ConfigurationError("classical.coherence_time must be > 0 for thermal light")


def _strictly_increasing(t):
    # bump equal neighbours forward by 1 ps so the sequence is strictly increasing
    if t.size < 2:
        return t
    idx = np.arange(t.size, dtype=np.int64)
    return np.maximum.accumulate(t - idx) + idx


def poisson_times(rate, duration_ps, rng):
    """Homogeneous Poisson process on the 1 ps grid (geometric gaps)."""
    if rate <= 0:
        return np.empty(0, dtype=np.int64)
    p = rate / PS_PER_S
    chunks = []
    last = -1
    expected = rate * duration_ps / PS_PER_S
    while True:
        n = int(expected + 6 * np.sqrt(expected) + 16)
        t = last + np.cumsum(rng.geometric(p, size=n), dtype=np.int64)
        if t[-1] >= duration_ps:
            chunks.append(t[: np.searchsorted(t, duration_ps)])
            break
        chunks.append(t)
        last = t[-1]
        expected = rate * (duration_ps - last) / PS_PER_S
    return np.concatenate(chunks)


def generate_pairs(cfg, herald_channel=1, signal_channel=0):
    """Raw (undetected) herald and signal photon streams from the pair source."""
    rng = _rng(cfg.seed)
    duration_ps = to_ps(cfg.duration)
    emissions = poisson_times(cfg.pair_rate, duration_ps, rng)
    extra = rng.random(emissions.size) < cfg.multi_pair_prob
    signal = emissions
    if extra.any():
        signal = np.sort(np.concatenate([emissions, emissions[extra] + 1]))
        signal = _strictly_increasing(signal)
        signal = signal[signal <= duration_ps]
    return (TimeTagStream(herald_channel, emissions, duration_ps),
            TimeTagStream(signal_channel, signal, duration_ps))


def apply_detector(stream, det, duration=None, seed=0, channel=None):
    """Efficiency thinning, dark counts, jitter, then one dead-time pass.

    Exact duplicates are always merged: a TDC cannot report two
    identical timestamps on one channel.
    """
    rng = _rng(seed)
    duration_ps = to_ps(duration) if duration is not None else stream.duration_ps
    tags = stream.tags
    if det.efficiency < 1:
        tags = tags[rng.random(tags.size) < det.efficiency]
    darks = poisson_times(det.dark_rate, duration_ps, rng)
    if darks.size:
        tags = np.concatenate([tags, darks])
    if det.jitter_sigma > 0 and tags.size:
        tags = tags + np.rint(rng.normal(0.0, det.jitter_sigma * PS_PER_S, tags.size)).astype(np.int64)
    tags = np.sort(tags, kind="stable")
    tags = tags[np.searchsorted(tags, 0):np.searchsorted(tags, duration_ps, side="right")]
    tags = tags[dead_time_mask(tags, max(to_ps(det.dead_time), 1))]
    return TimeTagStream(stream.channel if channel is None else channel, tags, duration_ps)


def split_beam(stream, transmission, seed=0, channels=None):
    """Route every tag to exactly one of two outputs."""
    if not 0 <= transmission <= 1:
        raise ConfigurationError("transmission must be in [0, 1]")
    rng = _rng(seed)
    go = rng.random(len(stream)) < transmission
    ct, cr = channels if channels is not None else (stream.channel, stream.channel)
    return (TimeTagStream(ct, stream.tags[go], stream.duration_ps),
            TimeTagStream(cr, stream.tags[~go], stream.duration_ps))


def thin(stream, probability, seed=0):
    """Keep each tag independently with ``probability``."""
    rng = _rng(seed)
    keep = rng.random(len(stream)) < probability
    return TimeTagStream(stream.channel, stream.tags[keep], stream.duration_ps)


def _thermal_times(cfg, duration_ps, rng, block=1 << 20):
    # Complex Gaussian field with |g1(tau)|^2 = exp(-|tau|/coherence_time),
    # sampled on a grid; photons are Poisson in each step with rate ~ |E|^2.
    dt = cfg.coherence_time / cfg.steps_per_coherence
    dt_ps = max(to_ps(dt), 1)
    dt = dt_ps / PS_PER_S
    rho = np.exp(-dt / (2 * cfg.coherence_time))
    gain = np.sqrt(1 - rho**2)
    n_steps = -(-duration_ps // dt_ps)
    state = (rng.normal() + 1j * rng.normal()) / np.sqrt(2)
    out = []
    for start in range(0, n_steps, block):
        n = min(block, n_steps - start)
        xi = (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
        field_, _ = lfilter([gain], [1, -rho], xi, zi=[rho * state])
        state = field_[-1]
        counts = rng.poisson(cfg.mean_rate * dt * np.abs(field_) ** 2)
        hit = np.nonzero(counts)[0]
        if hit.size == 0:
            continue
        steps = np.repeat(hit, counts[hit]).astype(np.int64) + start
        t = steps * dt_ps + rng.integers(0, dt_ps, size=steps.size)
        out.append(np.sort(t))
    t = np.concatenate(out) if out else np.empty(0, dtype=np.int64)
    t = _strictly_increasing(t)
    return t[t < duration_ps]


def generate_classical(cfg):
    """Poissonian (coherent) or thermal (bunched) classical photon stream."""
    rng = _rng(cfg.seed)
    duration_ps = to_ps(cfg.duration)
    if cfg.bunching is Bunching.POISSONIAN:
        tags = poisson_times(cfg.mean_rate, duration_ps, rng)
    else:
        tags = _thermal_times(cfg, duration_ps, rng)
    return TimeTagStream(cfg.channel, tags, duration_ps)
