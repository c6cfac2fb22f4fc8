"""Raster-scanned hologram acquisition.

Two fidelity modes share one geometry.  ``fast_poisson`` draws Poisson
counts from the rate maps; ``full_event`` simulates the time tags of all
five detectors at every pixel and counts coincidences on them.  Each pixel
gets its own seed derived from (seed, column, row), so frames do not depend
on the order in which pixels are visited.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .coincidence import CoincidenceReport, coincidence_report
from .errors import BoundsError, ConfigurationError, DataError
from .experiment import (
    HERALD,
    IMAGING_A,
    IMAGING_B,
    MONITOR_A,
    MONITOR_B,
    DetectorSet,
    full_run,
    window_capture,
)
from .interferometer import PIXEL_SIZE, RateCalibration, intensity_map, rate_maps
from .source_sim import SourceConfig


class Mode(str, Enum):
    FAST_POISSON = "fast_poisson"
    FULL_EVENT = "full_event"


class Channel(str, Enum):
    HERALDED = "heralded"
    NONHERALDED = "nonheralded"
    TRIPLES = "triples"


@dataclass(frozen=True)
class ScanConfig:
    """Raster scan settings.  ``coincidence_window`` is in ns.

    ``throughput`` (full_event only) is the probability that a photon sent
    into the interferometer reaches the fibre at the brightest pixel.
    """

    width: int
    height: int
    pixel_size: float = PIXEL_SIZE
    integration_time: float = 5.0
    coincidence_window: float = 2.0
    mode: Mode = Mode.FAST_POISSON
    seed: int = 0
    throughput: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.width < 2 or self.height < 2:
            raise ConfigurationError("scan.width and scan.height must be >= 2")
        if not self.integration_time > 0:
            raise ConfigurationError("scan.integration_time must be > 0")
        if not self.coincidence_window > 0:
            raise ConfigurationError("scan.coincidence_window must be > 0")
        if not self.pixel_size > 0:
            raise ConfigurationError("scan.pixel_size must be > 0")
        if not 0 <= self.throughput <= 1:
            raise ConfigurationError("scan.throughput must be in [0, 1]")

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def window_ps(self):
        return int(round(self.coincidence_window * 1000))


@dataclass(frozen=True, eq=False)
class HologramFrame:
    counts: np.ndarray
    pixel_size: float = PIXEL_SIZE
    integration_time: float = 1.0
    channel: Channel = Channel.HERALDED

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise DataError("hologram frame must be 2-D")
        if counts.size and (counts.min() < 0 or not np.all(counts == np.round(counts))):
            raise DataError("frame counts must be non-negative integers")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "channel", Channel(self.channel))

    @property
    def shape(self):
        return self.counts.shape

    def __eq__(self, other):
        if not isinstance(other, HologramFrame):
            return NotImplemented
        return (np.array_equal(self.counts, other.counts) and self.channel == other.channel
                and self.pixel_size == other.pixel_size
                and self.integration_time == other.integration_time)


@dataclass
class Acquisition:
    heralded: HologramFrame
    nonheralded: HologramFrame
    triples: HologramFrame
    # summed over the scan, full_event only
    monitor: Optional[CoincidenceReport] = None
    imaging: Optional[CoincidenceReport] = None
    calibration: Optional[RateCalibration] = field(default=None, repr=False)

    def frames(self):
        return (self.heralded, self.nonheralded, self.triples)


class LineScan(NamedTuple):
    heralded: np.ndarray
    nonheralded: np.ndarray
    triples: np.ndarray


def setup_calibration(source, detectors=DetectorSet(), scan=None):
    """Rate calibration implied by a source and detector configuration.

    Mirrors what ``full_event`` simulates: half the signal light enters the
    interferometer, the fibre splitter halves it again, and a heralded count
    also needs the herald click and both jitters to fit in the window.
    """
    window = scan.window_ps if scan is not None else 2000
    throughput = scan.throughput if scan is not None else 1.0
    photons = source.pair_rate * (1 + source.multi_pair_prob) * throughput / 4
    nonheralded = photons * detectors.imaging.efficiency
    heralded = nonheralded * detectors.herald.efficiency * window_capture(window, detectors)
    singles = source.pair_rate * detectors.herald.efficiency + detectors.herald.dark_rate
    return RateCalibration(heralded, nonheralded, detectors.imaging.dark_rate, singles)


def expected_counts(intensity, calib, scan):
    """Mean counts per pixel: (heralded, nonheralded, triples)."""
    h_rate, nh_rate, _ = rate_maps(intensity, calib)
    w = scan.coincidence_window * 1e-9
    accidental = calib.herald_singles_rate * nh_rate * w
    triples = calib.herald_singles_rate * nh_rate**2 * w**2
    t = scan.integration_time
    return (h_rate + accidental) * t, nh_rate * t, triples * t


def _pixel_seed(seed, col, row):
    return np.random.SeedSequence([int(seed), int(col), int(row)])


def _check(obj, scan):
    if obj.shape != scan.shape:
        raise ConfigurationError(
            f"object grid {obj.shape} does not match scan {scan.height}x{scan.width}")
    if not np.isclose(obj.pitch, scan.pixel_size):
        raise ConfigurationError("object pitch differs from scan.pixel_size")


def _fast_pixel(means, seed, col, row):
    rng = np.random.default_rng(_pixel_seed(seed, col, row))
    return rng.poisson(means[0]), rng.poisson(means[1]), rng.poisson(means[2])


def _event_pixel(source, detectors, scan, probability, col, row, duration):
    cfg = SourceConfig(source.pair_rate, source.multi_pair_prob, duration,
                       _pixel_seed(scan.seed, col, row))
    tags = full_run(cfg, detectors, pixel_probability=probability)
    h = tags[HERALD]
    w = scan.window_ps
    imaging = coincidence_report(h, tags[IMAGING_A], tags[IMAGING_B], w)
    monitor = coincidence_report(h, tags[MONITOR_A], tags[MONITOR_B], w)
    return imaging.N12, len(tags[IMAGING_A]), imaging.N123, monitor, imaging


def acquire(obj, beam, tilt, source, detectors=DetectorSet(), scan=None, calibration=None):
    """Scan the full frame row by row, every row left to right.

    Returns heralded (N14), non-heralded (SPCM4 singles) and triple (N145)
    frames.  In fast mode ``calibration`` defaults to the one implied by the
    source and detectors; pass ``RateCalibration()`` for the tabulated rates.
    """
    if scan is None:
        raise ConfigurationError("acquire needs a ScanConfig")
    _check(obj, scan)
    intensity = intensity_map(obj, beam, tilt)
    counts = np.zeros((3,) + scan.shape, dtype=np.int64)
    monitor = imaging = None
    if scan.mode is Mode.FAST_POISSON:
        calib = calibration if calibration is not None else setup_calibration(source, detectors, scan)
        means = expected_counts(intensity, calib, scan)
        for row in range(scan.height):
            for col in range(scan.width):
                m = (means[0][row, col], means[1][row, col], means[2][row, col])
                counts[:, row, col] = _fast_pixel(m, scan.seed, col, row)
    else:
        calib = setup_calibration(source, detectors, scan)
        prob = scan.throughput * intensity / intensity.max()
        for row in range(scan.height):
            for col in range(scan.width):
                *c, mon, img = _event_pixel(source, detectors, scan, prob[row, col],
                                            col, row, scan.integration_time)
                counts[:, row, col] = c
                monitor = mon if monitor is None else monitor + mon
                imaging = img if imaging is None else imaging + img
    frames = [HologramFrame(counts[k], scan.pixel_size, scan.integration_time, ch)
              for k, ch in enumerate(Channel)]
    return Acquisition(*frames, monitor=monitor, imaging=imaging, calibration=calib)


def acquire_line(obj, beam, tilt, source, detectors=DetectorSet(), scan=None, row=0,
                 oversample_factor=1.0, calibration=None):
    """Re-scan one row with ``oversample_factor`` times the dwell time.

    With ``oversample_factor == 1`` the result equals that row of ``acquire``.
    """
    if scan is None:
        raise ConfigurationError("acquire_line needs a ScanConfig")
    _check(obj, scan)
    if not 0 <= row < scan.height:
        raise BoundsError(f"row {row} outside frame of height {scan.height}")
    if not oversample_factor > 0:
        raise ConfigurationError("oversample_factor must be > 0")
    intensity = intensity_map(obj, beam, tilt)
    dwell = scan.integration_time * oversample_factor
    out = np.zeros((3, scan.width), dtype=np.int64)
    if scan.mode is Mode.FAST_POISSON:
        calib = calibration if calibration is not None else setup_calibration(source, detectors, scan)
        line_scan = ScanConfig(scan.width, scan.height, scan.pixel_size, dwell,
                               scan.coincidence_window, scan.mode, scan.seed, scan.throughput)
        means = expected_counts(intensity, calib, line_scan)
        for col in range(scan.width):
            m = (means[0][row, col], means[1][row, col], means[2][row, col])
            out[:, col] = _fast_pixel(m, scan.seed, col, row)
    else:
        prob = scan.throughput * intensity / intensity.max()
        for col in range(scan.width):
            out[:, col] = _event_pixel(source, detectors, scan, prob[row, col], col, row, dwell)[:3]
    return LineScan(*out)


__all__ = ["Mode", "Channel", "ScanConfig", "HologramFrame", "Acquisition", "LineScan",
           "setup_calibration", "expected_counts", "acquire", "acquire_line"]
