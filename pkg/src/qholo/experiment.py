"""Detector layout of the heralded holography setup.

Channel numbers follow the SPCM numbering: 1 herald, 2/3 monitor pair in
front of the interferometer, 4/5 imaging pair behind it.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .coincidence import coincidence_report
from .source_sim import (
    DetectorConfig,
    SourceConfig,
    apply_detector,
    generate_classical,
    generate_pairs,
    split_beam,
    thin,
)

HERALD, MONITOR_A, MONITOR_B, IMAGING_A, IMAGING_B = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class DetectorSet:
    herald: DetectorConfig = field(default_factory=DetectorConfig)
    monitor: DetectorConfig = field(default_factory=DetectorConfig)
    imaging: DetectorConfig = field(default_factory=DetectorConfig)

    @classmethod
    def ideal(cls):
        d = DetectorConfig.ideal()
        return cls(d, d, d)


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        # fresh copy: spawn() mutates the parent
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key,
                                      pool_size=seed.pool_size)
    if isinstance(seed, np.random.Generator):
        return seed.bit_generator.seed_seq
    return np.random.SeedSequence(seed)


def _seeds(seed, n):
    return [np.random.default_rng(s) for s in _seed_sequence(seed).spawn(n)]


def monitor_run(source, detectors=DetectorSet()):
    """Source characterisation: all signal light goes to the monitor pair.

    Returns detected (herald, monitor_a, monitor_b) streams.
    """
    rng = _seeds(source.seed, 4)
    herald, signal = generate_pairs(replace(source, seed=rng[0]))
    a, b = split_beam(signal, 0.5, rng[1])
    return (apply_detector(herald, detectors.herald, seed=rng[2], channel=HERALD),
            apply_detector(a, detectors.monitor, seed=rng[3], channel=MONITOR_A),
            apply_detector(b, detectors.monitor, seed=rng[3], channel=MONITOR_B))


def chunked_monitor_reports(source, detectors, window, chunk=60.0):
    """Monitor run of ``source.duration`` simulated in ``chunk``-second blocks.

    Each block has its own derived seed; memory stays bounded for long runs.
    Returns one CoincidenceReport per block.
    """
    n = max(1, int(np.ceil(source.duration / chunk - 1e-9)))
    seeds = _seed_sequence(source.seed).spawn(n)
    reports = []
    for k in range(n):
        dur = min(chunk, source.duration - k * chunk)
        h, a, b = monitor_run(replace(source, duration=dur, seed=seeds[k]), detectors)
        reports.append(coincidence_report(h, a, b, window))
    return reports


def full_run(source, detectors=DetectorSet(), pixel_probability=1.0, fbs_transmission=0.5):
    """All five channels while the fibre sits on one hologram pixel.

    ``pixel_probability`` is the chance that a photon sent into the
    interferometer reaches the scanning fibre.  Returns a dict channel -> stream.
    """
    rng = _seeds(source.seed, 8)
    herald, signal = generate_pairs(replace(source, seed=rng[0]))
    to_holo, to_monitor = split_beam(signal, fbs_transmission, rng[1])
    m2, m3 = split_beam(to_monitor, 0.5, rng[2])
    at_fibre = thin(to_holo, pixel_probability, rng[3])
    i4, i5 = split_beam(at_fibre, 0.5, rng[4])
    return {
        HERALD: apply_detector(herald, detectors.herald, seed=rng[5], channel=HERALD),
        MONITOR_A: apply_detector(m2, detectors.monitor, seed=rng[6], channel=MONITOR_A),
        MONITOR_B: apply_detector(m3, detectors.monitor, seed=rng[6], channel=MONITOR_B),
        IMAGING_A: apply_detector(i4, detectors.imaging, seed=rng[7], channel=IMAGING_A),
        IMAGING_B: apply_detector(i5, detectors.imaging, seed=rng[7], channel=IMAGING_B),
    }


def classical_run(classical, detectors=DetectorSet(), herald_fraction=0.5):
    """Classical light analysed with the heralded three-detector scheme.

    A non-polarising split sends ``herald_fraction`` of the light to the
    herald detector; the rest is split 50/50 onto the monitor pair.
    """
    rng = _seeds(classical.seed, 5)
    light = generate_classical(replace(classical, seed=rng[0]))
    herald, rest = split_beam(light, herald_fraction, rng[1])
    a, b = split_beam(rest, 0.5, rng[2])
    return (apply_detector(herald, detectors.herald, seed=rng[3], channel=HERALD),
            apply_detector(a, detectors.monitor, seed=rng[4], channel=MONITOR_A),
            apply_detector(b, detectors.monitor, seed=rng[4], channel=MONITOR_B))


def window_capture(window, detectors=DetectorSet(), pair=("herald", "imaging")):
    """Fraction of true coincidences that land inside a window (Gaussian jitter)."""
    from math import erf, sqrt

    s = sqrt(sum(getattr(detectors, p).jitter_sigma ** 2 for p in pair)) * 1e12
    if s == 0:
        return 1.0
    return erf(window / 2 / (s * sqrt(2)))


__all__ = [
    "DetectorSet", "SourceConfig", "monitor_run", "chunked_monitor_reports", "full_run",
    "classical_run", "window_capture",
    "HERALD", "MONITOR_A", "MONITOR_B", "IMAGING_A", "IMAGING_B",
]
