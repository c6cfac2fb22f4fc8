"""Singles, double and triple coincidences, delay calibration and g2(0).

Matching policy: the herald (first) stream is swept in time order and each
tag takes the earliest unused partner inside the window.  With equal-width
windows this is a maximum one-to-one matching, so counts do not depend on
which stream is swept.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import difference_histogram, match_flags
from .errors import ConfigurationError, DataError, UndefinedStatisticError
from .source_sim import PS_PER_S

CSV_HEADER = "N1,N12,N13,N123,window_ns,g2,g2_sigma"


def _tags(stream):
    tags = getattr(stream, "tags", stream)
    tags = np.ascontiguousarray(tags, dtype=np.int64)
    if tags.size > 1 and np.any(tags[1:] < tags[:-1]):
        raise DataError("time tags must be sorted")
    return tags


def _window(window):
    window = int(window)
    if window <= 0:
        raise ConfigurationError("coincidence window must be > 0 ps")
    return window


def coincidence_flags(a, b, window, offset=0):
    """Boolean mask over ``a``: tag has a partner in ``b`` within the window.

    A pair is ``|t_b + offset - t_a| <= window / 2`` (all in ps).
    """
    return match_flags(_tags(a), _tags(b), _window(window), int(offset))


def count_coincidences(a, b, window, offset=0):
    return int(np.count_nonzero(coincidence_flags(a, b, window, offset)))


def triple_flags(h, a, b, window, offsets=(0, 0)):
    h = _tags(h)
    return (match_flags(h, _tags(a), _window(window), int(offsets[0]))
            & match_flags(h, _tags(b), _window(window), int(offsets[1])))


def count_triples(h, a, b, window, offsets=(0, 0)):
    """Herald tags matched in both the (h, a) and the (h, b) matching."""
    return int(np.count_nonzero(triple_flags(h, a, b, window, offsets)))


def g2_zero(N1, N12, N13, N123):
    """Heralded g2(0) = N1*N123 / (N12*N13) with first-order Poisson error.

    With no triples the estimate is 0 and the error is evaluated as if one
    triple had been seen.
    """
    if N12 <= 0 or N13 <= 0:
        raise UndefinedStatisticError("g2(0) needs N12 > 0 and N13 > 0")
    n123 = N123 if N123 > 0 else 1
    g2 = N1 * N123 / (N12 * N13)
    g2_ref = N1 * n123 / (N12 * N13)
    sigma = g2_ref * np.sqrt(1 / N1 + 1 / n123 + 1 / N12 + 1 / N13)
    return float(g2), float(sigma)


@dataclass(frozen=True)
class CoincidenceReport:
    N1: int
    N12: int
    N13: int
    N123: int
    window_ns: float
    g2: float = float("nan")
    g2_sigma: float = float("nan")

    @classmethod
    def from_counts(cls, N1, N12, N13, N123, window_ns):
        try:
            g2, sigma = g2_zero(N1, N12, N13, N123)
        except UndefinedStatisticError:
            g2 = sigma = float("nan")
        return cls(int(N1), int(N12), int(N13), int(N123), float(window_ns), g2, sigma)

    @property
    def defined(self):
        return self.N12 > 0 and self.N13 > 0

    def __add__(self, other):
        if self.window_ns != other.window_ns:
            raise DataError("cannot add reports with different windows")
        return CoincidenceReport.from_counts(self.N1 + other.N1, self.N12 + other.N12,
                                             self.N13 + other.N13, self.N123 + other.N123,
                                             self.window_ns)

    def to_csv(self):
        def num(x):
            return "" if np.isnan(x) else repr(float(x))
        return (f"{self.N1},{self.N12},{self.N13},{self.N123},{self.window_ns!r},"
                f"{num(self.g2)},{num(self.g2_sigma)}")

    @classmethod
    def from_csv(cls, line):
        f = line.strip().split(",")
        if len(f) != 7:
            raise DataError(f"expected 7 fields in report line, got {len(f)}")
        val = [float(x) if x else float("nan") for x in f[4:]]
        return cls(int(f[0]), int(f[1]), int(f[2]), int(f[3]), *val)


def coincidence_report(h, a, b, window, offsets=(0, 0)):
    h = _tags(h)
    f12 = match_flags(h, _tags(a), _window(window), int(offsets[0]))
    f13 = match_flags(h, _tags(b), _window(window), int(offsets[1]))
    return CoincidenceReport.from_counts(h.size, np.count_nonzero(f12), np.count_nonzero(f13),
                                         np.count_nonzero(f12 & f13), window / 1000)


def rolling_g2(h, a, b, window, bin_duration, offsets=(0, 0), duration_ps=None):
    """One report per consecutive time bin, binned on herald time.

    The whole run is matched once and the per-herald flags are then binned,
    so bin counts add up exactly to the whole-run counts.
    """
    if not bin_duration > 0:
        raise ConfigurationError("bin_duration must be > 0")
    htags = _tags(h)
    f12 = match_flags(htags, _tags(a), _window(window), int(offsets[0]))
    f13 = match_flags(htags, _tags(b), _window(window), int(offsets[1]))
    if duration_ps is None:
        duration_ps = getattr(h, "duration_ps", 0) or (int(htags[-1]) + 1 if htags.size else 0)
    bin_ps = int(round(bin_duration * PS_PER_S))
    nbins = max(1, -(-int(duration_ps) // bin_ps))
    idx = np.minimum(htags // bin_ps, nbins - 1)
    n1 = np.bincount(idx, minlength=nbins)
    n12 = np.bincount(idx, weights=f12, minlength=nbins).astype(np.int64)
    n13 = np.bincount(idx, weights=f13, minlength=nbins).astype(np.int64)
    n123 = np.bincount(idx, weights=f12 & f13, minlength=nbins).astype(np.int64)
    return [CoincidenceReport.from_counts(n1[k], n12[k], n13[k], n123[k], window / 1000)
            for k in range(nbins)]


def total_report(reports):
    total = reports[0]
    for r in reports[1:]:
        total = total + r
    return total


@dataclass(frozen=True)
class DelayEstimate:
    offset_ps: int
    peak: int
    background: float
    significance: float
    significant: bool


def find_delay(a, b, search_range=100_000, bin=100, min_significance=5.0):
    """Offset (ps) to add to ``b`` so that it lines up with ``a``.

    The histogram of ``t_a - t_b`` is built with bins centred on multiples of
    ``bin``.  Significance is the peak excess over the mean bin content in
    Poisson standard deviations.
    """
    at, bt = _tags(a), _tags(b)
    if at.size == 0 or bt.size == 0:
        raise DataError("find_delay needs two non-empty streams")
    bin = int(bin)
    half = int(search_range) // bin
    lo = -half * bin - bin // 2
    nbins = 2 * half + 1
    hist = difference_histogram(at, bt, lo, lo + nbins * bin, bin, nbins)
    k = int(np.argmax(hist))
    peak = int(hist[k])
    rest = np.delete(hist, k)
    background = float(rest.mean()) if rest.size else 0.0
    significance = (peak - background) / np.sqrt(max(background, 1.0))
    return DelayEstimate((k - half) * bin, peak, background, float(significance),
                         bool(significance >= min_significance))


@dataclass
class DelayCalibration:
    """Antisymmetric table of channel-pair offsets in ps."""

    offsets: dict = field(default_factory=dict)

    def set(self, a, b, offset_ps):
        if not np.isfinite(offset_ps):
            raise DataError("delay offsets must be finite")
        self.offsets[(a, b)] = int(offset_ps)
        self.offsets[(b, a)] = -int(offset_ps)

    def get(self, a, b):
        if a == b:
            return 0
        return self.offsets.get((a, b), 0)

    @classmethod
    def measure(cls, reference, others, search_range=100_000, bin=100):
        cal = cls()
        for s in others:
            cal.set(reference.channel, s.channel,
                    find_delay(reference, s, search_range, bin).offset_ps)
        return cal


def hbt_g2(a, b, window, duration_ps=None, offset=0):
    """Unheralded two-detector g2(0): coincidences over the accidental expectation."""
    at, bt = _tags(a), _tags(b)
    if duration_ps is None:
        duration_ps = getattr(a, "duration_ps", 0)
    expected = at.size * bt.size * window / duration_ps
    if expected <= 0:
        raise UndefinedStatisticError("no singles to normalise against")
    return count_coincidences(at, bt, window, offset) / expected
