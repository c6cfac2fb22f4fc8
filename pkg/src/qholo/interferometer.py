"""Image-plane Michelson interferometer: intensity and count-rate maps.

Pixel (row i, column j) sits at x = j*pitch, y = i*pitch.  The reference
arm is ``r = G * exp(-2j*pi*(fx*x + fy*y))`` so that the object term
``conj(r) * o`` carries the carrier ``exp(+2j*pi*(fx*x + fy*y))`` and lands
at +(fx, fy) in the spectrum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError

PIXEL_SIZE = 30e-6

# measured rate table, first setting (count / (s pixel))
TABLE_HERALDED = 1.72398
TABLE_COINCIDENCE_NOISE = 0.109099
TABLE_NONHERALDED = 528.471
TABLE_DARK = 460.0
TABLE_WINDOW = 2e-9


@dataclass(frozen=True, eq=False)
class ObjectMap:
    """Complex reflectance of the object arm, one value per pixel."""

    reflectance: np.ndarray
    pitch: float = PIXEL_SIZE

    def __post_init__(self):
        o = np.asarray(self.reflectance, dtype=complex)
        if o.ndim != 2:
            raise DataError("object map must be 2-D")
        if not np.all(np.isfinite(o)):
            raise DataError("object map has non-finite values")
        if np.any(np.abs(o) > 1 + 1e-12):
            raise DataError("object reflectance magnitude exceeds 1")
        if not self.pitch > 0:
            raise ConfigurationError("object pitch must be > 0")
        object.__setattr__(self, "reflectance", o)

    @property
    def shape(self):
        return self.reflectance.shape

    @property
    def amplitude(self):
        return np.abs(self.reflectance)

    @property
    def phase(self):
        return np.angle(self.reflectance)

    def coordinates(self):
        ny, nx = self.shape
        return np.meshgrid(np.arange(nx) * self.pitch, np.arange(ny) * self.pitch)


@dataclass(frozen=True)
class BeamProfile:
    """Gaussian field envelope ``peak * exp(-r^2 / waist^2)``."""

    x0: float
    y0: float
    waist: float
    peak: float = 1.0

    def __post_init__(self):
        if not self.waist > 0:
            raise ConfigurationError("beam.waist must be > 0")

    @classmethod
    def centered(cls, shape, pitch=PIXEL_SIZE, waist_fraction=0.45):
        ny, nx = shape
        return cls((nx - 1) / 2 * pitch, (ny - 1) / 2 * pitch,
                   waist_fraction * min(nx, ny) * pitch)

    def envelope(self, x, y):
        return self.peak * np.exp(-((x - self.x0) ** 2 + (y - self.y0) ** 2) / self.waist**2)

    def fwhm_mask(self, obj):
        """Pixels where the intensity envelope is above half maximum."""
        x, y = obj.coordinates()
        return self.envelope(x, y) ** 2 >= 0.5 * self.peak**2


@dataclass(frozen=True)
class TiltConfig:
    """Carrier fringe frequency in cycles per metre."""

    fx: float
    fy: float = 0.0

    def __post_init__(self):
        if self.fx == 0 and self.fy == 0:
            raise ConfigurationError("tilt needs a nonzero fringe frequency")

    @classmethod
    def cycles(cls, shape, pitch=PIXEL_SIZE, across_x=None, across_y=0.0):
        """Tilt giving a whole number of fringes across the frame.

        Default: about a 4-pixel fringe period along x, rounded to whole
        fringes so the carrier sits on the DFT grid.
        """
        ny, nx = shape
        if across_x is None:
            across_x = round(nx / 4)
        return cls(across_x / (nx * pitch), across_y / (ny * pitch))

    def reference_phase(self, x, y):
        return 2 * np.pi * (self.fx * x + self.fy * y)


def _fields(obj, beam, tilt):
    x, y = obj.coordinates()
    g = beam.envelope(x, y)
    r = g * np.exp(-1j * tilt.reference_phase(x, y))
    return r, g * obj.reflectance


def intensity_map(obj, beam, tilt):
    """``|r + o|^2`` on the pixel grid, both arms sharing the beam envelope."""
    r, o = _fields(obj, beam, tilt)
    intensity = np.abs(r + o) ** 2
    return np.maximum(intensity, 0.0)


def reference_intensity(obj, beam):
    x, y = obj.coordinates()
    return beam.envelope(x, y) ** 2


@dataclass(frozen=True)
class RateCalibration:
    """Peak count rates (1/s) used to turn a normalised intensity into counts.

    Defaults come from the measured rate table (first setting).  The heralded
    and non-heralded scales are the rates at the brightest pixel.  ``heralded_scale`` is twice
    the tabulated mean, which makes a uniformly lit, fully modulated fringe
    field reproduce the tabulated average.  ``nonheralded_scale`` is set so
    that the fringe visibility on top of the 460 /s floor is the reported 2 %.
    ``herald_singles_rate`` reproduces the tabulated coincidence noise
    (herald singles x imaging dark counts x 2 ns window).
    """

    heralded_scale: float = 2 * TABLE_HERALDED
    nonheralded_scale: float = 0.02 * 2 * TABLE_DARK / 0.98
    background: float = TABLE_DARK
    herald_singles_rate: float = TABLE_COINCIDENCE_NOISE / (TABLE_DARK * TABLE_WINDOW)

    def __post_init__(self):
        for name in ("heralded_scale", "nonheralded_scale", "background", "herald_singles_rate"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"calibration.{name} must be >= 0")

    @classmethod
    def matched_to(cls, intensity, heralded_mean=TABLE_HERALDED,
                   nonheralded_mean=TABLE_NONHERALDED, background=TABLE_DARK, **kw):
        """Scales chosen so the frame means equal the given averages."""
        fill = float(np.mean(intensity) / np.max(intensity))
        return cls(heralded_mean / fill, (nonheralded_mean - background) / fill,
                   background, **kw)


def rate_maps(intensity, calib=RateCalibration()):
    """(heralded, non-heralded, background) count-rate grids in 1/s.

    Accidental herald coincidences are not included here; they depend on the
    coincidence window and are added at acquisition time.
    """
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise DataError("intensity must be non-negative")
    peak = intensity.max()
    norm = intensity / peak if peak > 0 else np.zeros_like(intensity)
    background = np.full_like(intensity, calib.background)
    return calib.heralded_scale * norm, calib.nonheralded_scale * norm + background, background


def visibility_bounds(calib=RateCalibration()):
    """Noise-free fringe visibility of the heralded and non-heralded maps."""
    return 1.0, calib.nonheralded_scale / (calib.nonheralded_scale + 2 * calib.background)


# object generators ---------------------------------------------------------

def mirror_object(shape, pitch=PIXEL_SIZE, reflectance=1.0):
    return ObjectMap(np.full(shape, reflectance, dtype=complex), pitch)


def half_circles_object(shape, pitch=PIXEL_SIZE, radius_fraction=0.3, gap_fraction=0.06,
                        reflectance=1.0):
    """Two reflective half discs, split by a vertical dark gap, on a dark field."""
    ny, nx = shape
    yy, xx = np.mgrid[0:ny, 0:nx]
    cy, cx = (ny - 1) / 2, (nx - 1) / 2
    radius = radius_fraction * min(nx, ny)
    disc = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
    gap = np.abs(xx - cx) <= gap_fraction * min(nx, ny) / 2
    o = np.where(disc & ~gap, reflectance, 0.0).astype(complex)
    return ObjectMap(o, pitch)


def phase_step_object(shape, pitch=PIXEL_SIZE, step=np.pi / 2, reflectance=1.0,
                      corner=None):
    """Mirror with a transparent plate of phase ``step`` over one quadrant.

    The plate covers rows < corner[0] and columns < corner[1]; the default
    corner is the frame centre so the plate fills a quarter of the field.
    """
    ny, nx = shape
    if corner is None:
        corner = (ny // 2, nx // 2)
    o = np.full(shape, reflectance, dtype=complex)
    o[: corner[0], : corner[1]] *= np.exp(1j * step)
    return ObjectMap(o, pitch)


def step_regions(shape, corner=None, margin=4):
    """Boolean (plate, bare mirror) masks, each ``margin`` pixels clear of the edge."""
    ny, nx = shape
    if corner is None:
        corner = (ny // 2, nx // 2)
    yy, xx = np.mgrid[0:ny, 0:nx]
    plate = (yy < corner[0] - margin) & (xx < corner[1] - margin)
    near_plate = (yy < corner[0] + margin) & (xx < corner[1] + margin)
    return plate, ~near_plate


def objectmap_to_csv(obj, amp_path, phase_path):
    header = f"pitch_m={obj.pitch!r}"
    np.savetxt(amp_path, obj.amplitude, delimiter=",", header=header, fmt="%.17g")
    np.savetxt(phase_path, obj.phase, delimiter=",", header=header, fmt="%.17g")


def objectmap_from_csv(amp_path, phase_path):
    with open(amp_path) as fh:
        first = fh.readline()
    if not first.startswith("# pitch_m="):
        raise DataError(f"{amp_path}: missing '# pitch_m=' header")
    pitch = float(first.split("=", 1)[1])
    amp = np.loadtxt(amp_path, delimiter=",", ndmin=2)
    phase = np.loadtxt(phase_path, delimiter=",", ndmin=2)
    if amp.shape != phase.shape:
        raise DataError("amplitude and phase grids differ in shape")
    return ObjectMap(amp * np.exp(1j * phase), pitch)
