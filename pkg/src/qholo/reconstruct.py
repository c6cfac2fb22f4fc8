"""Off-axis hologram reconstruction.

Spectra are stored DC-centred (``fftshift`` layout) with unitary
normalisation.  Frequency coordinates ``(u, v)`` are column and row offsets
from the DC pixel.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BoundsError, ConfigurationError, DataError, DetectionError


@dataclass(frozen=True, eq=False)
class Spectrum:
    data: np.ndarray

    @property
    def shape(self):
        return self.data.shape

    @property
    def dc(self):
        """Array index (row, col) of the zero-frequency pixel."""
        return (self.shape[0] // 2, self.shape[1] // 2)

    def frequency_grid(self):
        """(u, v) offset of every pixel from DC."""
        ny, nx = self.shape
        r0, c0 = self.dc
        v, u = np.mgrid[0:ny, 0:nx]
        return u - c0, v - r0

    def energy(self):
        return float(np.sum(np.abs(self.data) ** 2))

    def at(self, u, v):
        r0, c0 = self.dc
        return self.data[r0 + v, c0 + u]


@dataclass(frozen=True, eq=False)
class ComplexField:
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if not np.all(np.isfinite(d)):
            raise DataError("complex field has non-finite entries")
        object.__setattr__(self, "data", d)

    @property
    def shape(self):
        return self.data.shape

    @property
    def amplitude(self):
        return np.abs(self.data)

    @property
    def phase(self):
        """Wrapped phase in (-pi, pi]."""
        p = np.angle(self.data)
        return np.where(p <= -np.pi, np.pi, p)


class MaskShape(str, Enum):
    DISK = "disk"
    RECT = "rect"


@dataclass(frozen=True)
class OrderMask:
    u: int
    v: int
    radius: int
    shape: MaskShape = MaskShape.DISK

    def __post_init__(self):
        object.__setattr__(self, "shape", MaskShape(self.shape))
        if self.radius < 0:
            raise ConfigurationError("mask radius must be >= 0")

    def footprint(self, spectrum_shape):
        """Boolean mask over the spectrum; ConfigurationError if it would wrap."""
        ny, nx = spectrum_shape
        r0, c0 = ny // 2, nx // 2
        lo_u, hi_u = -c0, nx - 1 - c0
        lo_v, hi_v = -r0, ny - 1 - r0
        r = self.radius
        v, u = np.mgrid[lo_v:hi_v + 1, lo_u:hi_u + 1]
        du, dv = u - self.u, v - self.v
        if self.shape is MaskShape.DISK:
            inside = du**2 + dv**2 <= r**2
        else:
            inside = (np.abs(du) <= r) & (np.abs(dv) <= r)
        clipped = (self.u - r < lo_u or self.u + r > hi_u
                   or self.v - r < lo_v or self.v + r > hi_v)
        if clipped and not inside.all():
            raise ConfigurationError(
                f"mask at ({self.u}, {self.v}) radius {r} reaches the Nyquist boundary")
        return inside


def default_mask_radius(shape):
    return min(shape) // 8


def fft2(frame):
    """Unitary 2-D DFT of a frame (HologramFrame or array), DC-centred."""
    counts = np.asarray(getattr(frame, "counts", frame), dtype=float)
    if counts.ndim != 2 or min(counts.shape) < 2:
        raise DataError("fft2 needs a 2-D frame of at least 2x2 pixels")
    return Spectrum(np.fft.fftshift(np.fft.fft2(counts, norm="ortho")))


def ifft2(spec):
    return np.fft.ifft2(np.fft.ifftshift(spec.data), norm="ortho")


def locate_first_order(spec, guard=None, min_contrast=6.0):
    """(u, v) of the strongest peak in the +1 half plane outside the DC guard.

    The +1 half plane is u > 0, plus u == 0 with v > 0.  A peak that does not
    stand ``min_contrast`` times above the median magnitude of the same half
    plane, or that is negligible next to DC, is treated as missing.
    """
    u, v = spec.frequency_grid()
    if guard is None:
        guard = max(2, min(spec.shape) // 16)
    half = (u > 0) | ((u == 0) & (v > 0))
    allowed = half & (u**2 + v**2 > guard**2)
    if not allowed.any():
        raise DetectionError("spectrum too small to search for a first order")
    mag = np.abs(spec.data)
    cand = np.where(allowed, mag, -1.0)
    k = np.unravel_index(np.argmax(cand), cand.shape)
    peak = mag[k]
    dc = abs(spec.at(0, 0))
    floor = np.median(mag[allowed])
    if peak <= 1e-9 * max(dc, 1e-300) or peak < min_contrast * floor:
        raise DetectionError("no first-order peak found; orders overlap or no fringes")
    return int(u[k]), int(v[k])


def isolate_order(spec, mask):
    """Copy of the spectrum with everything outside the mask set to zero."""
    inside = mask.footprint(spec.shape)
    return Spectrum(np.where(inside, spec.data, 0))


def reconstruct(spec_isolated):
    """Inverse DFT to the complex field A*exp(i*phi)."""
    return ComplexField(ifft2(spec_isolated))


def linear_phase_reference(spec, center, half_width=0):
    """Carrier field B*exp(i*phi_r) from a small block at the first order.

    The block is centred on ``center`` and spans +-half_width pixels, so the
    default is the single peak pixel.  A block that is not centred on the
    peak mixes neighbouring spectral pixels into the reference and bends its
    phase; with the carrier on the DFT grid the single pixel is exact.
    """
    cu, cv = center
    ny, nx = spec.shape
    r0, c0 = spec.dc
    rows = slice(r0 + cv - half_width, r0 + cv + half_width + 1)
    cols = slice(c0 + cu - half_width, c0 + cu + half_width + 1)
    if half_width < 0 or rows.start < 0 or cols.start < 0 or rows.stop > ny or cols.stop > nx:
        raise BoundsError("linear-phase block exceeds the spectrum")
    block = np.zeros_like(spec.data)
    block[rows, cols] = spec.data[rows, cols]
    return ComplexField(ifft2(Spectrum(block)))


def remove_linear_phase(field, ref):
    """``field * conj(ref)``: phase becomes the object phase, amplitude A*B."""
    if field.shape != ref.shape:
        raise DataError("field and reference differ in shape")
    return ComplexField(field.data * np.conj(ref.data))


def recenter_alternative(spec, mask):
    """Shift the isolated order onto DC, then inverse transform."""
    iso = isolate_order(spec, mask)
    shifted = np.roll(iso.data, (-mask.v, -mask.u), axis=(0, 1))
    return ComplexField(ifft2(Spectrum(shifted)))


def remove_with_calibration(field, calibration_field):
    """Object phase from a reference hologram recorded without the object."""
    return remove_linear_phase(field, ComplexField(np.exp(1j * calibration_field.phase)))


class Method(str, Enum):
    CONJUGATE_MULTIPLY = "conjugate_multiply"
    RECENTER = "recenter"
    CALIBRATION_FRAME = "calibration_frame"


@dataclass
class Reconstruction:
    field: ComplexField
    object_field: ComplexField
    center: tuple
    mask: OrderMask


def reconstruct_hologram(frame, method=Method.CONJUGATE_MULTIPLY, mask_radius=None,
                         mask_shape=MaskShape.DISK, center=None, half_width=0,
                         calibration_frame=None):
    """Complete chain: FFT, locate +1 order, isolate, invert, remove carrier."""
    method = Method(method)
    spec = fft2(frame)
    if center is None:
        center = locate_first_order(spec)
    if mask_radius is None:
        mask_radius = default_mask_radius(spec.shape)
    mask = OrderMask(center[0], center[1], mask_radius, mask_shape)
    field = reconstruct(isolate_order(spec, mask))
    if method is Method.CONJUGATE_MULTIPLY:
        obj = remove_linear_phase(field, linear_phase_reference(spec, center, half_width))
    elif method is Method.RECENTER:
        obj = recenter_alternative(spec, mask)
    else:
        if calibration_frame is None:
            raise ConfigurationError("calibration_frame method needs a calibration hologram")
        cal_field = reconstruct(isolate_order(fft2(calibration_frame), mask))
        obj = remove_with_calibration(field, cal_field)
    return Reconstruction(field, obj, tuple(center), mask)


# phase statistics ----------------------------------------------------------

def wrap(phase):
    return (np.asarray(phase) + np.pi) % (2 * np.pi) - np.pi


def circular_median(phase, weights=None):
    """Median of wrapped angles, taken after rotating to their circular mean."""
    phase = np.asarray(phase, dtype=float).ravel()
    if phase.size == 0:
        raise DataError("circular median of an empty set")
    w = np.ones_like(phase) if weights is None else np.asarray(weights, dtype=float).ravel()
    centre = np.angle(np.sum(w * np.exp(1j * phase)))
    return float(wrap(centre + np.median(wrap(phase - centre))))


def phase_step(field, region_a, region_b):
    """Wrapped difference of circular medians, region_a minus region_b."""
    ph = field.phase
    return float(wrap(circular_median(ph[region_a]) - circular_median(ph[region_b])))
