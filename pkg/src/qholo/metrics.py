"""Hologram quality: fringe visibility, total SNR and fringe SNR.

The fringe model is a Gaussian-envelope sinusoid::

    y(x) = Y0 + A * exp(-(x - x0)**2 / (2 w**2)) * (1 + B * sin(omega * x + phi))

fitted by Levenberg-Marquardt with an analytic Jacobian.
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import DataError, FitError, InsufficientFringeError, UndefinedStatisticError

SNR_CAP = 1e6


# visibility ----------------------------------------------------------------

def _profile(profile):
    p = np.asarray(profile, dtype=float)
    if p.ndim != 1:
        raise DataError("profile must be 1-D")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DataError("profile must be finite and non-negative")
    return p


def fringe_pairs(profile):
    """All (i_max, i_min) pairs: interior local maximum, then the next local minimum.

    The minimum is where the descending run after the maximum ends; it may be
    the last sample.
    """
    p = _profile(profile)
    pairs = []
    for i in range(1, p.size - 1):
        if p[i] > p[i - 1] and p[i] >= p[i + 1]:
            j = i
            while j + 1 < p.size and p[j + 1] <= p[j]:
                j += 1
            if p[j] < p[i]:
                pairs.append((i, j))
    return pairs


def visibility(profile):
    """(Nmax - Nmin) / (Nmax + Nmin) for the fringe nearest the intensity centroid."""
    p = _profile(profile)
    pairs = fringe_pairs(p)
    if not pairs:
        raise InsufficientFringeError("profile has no local maximum followed by a minimum")
    centroid = np.sum(np.arange(p.size) * p) / p.sum()
    i, j = min(pairs, key=lambda ij: abs(ij[0] - centroid))
    return float((p[i] - p[j]) / (p[i] + p[j]))


def central_profile(frame, rows=8):
    """Horizontal profile summed over ``rows`` rows around the frame centre."""
    counts = np.asarray(getattr(frame, "counts", frame))
    ny = counts.shape[0]
    lo = max(0, ny // 2 - rows // 2)
    return counts[lo:lo + max(1, rows)].sum(axis=0)


# total SNR -----------------------------------------------------------------

@dataclass(frozen=True)
class SnrInputs:
    """Signal and noise terms; any consistent unit (counts or counts/s)."""

    S_h: float
    N_hd: float
    S_nh: float
    N_nh: float
    N_dd: float = 0.0
    m: int = 1

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise DataError(f"SnrInputs.{f.name} must be >= 0")


def snr_total(inputs, channel="heralded", include_dd=False):
    """S_h / (N_hd [+ N_dd]) or S_nh / N_nh."""
    channel = getattr(channel, "value", channel)
    if channel == "heralded":
        noise = inputs.N_hd + (inputs.N_dd if include_dd else 0.0)
        signal = inputs.S_h
    elif channel == "nonheralded":
        noise, signal = inputs.N_nh, inputs.S_nh
    else:
        raise DataError(f"unknown SNR channel {channel!r}")
    if noise <= 0:
        raise UndefinedStatisticError(f"{channel} SNR has zero noise")
    return float(signal / noise)


def snr_inputs_from_frames(heralded, nonheralded, herald_singles_rate, window,
                           herald_dark_rate=0.0, per_pixel=True):
    """SNR terms estimated from a pair of frames.

    The imaging dark rate is the lowest single-pixel rate of the
    non-heralded frame.  Herald-singles x dark accidentals are
    ``singles * dark * window``; dark x dark uses the herald dark rate.
    ``window`` is in seconds.  With ``per_pixel`` the terms are frame
    averages in counts/(s pixel), otherwise whole-frame totals in counts.
    """
    t = nonheralded.integration_time
    h = np.asarray(heralded.counts, dtype=float)
    nh = np.asarray(nonheralded.counts, dtype=float)
    dark = nh.min() / t
    n_hd = herald_singles_rate * dark * window
    n_dd = herald_dark_rate * dark * window
    if per_pixel:
        return SnrInputs(h.mean() / heralded.integration_time, n_hd, nh.mean() / t, dark,
                         n_dd, h.shape[1])
    npx = h.size
    return SnrInputs(h.sum(), n_hd * heralded.integration_time * npx, nh.sum(),
                     dark * t * npx, n_dd * heralded.integration_time * npx, h.shape[1])


# fringe fit ----------------------------------------------------------------

PARAM_NAMES = ("Y0", "A", "x0", "w", "B", "omega", "phi")


@dataclass(frozen=True)
class FitParams:
    Y0: float
    A: float
    x0: float
    w: float
    B: float
    omega: float
    phi: float

    def as_array(self):
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, p):
        return cls(*(float(v) for v in p))


@dataclass
class FitResult:
    params: FitParams
    residual_rms: float
    converged: bool
    degenerate: bool
    initial_rms: float
    iterations: int
    stderr: np.ndarray = None


def fringe_model(params, x):
    Y0, A, x0, w, B, omega, phi = np.asarray(getattr(params, "as_array", lambda: params)())
    g = np.exp(-((x - x0) ** 2) / (2 * w**2))
    return Y0 + A * g * (1 + B * np.sin(omega * x + phi))


def _jacobian(p, x):
    Y0, A, x0, w, B, omega, phi = p
    d = x - x0
    g = np.exp(-d**2 / (2 * w**2))
    s, c = np.sin(omega * x + phi), np.cos(omega * x + phi)
    env = A * g * (1 + B * s)
    return np.column_stack([
        np.ones_like(x),
        g * (1 + B * s),
        env * d / w**2,
        env * d**2 / w**3,
        A * g * s,
        A * g * B * c * x,
        A * g * B * c,
    ])


def _linear_fringe(x, y, x0, w, omega):
    g = np.exp(-((x - x0) ** 2) / (2 * w**2))
    M = np.column_stack([np.ones_like(x), g, g * np.sin(omega * x), g * np.cos(omega * x)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    return coef, float(np.sum((M @ coef - y) ** 2))


def initial_guess(y, x):
    """Starting point from moments, the FFT peak and a linear sub-solve."""
    y0 = y.min()
    yp = y - y0
    tot = yp.sum()
    if tot <= 0:
        raise InsufficientFringeError("line is flat")
    x0 = float(np.sum(x * yp) / tot)
    w = float(np.sqrt(max(np.sum((x - x0) ** 2 * yp) / tot, 1e-12)))
    dx = float(np.median(np.diff(x)))

    # remove offset and envelope, then look for the strongest periodicity
    g = np.exp(-((x - x0) ** 2) / (2 * w**2))
    base, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), g]), y, rcond=None)
    resid = y - base[0] - base[1] * g
    n = 8 * len(y)
    spec = np.abs(np.fft.rfft(resid - resid.mean(), n))
    k = int(np.argmax(spec[1:])) + 1
    omega = 2 * np.pi * k / (n * dx)

    step = 2 * np.pi / (n * dx)
    grid = omega + step * np.linspace(-1, 1, 21)
    grid = grid[grid > 0]
    omega = min(grid, key=lambda om: _linear_fringe(x, y, x0, w, om)[1])
    (Y0, A, C, D), _ = _linear_fringe(x, y, x0, w, omega)
    if A <= 0:
        A = max(yp.max(), 1e-12)
    B = np.hypot(C, D) / A
    phi = np.arctan2(D, C)
    return np.array([Y0, A, x0, w, B, omega, phi], dtype=float)


def _canonical(p):
    p = p.copy()
    if p[3] < 0:
        p[3] = -p[3]
    if p[5] < 0:
        p[5], p[6] = -p[5], np.pi - p[6]
    if p[4] < 0:
        p[4], p[6] = -p[4], p[6] + np.pi
    p[6] = (p[6] + np.pi) % (2 * np.pi) - np.pi
    return p


def fit_fringe(line, x=None, p0=None, max_iter=500, tol=1e-9):
    """Least-squares fit of the Gaussian-envelope fringe model.

    Returns a FitResult.  Raises FitError, carrying the best result so far,
    if the cost has not settled after ``max_iter`` iterations.
    """
    y = np.asarray(line, dtype=float)
    if y.ndim != 1 or y.size < 2 * len(PARAM_NAMES):
        raise DataError(f"fringe fit needs at least {2 * len(PARAM_NAMES)} samples")
    if not np.all(np.isfinite(y)):
        raise DataError("line has non-finite samples")
    x = np.arange(y.size, dtype=float) if x is None else np.asarray(x, dtype=float)

    p = initial_guess(y, x) if p0 is None else np.asarray(getattr(p0, "as_array", lambda: p0)(), float)
    r = fringe_model(p, x) - y
    cost = float(r @ r)
    initial_rms = np.sqrt(cost / y.size)
    lam = 1e-3
    converged = cost == 0
    it = 0
    while not converged and it < max_iter:
        it += 1
        J = _jacobian(p, x)
        JTJ = J.T @ J
        grad = J.T @ r
        while True:
            A = JTJ + lam * np.diag(np.maximum(np.diag(JTJ), 1e-12))
            try:
                delta = -np.linalg.solve(A, grad)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None:
                trial = p + delta
                r_new = fringe_model(trial, x) - y
                c_new = float(r_new @ r_new)
                if np.isfinite(c_new) and c_new <= cost:
                    break
            lam *= 10
            if lam > 1e15:
                converged = True
                break
        if converged:
            break
        change = (cost - c_new) / max(cost, 1e-300)
        p, r, cost = trial, r_new, c_new
        lam = max(lam / 10, 1e-12)
        if change < tol or cost == 0:
            converged = True

    p = _canonical(p)
    rms = float(np.sqrt(cost / y.size))
    stderr, degenerate = _uncertainty(p, x, cost, y.size)
    result = FitResult(FitParams.from_array(p), rms, converged, degenerate, float(initial_rms),
                       it, stderr)
    if not converged:
        raise FitError(f"fringe fit did not converge in {max_iter} iterations", result)
    return result


def _uncertainty(p, x, cost, m):
    """Parameter standard errors and the degenerate-fringe flag.

    The fringe is degenerate when the normal matrix is singular (omega and
    phi unidentifiable) or when the fringe amplitude A*B is within three
    standard errors of zero.
    """
    J = _jacobian(p, x)
    JTJ = J.T @ J
    scale = np.sqrt(np.maximum(np.diag(JTJ), 1e-300))
    Jn = JTJ / np.outer(scale, scale)
    if np.linalg.cond(Jn) > 1e12:
        return np.full(len(p), np.nan), True
    cov = np.linalg.inv(Jn) / np.outer(scale, scale) * (cost / max(m - len(p), 1))
    stderr = np.sqrt(np.maximum(np.diag(cov), 0))
    A, B = p[1], p[4]
    grad = np.array([B, A])
    var_ab = grad @ cov[np.ix_([1, 4], [1, 4])] @ grad
    return stderr, bool(abs(A * B) <= 3 * np.sqrt(max(var_ab, 0)))


def fringe_snr(fit, line, residual_rms=None, x=None):
    """(max - min of the fitted curve) / residual RMS, capped at 1e6.

    Returns (snr, capped).
    """
    params = getattr(fit, "params", fit)
    if getattr(fit, "degenerate", False):
        raise UndefinedStatisticError("fringe SNR of a degenerate fit")
    if residual_rms is None:
        residual_rms = fit.residual_rms
    y = np.asarray(line, dtype=float)
    x = np.arange(y.size, dtype=float) if x is None else np.asarray(x, dtype=float)
    model = fringe_model(params, x)
    signal = float(model.max() - model.min())
    if residual_rms <= 0 or signal / residual_rms > SNR_CAP:
        return SNR_CAP, True
    return signal / residual_rms, False
