"""Fourier differentiation on periodic grids."""

from __future__ import annotations

import numpy as np

from .grid import Boundary, GridFunction

# Modes at or below NOISE_FACTOR times the high-frequency median are treated
# as roundoff when chopping.
NOISE_FACTOR = 10.0
# Modes below this fraction of the largest one are dropped regardless.
REL_FLOOR = 1e-17


def wavenumbers(n: int, length: float, order: int) -> np.ndarray:
    """Multipliers ``(2 pi i k / L)**order`` in FFT ordering.

    For even ``n`` the Nyquist multiplier is zeroed for odd orders, which keeps
    the derivative of real data real.
    """
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = (2j * np.pi * k / length) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[n // 2] = 0.0
    return mult


def chop_coefficients(coeffs: np.ndarray, window: int | None = None) -> np.ndarray:
    """Zero the roundoff plateau of a Fourier spectrum.

    ``coeffs`` has FFT ordering along axis 0 and may carry trailing axes
    (vector-valued samples share one cutoff). The plateau level is the median
    magnitude of the upper half of the spectrum; the cutoff is at the first
    wavenumber after which the envelope stays below ``NOISE_FACTOR`` times
    that level for ``window`` consecutive modes. Everything from there on is
    discarded, including noise that creeps back up near the Nyquist mode.
    """
    n = coeffs.shape[0]
    mag = np.abs(coeffs).reshape(n, -1).max(axis=1)
    kabs = np.abs(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    half = n // 2
    env = np.zeros(half + 1)
    np.maximum.at(env, kabs, mag)
    top = env.max()
    if top == 0.0:
        return coeffs
    floor = np.median(env[half // 2 :])
    cut = max(NOISE_FACTOR * floor, REL_FLOOR * top)
    w = window or max(8, n // 64)
    below = env <= cut
    # run[k] = length of the run of below-cut modes starting at k
    run = np.zeros(half + 2, dtype=int)
    for k in range(half, -1, -1):
        run[k] = run[k + 1] + 1 if below[k] else 0
    need = np.minimum(w, half + 1 - np.arange(half + 1))
    start = np.nonzero(run[: half + 1] >= need)[0]
    kmax = (start[0] - 1) if start.size else half
    out = coeffs.copy()
    out[kabs > kmax] = 0.0
    return out


def spectral_diff_array(values: np.ndarray, length: float, order: int, chop: bool = False) -> np.ndarray:
    """Differentiate periodic samples along axis 0."""
    vals = np.asarray(values, dtype=float)
    n = vals.shape[0]
    coeffs = np.fft.fft(vals, axis=0)
    if chop:
        coeffs = chop_coefficients(coeffs)
    mult = wavenumbers(n, length, order).reshape((n,) + (1,) * (vals.ndim - 1))
    return np.fft.ifft(coeffs * mult, axis=0).real


def spectral_derivative(u: GridFunction, order: int = 1, chop: bool = False) -> GridFunction:
    """Derivative of a periodic grid function by discrete Fourier differentiation.

    Exact (to roundoff) on trigonometric polynomials resolved by the grid.
    ``chop=True`` removes the roundoff plateau first; use it before stacking
    several derivatives of the same data.
    """
    if u.boundary is not Boundary.PERIODIC:
        raise ValueError("spectral differentiation needs a periodic grid; use finite differences for Dirichlet data")
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return u.with_values(spectral_diff_array(u.values, u.domain_length, order, chop=chop))


def fourier_diff_matrix(n: int, length: float) -> np.ndarray:
    """Dense first-derivative matrix for an odd number of periodic nodes."""
    if n % 2 == 0:
        raise ValueError("fourier_diff_matrix expects an odd node count")
    h = 2.0 * np.pi / n
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    with np.errstate(divide="ignore"):
        mat = 0.5 * (-1.0) ** diff / np.sin(diff * h / 2.0)
    mat[diff == 0] = 0.0
    return mat * (2.0 * np.pi / length)


def resample_periodic(values: np.ndarray, m: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto ``m`` nodes."""
    n = values.size
    coeffs = np.fft.rfft(values)
    out = np.zeros(m // 2 + 1, dtype=complex)
    keep = min(coeffs.size, out.size)
    out[:keep] = coeffs[:keep]
    if n % 2 == 0 and keep == coeffs.size:
        # split the Nyquist mode of the source between +-n/2
        out[keep - 1] *= 0.5
    return np.fft.irfft(out, n=m) * (m / n)
