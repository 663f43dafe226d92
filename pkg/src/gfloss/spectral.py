"""2-D discrete Fourier analysis, radial high-pass masks and power spectra.

Conventions: the forward transform is unnormalized,
``F(u, v) = sum_x sum_y f(x, y) exp(-2 pi i (u x / M + v y / N))``,
and the inverse carries the 1/(MN) factor. Spectra stay in unshifted order
(DC at index (0, 0)); radial distances are measured on the centered grid
whose DC bin sits at (M // 2, N // 2).
"""

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricSpectrum, DimensionMismatch
from .imagecore import as_grid

IMAG_RESIDUE_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex (H, W, C) grid in unshifted DFT order."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.complex128)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class FrequencyMask:
    """Binary pass/stop indicator per bin, unshifted layout, built from a radial threshold."""

    values: np.ndarray
    omega: float

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def passed(self):
        return int(self.values.sum())


def is_power_of_two(n):
    return n > 0 and n & (n - 1) == 0


def _bit_reverse_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_last_axis(x):
    """Iterative radix-2 decimation-in-time FFT over the last axis (length 2^k)."""
    n = x.shape[-1]
    lead = x.shape[:-1]
    x = np.asarray(x, dtype=np.complex128)[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = x.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        x = np.concatenate((even + odd, even - odd), axis=-1).reshape(lead + (n,))
        size *= 2
    return x


def _dft_matrix(n):
    # reduce u*x mod n before scaling so large products keep full phase accuracy
    k = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(-2j * np.pi * k / n)


def _dft_axis(x, axis, fast):
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    if fast:
        y = _fft_last_axis(x)
    else:
        y = x @ _dft_matrix(x.shape[-1]).T
    return np.moveaxis(y, -1, axis)


def _forward(grid, fast=None):
    m, n = grid.shape[:2]
    if fast is None:
        fast = is_power_of_two(m) and is_power_of_two(n)
    out = _dft_axis(grid, 1, fast)
    return _dft_axis(out, 0, fast)


def dft2(img, fast=None):
    """Per-channel forward 2-D DFT.

    The radix-2 path runs when both sides are powers of two; otherwise the
    transform is evaluated directly from its defining sum. ``fast=False``
    forces the direct evaluation.
    """
    grid = as_grid(img)
    if fast and not (is_power_of_two(grid.shape[0]) and is_power_of_two(grid.shape[1])):
        raise ValueError("radix-2 path needs power-of-two dimensions")
    return Spectrum(_forward(grid, fast))


def idft2(spec, fast=None):
    """Inverse 2-D DFT with 1/(MN) scaling; returns the real part, unclamped.

    Raises AsymmetricSpectrum when the imaginary residue is too large to be
    rounding noise, i.e. the spectrum did not come from a real image.
    """
    values = spec.values if isinstance(spec, Spectrum) else Spectrum(spec).values
    m, n = values.shape[:2]
    out = np.conj(_forward(np.conj(values), fast)) / (m * n)
    residue = np.max(np.abs(out.imag)) if out.size else 0.0
    if residue > IMAG_RESIDUE_LIMIT:
        raise AsymmetricSpectrum("imaginary residue %.3g after inverse transform" % residue)
    return out.real


def centered_frequencies(n):
    """Signed frequency of each unshifted bin, i.e. its offset from the centered DC bin."""
    return (np.arange(n) + n // 2) % n - n // 2


def radial_distance(height, width):
    fu = centered_frequencies(height)[:, None]
    fv = centered_frequencies(width)[None, :]
    return np.sqrt(fu**2 + fv**2)


def highpass_mask(height, width, omega):
    """Pass every bin whose radial distance from DC is strictly above ``omega``."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    passed = radial_distance(height, width) > omega
    return FrequencyMask(passed.astype(np.float64), float(omega))


def allpass_mask(height, width):
    return FrequencyMask(np.ones((height, width)), -1.0)


def apply_highpass(img, mask):
    """Filter every channel through ``mask`` and return the real spatial result."""
    grid = as_grid(img)
    if grid.shape[:2] != mask.values.shape:
        raise DimensionMismatch("mask %s does not match image %s" % (mask.values.shape, grid.shape[:2]))
    spec = _forward(grid)
    return idft2(spec * mask.values[:, :, None])


def radial_power_spectrum(img):
    """Azimuthally averaged power |F|^2 per integer radius 0..min(M, N) // 2.

    Returns a list of ``(radius, mean_power)`` pairs.
    """
    grid = as_grid(img)
    if grid.shape[2] != 1:
        raise DimensionMismatch("radial power spectrum needs a single-channel image")
    m, n = grid.shape[:2]
    power = np.abs(_forward(grid)[:, :, 0]) ** 2
    radius = np.floor(radial_distance(m, n)).astype(np.int64)
    rmax = min(m, n) // 2
    keep = radius <= rmax
    sums = np.bincount(radius[keep], weights=power[keep], minlength=rmax + 1)
    counts = np.bincount(radius[keep], minlength=rmax + 1)
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return [(int(r), float(p)) for r, p in enumerate(means)]
