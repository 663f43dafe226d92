"""Gaussian/Laplacian pyramids on the 5-tap binomial kernel with circular borders.

Every operator here is linear and circulant, so the adjoints used by the
loss gradient are exact: ``upsample`` is 4x the adjoint of ``downsample``
and the depth-1 Laplacian ``I - u(d(I))`` is self-adjoint.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DepthTooLarge, ImageTooSmall, OddDimensions
from .imagecore import MIN_SIDE, as_grid

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _blur_axis(x, axis, kernel):
    out = np.zeros_like(x)
    r = len(kernel) // 2
    for k, w in enumerate(kernel):
        out += w * np.roll(x, r - k, axis=axis)
    return out


def blur(x, gain=1.0):
    """Separable circular convolution with ``gain * KERNEL`` along rows and columns."""
    k = KERNEL * np.sqrt(gain)
    return _blur_axis(_blur_axis(x, 0, k), 1, k)


def decimate(x):
    return x[::2, ::2]


def zero_insert(x):
    h, w = x.shape[:2]
    out = np.zeros((2 * h, 2 * w) + x.shape[2:], dtype=x.dtype)
    out[::2, ::2] = x
    return out


def _check_even(x):
    h, w = x.shape[:2]
    if h % 2 or w % 2:
        raise OddDimensions("dimensions %dx%d are not even" % (h, w))


def downsample(grid):
    """Blur with the binomial kernel, then keep even-indexed samples."""
    x = as_grid(grid)
    _check_even(x)
    return decimate(blur(x))


def upsample(grid):
    """Zero-insert to double size, then blur with 4x the kernel (constants preserved)."""
    return blur(zero_insert(as_grid(grid)), gain=4.0)


def downsample_adjoint(grid):
    return blur(zero_insert(as_grid(grid)))


def upsample_adjoint(grid):
    x = as_grid(grid)
    _check_even(x)
    return decimate(blur(x, gain=4.0))


@dataclass(frozen=True)
class LaplacianPyramid:
    levels: tuple
    base: np.ndarray

    @property
    def depth(self):
        return len(self.levels)


def build_laplacian(img, depth):
    x = as_grid(img)
    h, w = x.shape[:2]
    if depth < 0:
        raise ValueError("depth must be non-negative")
    step = 2**depth
    if h % step or w % step or h // step < MIN_SIDE or w // step < MIN_SIDE:
        raise DepthTooLarge("depth %d needs sides divisible by %d with a base of at least %dx%d (got %dx%d)"
                            % (depth, step, MIN_SIDE, MIN_SIDE, h, w))
    gaussians = [x]
    for _ in range(depth):
        gaussians.append(downsample(gaussians[-1]))
    levels = tuple(g - upsample(g_next) for g, g_next in zip(gaussians, gaussians[1:]))
    return LaplacianPyramid(levels, gaussians[-1])


def reconstruct(pyr):
    img = pyr.base
    for level in reversed(pyr.levels):
        img = upsample(img) + level
    return img


def _check_depth1(x):
    _check_even(x)
    h, w = x.shape[:2]
    if h < 2 * MIN_SIDE or w < 2 * MIN_SIDE:
        raise ImageTooSmall("depth-1 Laplacian needs at least %dx%d, got %dx%d"
                            % (2 * MIN_SIDE, 2 * MIN_SIDE, h, w))


def laplacian_depth1(img):
    """The single detail level ``I - u(d(I))``, per channel."""
    x = as_grid(img)
    _check_depth1(x)
    return x - upsample(downsample(x))


def laplacian_depth1_adjoint(grid):
    """Transpose of ``laplacian_depth1``, assembled from the kernel adjoints."""
    y = as_grid(grid)
    _check_depth1(y)
    return y - downsample_adjoint(upsample_adjoint(y))
