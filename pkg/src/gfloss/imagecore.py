"""Image container, file I/O, color conversion and degradation primitives."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pngio
from .errors import DimensionNotDivisible, InvalidImage
from .rng import gaussian_field

MIN_SIDE = 8
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class Image:
    """Double-precision H x W x C pixel grid, nominal range [0, 1].

    ``data`` is stored read-only with shape (height, width, channels).
    A 2-D array is accepted and treated as a single channel.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise InvalidImage("expected (H, W) or (H, W, 1|3) array, got shape %s" % (arr.shape,))
        if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
            raise InvalidImage("image must be at least %dx%d, got %dx%d"
                               % (MIN_SIDE, MIN_SIDE, arr.shape[0], arr.shape[1]))
        if not np.all(np.isfinite(arr)):
            raise InvalidImage("image contains NaN or Inf samples")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_grid(x):
    """Return an (H, W, C) float64 view of an Image or array-like."""
    if isinstance(x, Image):
        return x.data
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def read_samples(path):
    """Decode a file to an unvalidated (H, W, C) float array in [0, 1]."""
    pixels = pngio.decode(Path(path).read_bytes())
    return pixels.astype(np.float64) / 255.0


def load_image(path):
    return Image(read_samples(path))


def quantize(img):
    """Clamp to [0, 1] and map to bytes with round-half-up."""
    arr = np.clip(as_grid(img), 0.0, 1.0)
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write an 8-bit image; ``.pgm``/``.ppm`` suffixes produce netpbm, anything else PNG."""
    path = Path(path)
    pixels = quantize(img)
    if path.suffix.lower() in (".pgm", ".ppm"):
        payload = pngio.encode_pnm(pixels)
    else:
        payload = pngio.encode_png(pixels)
    path.write_bytes(payload)


def to_grayscale(img):
    img = img if isinstance(img, Image) else Image(img)
    if img.channels == 1:
        return img
    w = np.array(LUMA_WEIGHTS)
    return Image(img.data @ w)


def _cubic_weight(x, a=-0.5):
    x = np.abs(x)
    return np.where(
        x <= 1.0,
        (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0,
        np.where(x < 2.0, a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a, 0.0),
    )


def bicubic_matrix(n_in, n_out):
    """Dense (n_out, n_in) resampling matrix: Catmull-Rom, pixel-center aligned, edge clamped."""
    scale = n_in / n_out
    centers = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(centers).astype(int)
    mat = np.zeros((n_out, n_in))
    for offset in (-1, 0, 1, 2):
        taps = base + offset
        w = _cubic_weight(centers - taps)
        np.add.at(mat, (np.arange(n_out), np.clip(taps, 0, n_in - 1)), w)
    return mat


def resize_bicubic(img, height, width):
    arr = as_grid(img)
    rows = bicubic_matrix(arr.shape[0], height)
    cols = bicubic_matrix(arr.shape[1], width)
    return np.einsum("ij,jkc,lk->ilc", rows, arr, cols)


def downscale_bicubic(img, factor):
    """Bicubic reduction by an integer factor; returns an (H/f, W/f, C) grid.

    A plain array rather than an Image, since small inputs may shrink below
    the 8x8 image minimum.
    """
    arr = as_grid(img)
    if factor < 2:
        raise ValueError("factor must be >= 2")
    h, w = arr.shape[:2]
    if h % factor or w % factor:
        raise DimensionNotDivisible("%dx%d is not divisible by %d" % (h, w, factor))
    return resize_bicubic(arr, h // factor, w // factor)


def upscale_bicubic(img, factor):
    """Bicubic enlargement, unclamped; used to pre-upsample SR inputs to target size."""
    arr = as_grid(img)
    return resize_bicubic(arr, arr.shape[0] * factor, arr.shape[1] * factor)


def add_gaussian_noise(img, sigma, mu=0.0, seed=0):
    """Add i.i.d. N(mu, sigma^2) noise and clamp to [0, 1].

    Samples are drawn channel by channel, each channel in row-major order.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    arr = as_grid(img)
    h, w, c = arr.shape
    if sigma == 0:
        noise = np.full((h, w, c), float(mu))
    else:
        noise = gaussian_field((c, h, w), seed, mu, sigma).transpose(1, 2, 0)
    return Image(np.clip(arr + noise, 0.0, 1.0))
