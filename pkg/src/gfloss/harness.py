"""Desk-scale restoration experiments.

Two stand-ins for full model training exercise the loss and the band
schedule end to end:

* ``optimize_direct`` treats the restored pixels as free parameters and runs
  projected gradient descent from the degraded input.
* ``train_linear_restorer`` fits one shared k x k circular convolution by SGD
  over a corpus of pairs.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall, InvalidConfig, NonFiniteLoss
from .imagecore import Image, add_gaussian_noise, as_grid, downscale_bicubic, upscale_bicubic
from .loss import (
    DEFAULT_EPSILON,
    GflParams,
    LossBreakdown,
    charbonnier_value_and_gradient,
    edge_value_and_gradient,
    gfl_value_and_gradient,
    mse_value_and_gradient,
    pi_component,
)
from .rng import Xoshiro256pp
from .scheduler import BandScheduler, ScheduleConfig

TASKS = ("sr", "denoising")
LOSSES = ("gfl", "mse", "charbonnier", "edge")
SR_FACTOR = 4
NOISE_SIGMA = 0.15
NOISE_MU = 0.0
PSNR_CAP = 120.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "denoising"
    loss: str = "gfl"
    schedule: Optional[ScheduleConfig] = None
    steps: int = 2000
    learning_rate: float = 0.5
    seed: int = 0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidConfig("task must be one of %s" % (TASKS,))
        if self.loss not in LOSSES:
            raise InvalidConfig("loss must be one of %s" % (LOSSES,))
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidConfig("steps must be a positive integer")
        if not self.learning_rate > 0:
            raise InvalidConfig("learning_rate must be positive")
        if not self.epsilon > 0:
            raise InvalidConfig("epsilon must be positive")


@dataclass(frozen=True)
class StepRecord:
    """One optimization step.

    ``ch_c``, ``pi_c`` and ``theta_c`` are the GFL components at the current
    iterate (theta is 0 when no schedule runs); ``total`` is the value of the
    objective actually being minimized.
    """

    step: int
    ch_c: float
    pi_c: float
    theta_c: float
    total: float
    omega: Optional[float]
    psnr: float


@dataclass
class MetricsReport:
    psnr: float
    ssim: float
    psnr_in: float = float("nan")
    ssim_in: float = float("nan")
    history: List[StepRecord] = field(default_factory=list)
    omega_trace: list = field(default_factory=list)


def psnr(a, b):
    x, y = as_grid(a), as_grid(b)
    if x.shape != y.shape:
        raise DimensionMismatch("shapes %s and %s differ" % (x.shape, y.shape))
    mse = float(np.mean((x - y) ** 2))
    if mse < 1e-12:
        return PSNR_CAP
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window():
    t = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    w = np.exp(-(t**2) / (2.0 * SSIM_SIGMA**2))
    return w / w.sum()


def _filter_valid(x, w):
    n = len(w)
    rows = sum(w[k] * x[k:x.shape[0] - n + 1 + k] for k in range(n))
    return sum(w[k] * rows[:, k:x.shape[1] - n + 1 + k] for k in range(n))


def ssim(a, b):
    """Mean SSIM over all fully-covered 11x11 Gaussian windows, averaged over channels."""
    x, y = as_grid(a), as_grid(b)
    if x.shape != y.shape:
        raise DimensionMismatch("shapes %s and %s differ" % (x.shape, y.shape))
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise ImageTooSmall("SSIM needs at least %dx%d" % (SSIM_WINDOW, SSIM_WINDOW))
    w = _gaussian_window()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    scores = []
    for c in range(x.shape[2]):
        xc, yc = x[:, :, c], y[:, :, c]
        mx, my = _filter_valid(xc, w), _filter_valid(yc, w)
        vx = _filter_valid(xc * xc, w) - mx * mx
        vy = _filter_valid(yc * yc, w) - my * my
        cov = _filter_valid(xc * yc, w) - mx * my
        smap = ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        scores.append(float(np.mean(smap)))
    return float(np.mean(scores))


def make_pair(img, task, seed=0):
    """Return ``(degraded, target)``: x4 bicubic downscale or sigma=0.15 Gaussian noise."""
    target = img if isinstance(img, Image) else Image(img)
    if task == "sr":
        return Image(downscale_bicubic(target, SR_FACTOR)), target
    if task == "denoising":
        return add_gaussian_noise(target, NOISE_SIGMA, NOISE_MU, seed), target
    raise InvalidConfig("unknown task %r" % (task,))


def derived_seed(seed, index):
    return (int(seed) ^ int(index)) & ((1 << 64) - 1)


def synthetic_image(size, seed, channels=1):
    """Deterministic natural-looking test image in [0.1, 0.9].

    A sum of oriented sinusoids with 1/f amplitudes plus one soft-edged disc
    per channel gives content at every scale without any external data.
    """
    rng = Xoshiro256pp(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    out = np.zeros((size, size, channels))
    for c in range(channels):
        field_ = np.zeros((size, size))
        for k in range(1, 9):
            angle = 2 * math.pi * rng.uniform()
            phase = 2 * math.pi * rng.uniform()
            freq = k * (0.5 + rng.uniform())
            field_ += (1.0 / k) * np.sin(2 * math.pi * freq * (xx * math.cos(angle) + yy * math.sin(angle)) + phase)
        cy, cx, r = rng.uniform(), rng.uniform(), 0.15 + 0.2 * rng.uniform()
        dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
        field_ += 1.5 / (1.0 + np.exp((dist - r) * 60.0))
        field_ -= field_.min()
        out[:, :, c] = 0.1 + 0.8 * field_ / field_.max()
    return Image(out)


def loss_value_and_gradient(name, x, target, params):
    """Objective value, its gradient w.r.t. ``x``, and GFL diagnostics."""
    if name == "gfl":
        breakdown, grad = gfl_value_and_gradient(x, target, params)
        return breakdown.total, grad, breakdown
    if name == "mse":
        value, grad = mse_value_and_gradient(x, target)
    elif name == "charbonnier":
        value, grad = charbonnier_value_and_gradient(x, target, params.epsilon)
    elif name == "edge":
        value, grad = edge_value_and_gradient(x, target)
    else:
        raise InvalidConfig("unknown loss %r" % (name,))
    diff = x - target
    ch = float(np.mean(diff**2)) + params.epsilon**2
    pi = pi_component(x, target) if params.include_pi else 0.0
    return value, grad, LossBreakdown(ch, pi, 0.0, math.sqrt(ch + pi))


class _EpochClock:
    """Maps optimization steps to pseudo-epochs and drives the band scheduler."""

    def __init__(self, config, budget, shape):
        self.scheduler = None
        self.steps_per_epoch = budget
        self.epochs = 1
        if config.loss == "gfl" and config.schedule is not None:
            self.epochs = config.schedule.epochs
            self.steps_per_epoch = max(1, budget // self.epochs)
            self.scheduler = BandScheduler(config.schedule, shape[0], shape[1])
        self.trace = []
        self._epoch_losses = []
        self._last_mean = None

    def params(self, epsilon, step):
        if self.scheduler is None:
            return GflParams(epsilon=epsilon)
        epoch = min(self.epochs, step // self.steps_per_epoch + 1)
        if epoch > self.scheduler.state.epoch:
            if self._epoch_losses:
                self._last_mean = float(np.mean(self._epoch_losses))
                self._epoch_losses = []
            self.scheduler.advance(self._last_mean)
            self.trace.append((epoch, self.scheduler.omega, self.scheduler.state.frozen))
        return GflParams(epsilon=epsilon, mask=self.scheduler.mask)

    @property
    def omega(self):
        return None if self.scheduler is None else self.scheduler.omega

    def record(self, loss):
        self._epoch_losses.append(loss)


def _prepare_input(degraded, target):
    x, y = as_grid(degraded), as_grid(target)
    if x.shape == y.shape:
        return x.copy()
    if (x.shape[0] * SR_FACTOR, x.shape[1] * SR_FACTOR, x.shape[2]) == y.shape:
        return np.clip(upscale_bicubic(x, SR_FACTOR), 0.0, 1.0)
    raise DimensionMismatch("degraded %s cannot be matched to target %s" % (x.shape, y.shape))


def optimize_direct(pair, config):
    """Projected gradient descent on the pixels of the restored image.

    Returns ``(restored_image, MetricsReport)``. With the GFL loss and a
    schedule, the scheduler advances once per pseudo-epoch of
    ``steps // schedule.epochs`` steps and the new mask is used from that
    epoch's first step.
    """
    degraded, target = pair
    y = as_grid(target)
    x = _prepare_input(degraded, target)
    start = x.copy()
    clock = _EpochClock(config, config.steps, y.shape)
    history = []
    for step in range(config.steps):
        params = clock.params(config.epsilon, step)
        value, grad, parts = loss_value_and_gradient(config.loss, x, y, params)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            raise NonFiniteLoss("loss diverged at step %d; lower the learning rate" % step)
        clock.record(value)
        history.append(StepRecord(step, parts.ch_c, parts.pi_c, parts.theta_c, value, clock.omega, psnr(x, y)))
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - config.learning_rate * grad
        if not np.all(np.isfinite(x)):
            raise NonFiniteLoss("update at step %d is not finite; lower the learning rate" % step)
        x = np.clip(x, 0.0, 1.0)
    restored = Image(x)
    report = MetricsReport(
        psnr=psnr(restored, y),
        ssim=ssim(restored, y),
        psnr_in=psnr(start, y),
        ssim_in=ssim(start, y),
        history=history,
        omega_trace=clock.trace,
    )
    return restored, report


def identity_kernel(size):
    if size % 2 == 0 or size < 1:
        raise InvalidConfig("kernel size must be a positive odd integer")
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k


def _shifts(size):
    r = size // 2
    for i in range(size):
        for j in range(size):
            yield i, j, (r - i, r - j)


def apply_kernel(x, kernel):
    """Circular filtering ``out[y, x] = sum k[i, j] in[y + i - r, x + j - r]`` per channel."""
    x = as_grid(x)
    out = np.zeros_like(x)
    for i, j, shift in _shifts(kernel.shape[0]):
        out += kernel[i, j] * np.roll(x, shift, axis=(0, 1))
    return out


def kernel_gradient(x, grad_out, size):
    """Adjoint of ``apply_kernel`` in the kernel: correlate the input with dLoss/dOutput."""
    x = as_grid(x)
    g = np.zeros((size, size))
    for i, j, shift in _shifts(size):
        g[i, j] = float(np.sum(grad_out * np.roll(x, shift, axis=(0, 1))))
    return g


def kernel_loss_and_gradient(kernel, pair, loss, params):
    degraded, target = (as_grid(p) for p in pair)
    out = apply_kernel(degraded, kernel)
    value, grad_out, parts = loss_value_and_gradient(loss, out, target, params)
    return value, kernel_gradient(degraded, grad_out, kernel.shape[0]), parts


def split_corpus(corpus):
    """Hold out the last fifth (at least one pair); a single pair is used for both."""
    if len(corpus) < 2:
        return list(corpus), list(corpus)
    n_hold = max(1, len(corpus) // 5)
    return list(corpus[:-n_hold]), list(corpus[-n_hold:])


def _mean_metrics(pairs, kernel=None):
    p, s = [], []
    for degraded, target in pairs:
        x = as_grid(degraded)
        if kernel is not None:
            x = np.clip(apply_kernel(x, kernel), 0.0, 1.0)
        p.append(psnr(x, target))
        s.append(ssim(x, target))
    return float(np.mean(p)), float(np.mean(s))


def train_linear_restorer(corpus, config, kernel_size=5):
    """Fit one shared circular ``kernel_size`` convolution by SGD.

    ``config.steps`` counts passes over the training pairs (one SGD update
    per pair, in corpus order). Returns ``(kernel, MetricsReport)`` with
    metrics averaged over the held-out pairs.
    """
    if not corpus:
        raise InvalidConfig("empty corpus")
    if kernel_size > 9:
        raise InvalidConfig("kernel size must be at most 9")
    shape = as_grid(corpus[0][0]).shape
    for degraded, target in corpus:
        if as_grid(degraded).shape != shape or as_grid(target).shape != shape:
            raise DimensionMismatch("all corpus pairs must share one shape (denoising task)")
    train, held_out = split_corpus(corpus)
    kernel = identity_kernel(kernel_size)
    clock = _EpochClock(config, config.steps, shape)
    history = []
    for step in range(config.steps):
        params = clock.params(config.epsilon, step)
        values, grads, parts_all, psnrs = [], [], [], []
        for degraded, target in train:
            with np.errstate(over="ignore", invalid="ignore"):
                value, grad, parts = kernel_loss_and_gradient(kernel, (degraded, target), config.loss, params)
            if not (math.isfinite(value) and np.all(np.isfinite(grad))):
                raise NonFiniteLoss("loss diverged at pass %d; lower the learning rate" % step)
            kernel = kernel - config.learning_rate * grad
            values.append(value)
            parts_all.append(parts)
        if not np.all(np.isfinite(kernel)):
            raise NonFiniteLoss("kernel diverged at pass %d" % step)
        mean_loss = float(np.mean(values))
        clock.record(mean_loss)
        history.append(StepRecord(
            step,
            float(np.mean([p.ch_c for p in parts_all])),
            float(np.mean([p.pi_c for p in parts_all])),
            float(np.mean([p.theta_c for p in parts_all])),
            mean_loss,
            clock.omega,
            psnr(np.clip(apply_kernel(train[0][0], kernel), 0.0, 1.0), train[0][1]),
        ))
    psnr_in, ssim_in = _mean_metrics(held_out)
    psnr_out, ssim_out = _mean_metrics(held_out, kernel)
    report = MetricsReport(psnr_out, ssim_out, psnr_in, ssim_in, history, clock.trace)
    return kernel, report
