"""Guided Frequency Loss, its components, baselines and analytic gradient.

Every squared norm is a per-element mean over all pixels and channels, so
``epsilon`` keeps the same weight at any resolution:

    Ch_C    = mean((I_R - I_HQ)^2) + eps^2
    Pi_C    = mean((L I_R - L I_HQ)^2)        L = I - u(d(.)) (depth-1 Laplacian)
    Theta_C = mean((H I_R - H I_HQ)^2)        H = radial high-pass filter
    GFL     = sqrt(Ch_C + Pi_C + Theta_C)
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch
from .imagecore import as_grid
from .pyramid import laplacian_depth1, laplacian_depth1_adjoint
from .spectral import FrequencyMask, apply_highpass

DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class GflParams:
    """Loss configuration for one epoch.

    ``mask=None`` disables the gradual-frequency term (equivalent to an
    all-zero mask); ``include_pi=False`` drops the Laplacian term.
    """

    epsilon: float = DEFAULT_EPSILON
    mask: Optional[FrequencyMask] = None
    include_pi: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    ch_c: float
    pi_c: float
    theta_c: float
    total: float

    def as_row(self):
        return (self.ch_c, self.pi_c, self.theta_c, self.total)


def _pair(i_r, i_hq):
    a, b = as_grid(i_r), as_grid(i_hq)
    if a.shape != b.shape:
        raise DimensionMismatch("shapes %s and %s differ" % (a.shape, b.shape))
    return a, b


def _check_mask(mask, shape):
    if mask is not None and mask.values.shape != shape[:2]:
        raise DimensionMismatch("mask %s does not match images %s" % (mask.values.shape, shape[:2]))


def charbonnier_penalty(x, epsilon=DEFAULT_EPSILON):
    return np.sqrt(np.square(x) + epsilon**2)


def ch_component(i_r, i_hq, epsilon=DEFAULT_EPSILON):
    a, b = _pair(i_r, i_hq)
    return float(np.mean((a - b) ** 2)) + epsilon**2


def charbonnier_loss(i_r, i_hq, epsilon=DEFAULT_EPSILON):
    return math.sqrt(ch_component(i_r, i_hq, epsilon))


def pi_component(i_r, i_hq):
    a, b = _pair(i_r, i_hq)
    return float(np.mean((laplacian_depth1(a) - laplacian_depth1(b)) ** 2))


def theta_component(i_r, i_hq, mask):
    a, b = _pair(i_r, i_hq)
    if mask is None:
        return 0.0
    _check_mask(mask, a.shape)
    return float(np.mean((apply_highpass(a, mask) - apply_highpass(b, mask)) ** 2))


def mse_loss(i_r, i_hq):
    a, b = _pair(i_r, i_hq)
    return float(np.mean((a - b) ** 2))


def edge_loss(i_r, i_hq):
    """Laplacian-only baseline, sqrt(Pi_C)."""
    return math.sqrt(pi_component(i_r, i_hq))


def _residuals(a, b, params):
    diff = a - b
    d_pi = laplacian_depth1(a) - laplacian_depth1(b) if params.include_pi else None
    d_theta = None
    if params.mask is not None:
        _check_mask(params.mask, a.shape)
        d_theta = apply_highpass(a, params.mask) - apply_highpass(b, params.mask)
    return diff, d_pi, d_theta


def _compose(diff, d_pi, d_theta, epsilon):
    ch = float(np.mean(diff**2)) + epsilon**2
    pi = float(np.mean(d_pi**2)) if d_pi is not None else 0.0
    theta = float(np.mean(d_theta**2)) if d_theta is not None else 0.0
    return LossBreakdown(ch, pi, theta, math.sqrt(ch + pi + theta))


def gfl(i_r, i_hq, params=GflParams()):
    a, b = _pair(i_r, i_hq)
    return _compose(*_residuals(a, b, params), params.epsilon)


def gfl_value_and_gradient(i_r, i_hq, params=GflParams()):
    """Breakdown and dGFL/dI_R from one pass over the residuals.

    d/dx sqrt(S) = (dS/dx) / (2 sqrt(S)), with
    dS/dx = 2/P [diff + L^T(dPi) + H^T(dTheta)], P the element count.
    """
    a, b = _pair(i_r, i_hq)
    diff, d_pi, d_theta = _residuals(a, b, params)
    breakdown = _compose(diff, d_pi, d_theta, params.epsilon)
    acc = diff.copy()
    if d_pi is not None:
        acc += laplacian_depth1_adjoint(d_pi)
    if d_theta is not None:
        # the radial mask is real and point-symmetric, so H is self-adjoint
        acc += apply_highpass(d_theta, params.mask)
    return breakdown, acc / (diff.size * breakdown.total)


def gfl_gradient(i_r, i_hq, params=GflParams()):
    return gfl_value_and_gradient(i_r, i_hq, params)[1]


def mse_value_and_gradient(i_r, i_hq):
    a, b = _pair(i_r, i_hq)
    diff = a - b
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def charbonnier_value_and_gradient(i_r, i_hq, epsilon=DEFAULT_EPSILON):
    a, b = _pair(i_r, i_hq)
    diff = a - b
    value = math.sqrt(float(np.mean(diff**2)) + epsilon**2)
    return value, diff / (diff.size * value)


def edge_value_and_gradient(i_r, i_hq):
    a, b = _pair(i_r, i_hq)
    d_pi = laplacian_depth1(a) - laplacian_depth1(b)
    value = math.sqrt(float(np.mean(d_pi**2)))
    if value == 0.0:
        # sqrt is not differentiable at 0; the zero subgradient keeps descent stationary
        return 0.0, np.zeros_like(a)
    return value, laplacian_depth1_adjoint(d_pi) / (d_pi.size * value)
