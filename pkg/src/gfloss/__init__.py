"""Guided Frequency Loss for image restoration, with a desk-scale experiment harness."""

__version__ = "0.1.0"

from .imagecore import Image, load_image, save_image  # noqa: E402
from .loss import GflParams, LossBreakdown, gfl, gfl_gradient  # noqa: E402
from .scheduler import ScheduleConfig, trace  # noqa: E402

__all__ = [
    "Image",
    "load_image",
    "save_image",
    "GflParams",
    "LossBreakdown",
    "gfl",
    "gfl_gradient",
    "ScheduleConfig",
    "trace",
]
