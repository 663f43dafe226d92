"""Frequency band allocation for the gradual-frequency term.

The high-pass threshold starts at ``omega0`` and steps down by
``(omega0 - omega_f) / stages`` each time a stage trigger fires, landing
exactly on ``omega_f`` at the last stage, after which it is frozen.

Static triggers come in two readings:

* ``literal``: fire when ``epoch % stages == 0``.
* ``stage-interval``: fire every ``max(1, epochs // stages)`` epochs.

Dynamic mode fires when the loss fed for the epoch is below ``loss_threshold``.
Threshold arithmetic is exact (rationals), so fractional steps never
overshoot or trigger the final-stage clamp early through rounding.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .errors import EpochOutOfOrder, InvalidConfig
from .spectral import highpass_mask

MODES = ("static", "dynamic")
INTERPRETATIONS = ("literal", "stage-interval")


@dataclass(frozen=True)
class ScheduleConfig:
    omega0: float
    omega_f: float
    epochs: int
    stages: int
    mode: str = "static"
    loss_threshold: Optional[float] = None
    interpretation: str = "literal"

    def __post_init__(self):
        if not self.omega0 > self.omega_f >= 0:
            raise InvalidConfig("need omega0 > omegaF >= 0, got %r, %r" % (self.omega0, self.omega_f))
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidConfig("epochs must be a positive integer")
        if int(self.stages) != self.stages or self.stages < 1:
            raise InvalidConfig("stages must be a positive integer")
        if self.mode not in MODES:
            raise InvalidConfig("mode must be one of %s" % (MODES,))
        if self.interpretation not in INTERPRETATIONS:
            raise InvalidConfig("interpretation must be one of %s" % (INTERPRETATIONS,))
        if self.mode == "dynamic" and self.loss_threshold is None:
            raise InvalidConfig("dynamic mode needs loss_threshold")
        if self.mode == "static" and self.loss_threshold is not None:
            raise InvalidConfig("loss_threshold only applies to dynamic mode")

    @property
    def step(self):
        return (Fraction(self.omega0) - Fraction(self.omega_f)) / self.stages

    @property
    def trigger_period(self):
        if self.interpretation == "literal":
            return self.stages
        return max(1, self.epochs // self.stages)


@dataclass(frozen=True)
class ScheduleState:
    omega_prev: float
    epoch: int = 0
    frozen: bool = False
    stage: int = 0


def schedule_init(config):
    if not isinstance(config, ScheduleConfig):
        raise InvalidConfig("expected a ScheduleConfig")
    return ScheduleState(omega_prev=float(config.omega0))


def _triggered(config, epoch, loss):
    if config.mode == "static":
        return epoch % config.trigger_period == 0
    return loss is not None and loss < config.loss_threshold


def on_epoch(state, config, epoch, last_epoch_gfl=None):
    """Advance to ``epoch`` and return ``(new_state, threshold)``.

    The returned threshold is the one the epoch's filter should use. In
    dynamic mode ``last_epoch_gfl`` is the loss checked at this epoch
    boundary; None never triggers.
    """
    if epoch != state.epoch + 1:
        raise EpochOutOfOrder("expected epoch %d, got %d" % (state.epoch + 1, epoch))
    if state.frozen or not _triggered(config, epoch, last_epoch_gfl):
        new = replace(state, epoch=epoch)
        return new, new.omega_prev
    stage = state.stage + 1
    step = config.step
    omega = Fraction(config.omega0) - stage * step
    frozen = omega - Fraction(config.omega_f) < step
    if frozen:
        omega = Fraction(config.omega_f)
    new = ScheduleState(omega_prev=float(omega), epoch=epoch, frozen=frozen, stage=stage)
    return new, new.omega_prev


def trace(config, gfl_sequence=None):
    """Expand a full run: list of ``(epoch, threshold, frozen)``.

    ``gfl_sequence[i]`` is the loss checked at epoch ``i + 1`` (dynamic mode only).
    """
    if config.mode == "dynamic":
        if gfl_sequence is None or len(gfl_sequence) < config.epochs:
            raise InvalidConfig("dynamic trace needs one loss value per epoch")
    state = schedule_init(config)
    rows = []
    for epoch in range(1, config.epochs + 1):
        loss = gfl_sequence[epoch - 1] if config.mode == "dynamic" else None
        state, omega = on_epoch(state, config, epoch, loss)
        rows.append((epoch, omega, state.frozen))
    return rows


class BandScheduler:
    """Stateful driver that owns the schedule and publishes the current mask.

    Masks are rebuilt only when the threshold changes.
    """

    def __init__(self, config, height, width):
        self.config = config
        self.shape = (height, width)
        self.state = schedule_init(config)
        self._masks = {}
        self.mask = self._mask_for(self.state.omega_prev)

    def _mask_for(self, omega):
        if omega not in self._masks:
            self._masks[omega] = highpass_mask(self.shape[0], self.shape[1], omega)
        return self._masks[omega]

    @property
    def omega(self):
        return self.state.omega_prev

    @property
    def rebuilds(self):
        return len(self._masks)

    def advance(self, last_epoch_gfl=None):
        self.state, omega = on_epoch(self.state, self.config, self.state.epoch + 1, last_epoch_gfl)
        self.mask = self._mask_for(omega)
        return self.mask
