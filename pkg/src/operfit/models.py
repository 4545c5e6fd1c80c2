"""Operator models, the controlled-element plant, and their discrete forms.

Three operator structures map tracking error e to control output c:

* QuasiLinearModel:   c = kp * (tl*s + 1)/((ti*s + 1)(tn*s + 1)) e^(-L s) e
* GainLeadDelayModel: c = kp * (s + zero) e^(-L s) e
* FractionalModel:    c = kp * e^(-L s) / s**alpha e   (alpha < 0
  differentiates with order -alpha)

The plant is a rate-command element gain / (s * (tau*s + 1)). All
discrete realizations share one set of conventions: numerator `s` terms
are backward differences with zero pre-history, first-order lags and the
plant are discretized exactly under a zero-order hold, and the dead time
is a whole number of samples (delay rounded to the nearest multiple of
the step).
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fractional import gl_apply, gl_weights
from .signals import SampledSignal


@dataclass(frozen=True)
class QuasiLinearModel:
    """Gain, lead-lag, neuromuscular lag, and dead time."""

    kp: float
    tl: float
    ti: float
    tn: float
    delay: float

    def __post_init__(self):
        if self.kp <= 0.0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        for name in ("tl", "ti", "tn"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.delay < 0.0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class GainLeadDelayModel:
    """Gain, first-order zero, and dead time: kp * (s + zero) * e^(-L s)."""

    kp: float
    zero: float
    delay: float

    def __post_init__(self):
        if self.kp <= 0.0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        if self.zero <= 0.0:
            raise ValueError(f"zero must be positive, got {self.zero}")
        if self.delay < 0.0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class FractionalModel:
    """Gain, fractional differintegrator 1/s**alpha, and dead time."""

    kp: float
    alpha: float
    delay: float

    def __post_init__(self):
        if self.kp <= 0.0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        if not -2.0 <= self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in [-2, 2], got {self.alpha}")
        if self.delay < 0.0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


OperatorModel = Union[QuasiLinearModel, GainLeadDelayModel, FractionalModel]


@dataclass(frozen=True)
class PlantModel:
    """Rate-command controlled element gain / (s * (tau*s + 1))."""

    gain: float
    tau: float

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


# Plant presets used throughout: a unit-gain element with a 1/3 s lag,
# and the rate-command stick/display element 60.2362 / (s (s + 39.37)).
PLANT_PRESETS = {
    "paper-eq6": PlantModel(gain=1.0, tau=1.0 / 3.0),
    "paper-eq13": PlantModel(gain=60.2362 / 39.37, tau=1.0 / 39.37),
}


@dataclass(frozen=True)
class PlantState:
    """Plant state: output position and its rate."""

    position: float = 0.0
    velocity: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.position) and math.isfinite(self.velocity)):
            raise ValueError("plant state must be finite")


def plant_zoh_coefficients(plant: PlantModel, step: float):
    """Exact zero-order-hold update coefficients for the plant.

    With E = exp(-step/tau) the state advances as

        position' = position + a12 * velocity + b1 * u
        velocity' =               a22 * velocity + b2 * u

    where (a12, a22, b1, b2) are the values returned here.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    decay = math.exp(-step / plant.tau)
    a12 = plant.tau * (1.0 - decay)
    b1 = plant.gain * (step - a12)
    b2 = plant.gain * (1.0 - decay)
    return a12, decay, b1, b2


def plant_step(plant: PlantModel, state: PlantState, control: float,
               step: float) -> PlantState:
    """Advance the plant one step with the control held constant."""
    a12, a22, b1, b2 = plant_zoh_coefficients(plant, step)
    return PlantState(
        position=state.position + a12 * state.velocity + b1 * control,
        velocity=a22 * state.velocity + b2 * control,
    )


def quantize_delay(delay: float, step: float) -> int:
    """Dead time as a whole number of samples (nearest, half away up).

    The effective delay actually realized is the returned count times
    the step.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if delay < 0.0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    return int(math.floor(delay / step + 0.5))


def delay_line(signal: SampledSignal, delay: float) -> SampledSignal:
    """Shift a signal right by the quantized delay, zero-filling the head."""
    shift = quantize_delay(delay, signal.step)
    n = len(signal)
    out = np.zeros(n)
    if shift < n:
        out[shift:] = signal.values[:n - shift]
    return SampledSignal(step=signal.step, values=out, t0=signal.t0)


def _backward_difference(values: np.ndarray, step: float) -> np.ndarray:
    # Zero pre-history: the first difference is taken against 0.
    out = np.empty_like(values)
    out[0] = values[0] / step
    out[1:] = np.diff(values) / step
    return out


def _zoh_lag(values: np.ndarray, step: float, tau: float) -> np.ndarray:
    # Exact ZOH first-order lag 1/(tau*s + 1); the state is read before
    # each update, so the section output leads off at zero. tau == 0
    # degenerates to a pass-through.
    if tau == 0.0:
        return values.copy()
    decay = math.exp(-step / tau)
    gain = 1.0 - decay
    out = np.empty_like(values)
    state = 0.0
    for k in range(values.size):
        out[k] = state
        state = decay * state + gain * values[k]
    return out


def operator_output(model: OperatorModel,
                    error: SampledSignal) -> SampledSignal:
    """Operator response to an error signal, open loop.

    The whole error history is known in advance here; the closed-loop
    simulator realizes the same maps sample by sample.
    """
    if isinstance(model, FractionalModel):
        diff = gl_apply(error, -model.alpha, "full")
        delayed = delay_line(diff, model.delay)
        return SampledSignal(error.step, model.kp * delayed.values, error.t0)
    if isinstance(model, GainLeadDelayModel):
        shaped = _backward_difference(error.values, error.step) \
            + model.zero * error.values
        delayed = delay_line(SampledSignal(error.step, shaped, error.t0),
                             model.delay)
        return SampledSignal(error.step, model.kp * delayed.values, error.t0)
    if isinstance(model, QuasiLinearModel):
        lead = error.values + model.tl * _backward_difference(error.values,
                                                              error.step)
        lagged = _zoh_lag(_zoh_lag(lead, error.step, model.ti),
                          error.step, model.tn)
        delayed = delay_line(SampledSignal(error.step, lagged, error.t0),
                             model.delay)
        return SampledSignal(error.step, model.kp * delayed.values, error.t0)
    raise TypeError(f"unknown operator model {type(model).__name__}")


class _FractionalStepper:
    """Per-sample form of FractionalModel for the closed-loop simulator."""

    def __init__(self, model: FractionalModel, step: float, n_max: int):
        self._kp = model.kp
        self._shift = quantize_delay(model.delay, step)
        mu = -model.alpha
        # Weights stored reversed so each step's dot runs over two
        # contiguous slices.
        self._wrev = gl_weights(mu, n_max)[::-1].copy()
        self._hpow = step ** mu
        self._history = np.zeros(n_max)
        self._n_max = n_max
        self._k = 0

    def step(self, error_k: float) -> float:
        k = self._k
        self._history[k] = error_k
        self._k = k + 1
        j = k - self._shift
        if j < 0:
            return 0.0
        acc = np.dot(self._history[:j + 1], self._wrev[self._n_max - 1 - j:])
        return self._kp * (acc / self._hpow)


class _GainLeadDelayStepper:
    """Per-sample form of GainLeadDelayModel."""

    def __init__(self, model: GainLeadDelayModel, step: float, n_max: int):
        self._kp = model.kp
        self._zero = model.zero
        self._step = step
        self._shift = quantize_delay(model.delay, step)
        self._pre_delay = np.zeros(n_max)
        self._prev = 0.0
        self._k = 0

    def step(self, error_k: float) -> float:
        k = self._k
        diff = (error_k - self._prev) / self._step
        self._prev = error_k
        self._pre_delay[k] = self._kp * (diff + self._zero * error_k)
        self._k = k + 1
        j = k - self._shift
        return self._pre_delay[j] if j >= 0 else 0.0


class _QuasiLinearStepper:
    """Per-sample form of QuasiLinearModel."""

    def __init__(self, model: QuasiLinearModel, step: float, n_max: int):
        self._kp = model.kp
        self._tl = model.tl
        self._step = step
        self._shift = quantize_delay(model.delay, step)
        self._decay_i = math.exp(-step / model.ti) if model.ti > 0.0 else None
        self._decay_n = math.exp(-step / model.tn) if model.tn > 0.0 else None
        self._x_i = 0.0
        self._x_n = 0.0
        self._pre_delay = np.zeros(n_max)
        self._prev = 0.0
        self._k = 0

    def step(self, error_k: float) -> float:
        k = self._k
        lead = error_k + self._tl * (error_k - self._prev) / self._step
        self._prev = error_k
        if self._decay_i is None:
            y1 = lead
        else:
            y1 = self._x_i
            self._x_i = self._decay_i * self._x_i \
                + (1.0 - self._decay_i) * lead
        if self._decay_n is None:
            y2 = y1
        else:
            y2 = self._x_n
            self._x_n = self._decay_n * self._x_n + (1.0 - self._decay_n) * y1
        self._pre_delay[k] = self._kp * y2
        self._k = k + 1
        j = k - self._shift
        return self._pre_delay[j] if j >= 0 else 0.0


def make_operator_stepper(model: OperatorModel, step: float, n_max: int):
    """Per-sample realization of an operator for at most n_max steps."""
    if isinstance(model, FractionalModel):
        return _FractionalStepper(model, step, n_max)
    if isinstance(model, GainLeadDelayModel):
        return _GainLeadDelayStepper(model, step, n_max)
    if isinstance(model, QuasiLinearModel):
        return _QuasiLinearStepper(model, step, n_max)
    raise TypeError(f"unknown operator model {type(model).__name__}")
