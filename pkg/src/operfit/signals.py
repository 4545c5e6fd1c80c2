"""Uniformly sampled signals and resampling."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SampledSignal:
    """A finite, uniformly sampled real-valued time series.

    Parameters
    ----------
    step : float
        Sample interval in seconds, strictly positive.
    values : array_like
        Sample values. Copied to a read-only float64 array; every entry
        must be finite.
    t0 : float, optional
        Time of the first sample (default 0).
    """

    step: float
    values: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.step) or self.step <= 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        # Shared freely between threads: no mutation after construction.
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        """Sample times t0 + k * step."""
        return self.t0 + self.step * np.arange(self.values.size)

    @property
    def duration(self) -> float:
        """Span covered by the samples, counting one step per sample."""
        return self.step * self.values.size


def resample(signal: SampledSignal, new_step: float) -> SampledSignal:
    """Linearly interpolate a signal onto a new uniform grid.

    The new grid starts at the same t0 and spans the same interval; the
    last new sample does not run past the last original sample. Exact on
    ramps; a no-op when new_step equals the original step.
    """
    if not np.isfinite(new_step) or new_step <= 0.0:
        raise ValueError(f"new_step must be positive, got {new_step}")
    if new_step == signal.step:
        return signal
    t_end = signal.t0 + signal.step * (len(signal) - 1)
    # Tiny relative slack so an endpoint that lands on the grid survives
    # float rounding.
    n_new = int(np.floor((t_end - signal.t0) / new_step * (1.0 + 1e-12))) + 1
    new_times = signal.t0 + new_step * np.arange(n_new)
    new_values = np.interp(new_times, signal.times, signal.values)
    return SampledSignal(step=new_step, values=new_values, t0=signal.t0)
