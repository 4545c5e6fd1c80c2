"""Grünwald-Letnikov fractional differintegration on sampled signals.

The discrete differintegral of order mu over a uniform grid with step h is

    y_k = h**(-mu) * sum_{j=0..min(k, M-1)} w_j * f_{k-j}

with binomial weights w_j = (-1)**j * C(mu, j) and zero pre-history:
samples before the first one are taken as zero. Positive orders
differentiate, negative orders integrate, and M is the number of
retained weights (the full signal length by default).
"""

import math
from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal

# Lanczos approximation, g = 7, 9 coefficients. Relative error stays
# below 1e-13 on [0.5, 30], comfortably inside the 1e-12 target.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def _sin_pi(x: float) -> float:
    # sin(pi * x) with argument reduction done on x itself, so accuracy
    # does not degrade for large |x|.
    m = math.floor(x)
    r = x - m
    s = math.sin(math.pi * r)
    return -s if (m % 2) else s


def gamma(x: float) -> float:
    """Gamma function via the Lanczos approximation.

    Uses the reflection formula for x < 0.5. Raises ValueError at the
    poles (x a non-positive integer).
    """
    if math.isnan(x):
        raise ValueError("gamma is undefined for NaN")
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma pole at x = {x}")
    if x < 0.5:
        return math.pi / (_sin_pi(x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_TWO_PI * t ** (z + 0.5) * math.exp(-t) * acc


def gl_weights(order: float, count: int) -> np.ndarray:
    """First `count` Grünwald-Letnikov weights for a given order.

    w_0 = 1 and w_j = w_{j-1} * (1 - (order + 1) / j), which is the
    stable product form of (-1)**j * C(order, j).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not math.isfinite(order):
        raise ValueError(f"order must be finite, got {order}")
    w = np.empty(count)
    w[0] = 1.0
    if count > 1:
        j = np.arange(1, count, dtype=float)
        w[1:] = np.cumprod(1.0 - (order + 1.0) / j)
    return w


@dataclass(frozen=True)
class GlKernel:
    """Precomputed weight window for one (order, step) pair.

    memory_len is the number of retained weights; convolving the window
    with a signal and dividing by step**order realizes the truncated
    differintegral.
    """

    order: float
    step: float
    weights: np.ndarray
    memory_len: int

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.memory_len < 1:
            raise ValueError(f"memory_len must be >= 1, got {self.memory_len}")
        w = np.asarray(self.weights, dtype=float)
        if w.size != self.memory_len:
            raise ValueError("memory_len must match the number of weights")
        if w[0] != 1.0:
            raise ValueError("w_0 must be 1")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def make_kernel(order: float, step: float, memory_len: int) -> GlKernel:
    """Build a GlKernel with freshly computed weights."""
    return GlKernel(order=order, step=step,
                    weights=gl_weights(order, memory_len),
                    memory_len=memory_len)


def gl_apply(signal: SampledSignal, order: float,
             memory_len: int | str = "full") -> SampledSignal:
    """Apply the GL differintegral of a given order to a signal.

    Parameters
    ----------
    signal : SampledSignal
        Input samples; everything before the first sample is treated
        as zero.
    order : float
        Differintegration order. 0 is the identity, 1 the backward
        difference divided by the step, negative orders integrate.
    memory_len : int or "full", optional
        Number of most recent samples kept in the convolution window
        (short-memory principle). "full" keeps the whole history, which
        is what every reported result uses; a finite window trades
        accuracy for speed.

    Returns
    -------
    SampledSignal
        Differintegrated signal on the same grid.
    """
    n = len(signal)
    if memory_len == "full":
        count = n
    else:
        count = int(memory_len)
        if count < 1:
            raise ValueError(f"memory_len must be >= 1, got {memory_len}")
        count = min(count, n)
    w = gl_weights(order, count)
    # Direct convolution keeps order 0 an exact identity and order 1 an
    # exact backward difference; dividing by step**order (rather than
    # multiplying by the reciprocal) keeps the order-1 case bit-equal to
    # diff(f)/h.
    y = np.convolve(signal.values, w)[:n] / signal.step ** order
    if not np.all(np.isfinite(y)):
        raise ValueError(
            f"GL result overflowed: order {order} with step {signal.step} "
            "is ill-conditioned for this signal")
    return SampledSignal(step=signal.step, values=y, t0=signal.t0)
