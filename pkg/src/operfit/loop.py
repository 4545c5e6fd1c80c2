"""Closed-loop compensatory tracking simulation and forcing functions.

The loop is the standard compensatory arrangement: the display shows
only the error e = i - m between the forcing input i and the plant
output m, the operator turns the error history into a control c, and
the control drives the plant under a zero-order hold. Per sample k:

    m_k  from the plant state
    e_k  = i_k - m_k
    c_k  = operator(e_0 .. e_k)
    advance the plant with c_k held over [t_k, t_{k+1})

The operator's dead time (at least one sample in every configuration of
interest) plus the strictly proper plant keep the loop causal.
"""

import math
from dataclasses import dataclass

import numpy as np

from .models import (OperatorModel, PlantModel, make_operator_stepper,
                     plant_zoh_coefficients)
from .sessions import Session, SessionMeta
from .signals import SampledSignal


class UnstableLoopError(RuntimeError):
    """The simulated loop diverged."""

    def __init__(self, step_index: int, magnitude: float, bound: float):
        super().__init__(
            f"unstable loop: |m| = {magnitude:.3e} exceeded {bound:.3e} "
            f"at step {step_index}")
        self.step_index = step_index
        self.magnitude = magnitude


@dataclass(frozen=True)
class LoopConfig:
    """One closed-loop run: who tracks, what they drive, and how long."""

    operator: OperatorModel
    plant: PlantModel
    step: float = 0.01
    duration: float = 60.0

    def __post_init__(self):
        if not np.isfinite(self.step) or self.step <= 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.duration < self.step:
            raise ValueError(
                f"duration {self.duration} shorter than one step")


@dataclass(frozen=True)
class ForcingSpec:
    """Sum-of-sinusoids forcing: components are (amplitude, rad/s, phase).

    Frequencies must be positive and pairwise distinct. The stock
    construction (`ForcingSpec.default`) picks prime multiples of one
    cycle per `period` seconds, so no component is a harmonic or a
    low-order combination of another and the signal looks unpredictable
    over a whole recording.
    """

    components: tuple[tuple[float, float, float], ...]
    seed: int = 0

    def __post_init__(self):
        comps = tuple(
            (float(a), float(w), float(p)) for a, w, p in self.components)
        if not comps:
            raise ValueError("forcing needs at least one component")
        freqs = [w for _, w, _ in comps]
        if any(w <= 0.0 for w in freqs):
            raise ValueError("forcing frequencies must be positive")
        if len(set(freqs)) != len(freqs):
            raise ValueError("forcing frequencies must be pairwise distinct")
        object.__setattr__(self, "components", comps)

    @classmethod
    def default(cls, seed: int = 0, n_components: int = 10,
                freq_lo: float = 0.1, freq_hi: float = 2.0,
                period: float = 120.0, rms: float = 1.0) -> "ForcingSpec":
        """Random-appearing forcing with seeded phases.

        Frequencies are distinct prime multiples of 2*pi/period nearest
        the log-spaced targets in [freq_lo, freq_hi]; every component
        completes whole cycles over one period, so the mean over a
        period vanishes. Amplitudes fall off as 1/frequency, scaled to
        the requested RMS.
        """
        if n_components < 1:
            raise ValueError("need at least one component")
        if not 0.0 < freq_lo < freq_hi:
            raise ValueError("need 0 < freq_lo < freq_hi")
        fundamental = 2.0 * math.pi / period
        targets = np.logspace(math.log10(freq_lo), math.log10(freq_hi),
                              n_components) / fundamental
        multiples = _nearest_distinct_primes(targets)
        freqs = fundamental * np.asarray(multiples, dtype=float)
        raw = 1.0 / freqs
        scale = rms / math.sqrt(float(np.sum(raw ** 2)) / 2.0)
        amps = scale * raw
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2.0 * math.pi, n_components)
        comps = tuple(
            (float(a), float(w), float(p))
            for a, w, p in zip(amps, freqs, phases))
        return cls(components=comps, seed=seed)


def _nearest_distinct_primes(targets: np.ndarray) -> list[int]:
    """Nearest unused prime to each target, first come first served."""
    limit = max(64, int(2 * max(targets)) + 64)
    sieve = np.ones(limit, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    primes = np.flatnonzero(sieve)
    taken: set[int] = set()
    out = []
    for t in targets:
        order = np.argsort(np.abs(primes - t), kind="stable")
        pick = next(int(primes[i]) for i in order
                    if int(primes[i]) not in taken)
        taken.add(pick)
        out.append(pick)
    return out


def generate_forcing(spec: ForcingSpec, step: float,
                     duration: float) -> SampledSignal:
    """Synthesize the forcing signal on a uniform grid.

    The grid holds round(duration / step) samples starting at t = 0,
    endpoint excluded, so a duration equal to the construction period
    covers each component's cycles exactly.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    n = int(round(duration / step))
    if n < 1:
        raise ValueError(
            f"duration {duration} too short for step {step}")
    t = step * np.arange(n)
    total = np.zeros(n)
    for amp, freq, phase in spec.components:
        total += amp * np.sin(freq * t + phase)
    return SampledSignal(step=step, values=total, t0=0.0)


def simulate(config: LoopConfig, input_i: SampledSignal, *,
             stability_bound: float = 1e6) -> Session:
    """Run the closed loop and return the full session.

    The input must be sampled at the loop step and cover the duration.
    Raises UnstableLoopError naming the first step at which |m| reaches
    `stability_bound` or stops being finite. Output is a pure function
    of the arguments.
    """
    if input_i.step != config.step:
        raise ValueError(
            f"input step {input_i.step} != loop step {config.step}")
    n = int(round(config.duration / config.step))
    if len(input_i) < n:
        raise ValueError(
            f"input covers {len(input_i)} samples, need {n}")
    step = config.step
    i_vals = input_i.values[:n]
    i_list = i_vals.tolist()

    stepper = make_operator_stepper(config.operator, step, n)
    a12, a22, b1, b2 = plant_zoh_coefficients(config.plant, step)

    e_arr = np.empty(n)
    c_arr = np.empty(n)
    m_arr = np.empty(n)
    pos = 0.0
    vel = 0.0
    for k in range(n):
        m_k = pos
        # Strict comparison so NaN and infinities always trip, even
        # against an infinite bound.
        if not abs(m_k) < stability_bound:
            raise UnstableLoopError(k, m_k, stability_bound)
        e_k = i_list[k] - m_k
        c_k = stepper.step(e_k)
        m_arr[k] = m_k
        e_arr[k] = e_k
        c_arr[k] = c_k
        pos = pos + a12 * vel + b1 * c_k
        vel = a22 * vel + b2 * c_k

    t0 = input_i.t0
    meta = SessionMeta(plant=config.plant, source="synthetic")
    return Session(
        step=step,
        i=SampledSignal(step, i_vals, t0),
        e=SampledSignal(step, e_arr, t0),
        c=SampledSignal(step, c_arr, t0),
        m=SampledSignal(step, m_arr, t0),
        meta=meta)
