"""SampledSignal construction rules and resampling."""

import numpy as np
import pytest

from operfit import SampledSignal, resample


class TestConstruction:
    def test_basic_fields(self):
        s = SampledSignal(step=0.5, values=np.array([1.0, 2.0, 3.0]))
        assert len(s) == 3
        assert s.duration == pytest.approx(1.5)
        assert np.allclose(s.times, [0.0, 0.5, 1.0])

    def test_t0_offsets_the_grid(self):
        s = SampledSignal(step=0.5, values=np.zeros(3), t0=2.0)
        assert np.allclose(s.times, [2.0, 2.5, 3.0])

    def test_values_are_copied_and_read_only(self):
        source = np.array([1.0, 2.0])
        s = SampledSignal(step=1.0, values=source)
        source[0] = 99.0
        assert s.values[0] == 1.0
        with pytest.raises(ValueError):
            s.values[0] = 0.0

    def test_integer_input_becomes_float(self):
        s = SampledSignal(step=1.0, values=np.array([1, 2, 3]))
        assert s.values.dtype == np.float64

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            SampledSignal(step=0.0, values=np.ones(2))
        with pytest.raises(ValueError):
            SampledSignal(step=-0.1, values=np.ones(2))

    def test_values_must_be_1d_nonempty_finite(self):
        with pytest.raises(ValueError):
            SampledSignal(step=1.0, values=np.ones((2, 2)))
        with pytest.raises(ValueError):
            SampledSignal(step=1.0, values=np.array([]))
        with pytest.raises(ValueError):
            SampledSignal(step=1.0, values=np.array([1.0, np.nan]))
        with pytest.raises(ValueError):
            SampledSignal(step=1.0, values=np.array([1.0, np.inf]))


class TestResample:
    def test_same_step_returns_the_signal(self):
        s = SampledSignal(step=0.1, values=np.arange(5.0))
        assert resample(s, 0.1) is s

    def test_linear_signal_is_reproduced_exactly(self):
        t = 0.25 * np.arange(9)
        s = SampledSignal(step=0.25, values=3.0 * t + 1.0)
        fine = resample(s, 0.05)
        assert np.allclose(fine.values, 3.0 * fine.times + 1.0,
                           atol=1e-12)

    def test_sine_refinement_error_bound(self):
        # Linear interpolation of sin(t): error is at most (w h)^2 / 8.
        h = 0.02
        t = h * np.arange(501)
        s = SampledSignal(step=h, values=np.sin(t))
        fine = resample(s, 0.01)
        err = np.max(np.abs(fine.values - np.sin(fine.times)))
        assert err <= (1.0 * h) ** 2 / 8.0

    def test_coarsening_keeps_the_grid_inside_the_span(self):
        s = SampledSignal(step=0.1, values=np.arange(11.0))
        coarse = resample(s, 0.3)
        assert coarse.step == 0.3
        assert coarse.times[-1] <= s.times[-1] + 1e-12

    def test_t0_is_preserved(self):
        s = SampledSignal(step=0.1, values=np.arange(6.0), t0=1.0)
        out = resample(s, 0.05)
        assert out.t0 == 1.0

    def test_new_step_must_be_positive(self):
        s = SampledSignal(step=0.1, values=np.arange(4.0))
        with pytest.raises(ValueError):
            resample(s, 0.0)
