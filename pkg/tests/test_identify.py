"""Identification tests: cost, simplex search, fits, scans, sweeps."""

import math

import numpy as np
import pytest

import operfit as of


def quadratic(target):
    t = np.asarray(target, dtype=float)
    return lambda x: float(np.sum((x - t) ** 2))


class TestRmseCost:
    def test_identical_signals_cost_zero(self):
        s = of.SampledSignal(0.01, np.linspace(-1.0, 1.0, 50))
        assert of.rmse_cost(s, s) == 0.0

    def test_constant_offset(self):
        a = of.SampledSignal(0.01, np.zeros(64))
        b = of.SampledSignal(0.01, np.full(64, 0.25))
        assert of.rmse_cost(a, b) == pytest.approx(0.25, abs=1e-15)

    def test_sine_amplitude_gives_rms_over_sqrt2(self):
        # Whole periods on a uniform grid make the discrete RMS exact.
        t = np.arange(400) * 0.01
        a = of.SampledSignal(0.01, 1.7 * np.sin(2.0 * np.pi * t))
        b = of.SampledSignal(0.01, np.zeros(400))
        assert of.rmse_cost(a, b) == pytest.approx(
            1.7 / math.sqrt(2.0), abs=1e-9)

    def test_grid_mismatch_rejected(self):
        a = of.SampledSignal(0.01, np.zeros(10))
        with pytest.raises(ValueError):
            of.rmse_cost(a, of.SampledSignal(0.01, np.zeros(11)))
        with pytest.raises(ValueError):
            of.rmse_cost(a, of.SampledSignal(0.02, np.zeros(10)))


class TestSimplexConfig:
    @pytest.mark.parametrize("bad", [
        {"reflection": 0.0},
        {"expansion": 1.0},
        {"contraction": 1.0},
        {"shrink": 0.0},
        {"x_tol": 0.0},
        {"f_tol": -1.0},
        {"restarts": -1},
    ])
    def test_rejects_bad_settings(self, bad):
        with pytest.raises(ValueError):
            of.SimplexConfig(**bad)


class TestNelderMead:
    def test_quadratic_bowl(self):
        target = [3.0, -1.5, 0.25]
        result = of.nelder_mead(quadratic(target), [0.0, 0.0, 0.0])
        assert result.converged
        assert result.fx <= 1e-10
        assert np.allclose(result.x, target, atol=1e-4)

    def test_budget_exhaustion_reports_no_convergence(self):
        config = of.SimplexConfig(max_evals=4, restarts=0)
        result = of.nelder_mead(quadratic([5.0, 5.0, 5.0]),
                                [0.0, 0.0, 0.0], config)
        assert not result.converged
        assert result.evaluations <= 4

    def test_budget_below_simplex_size_rejected(self):
        with pytest.raises(ValueError):
            of.nelder_mead(quadratic([1.0, 1.0]), [0.0, 0.0],
                           of.SimplexConfig(max_evals=2))

    def test_trace_is_monotone_without_restarts(self):
        trace: list[float] = []
        of.nelder_mead(quadratic([2.0, -2.0]), [0.0, 0.0],
                       of.SimplexConfig(restarts=0), trace=trace)
        assert len(trace) > 3
        assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_nan_costs_are_treated_as_infinite(self):
        def fn(x):
            v = float(np.sum(x * x))
            return math.nan if v > 4.0 else v
        result = of.nelder_mead(fn, [1.0, 1.0])
        assert result.fx <= 1e-10

    @pytest.mark.parametrize("spread", [
        [0.1],                  # wrong shape
        [0.1, 0.0],             # nonpositive entry
        [0.1, math.inf],        # nonfinite entry
    ])
    def test_initial_spread_validation(self, spread):
        with pytest.raises(ValueError):
            of.nelder_mead(quadratic([1.0, 1.0]), [0.0, 0.0],
                           initial_spread=spread)

    def test_initial_spread_widens_the_first_simplex(self):
        seen: list[np.ndarray] = []

        def fn(x):
            seen.append(np.array(x))
            return float(np.sum(x * x))

        of.nelder_mead(fn, [1.0, 1.0],
                       of.SimplexConfig(max_evals=3, restarts=0),
                       initial_spread=[0.5, 2.0])
        assert np.allclose(seen[0], [1.0, 1.0])
        assert np.allclose(seen[1], [1.5, 1.0])
        assert np.allclose(seen[2], [1.0, 3.0])


class TestFit:
    def test_short_closed_loop_recovery(self, short_session):
        result = of.fit(short_session, "yp3",
                        config=of.SimplexConfig(max_evals=800))
        assert result.converged
        assert result.model_kind == "yp3"
        assert result.params["alpha"] == pytest.approx(-0.4101, abs=0.02)
        assert result.params["kp"] == pytest.approx(4.403, rel=0.02)
        assert result.params["delay"] == pytest.approx(0.117, abs=0.01)
        assert result.rmse <= 1e-4
        assert result.effective_step == short_session.step

    def test_open_loop_recovery(self):
        step, duration = 0.01, 12.0
        truth = of.GainLeadDelayModel(kp=2.0, zero=3.0, delay=0.15)
        e = of.generate_forcing(of.ForcingSpec.default(seed=3),
                                step, duration)
        c = of.operator_output(truth, e)
        session = of.Session(step=step, e=e, c=c)
        result = of.fit(session, "yp2", mode="open_loop", zero=3.0)
        assert result.converged
        assert result.params["kp"] == pytest.approx(2.0, rel=1e-3)
        assert result.params["zero"] == 3.0
        assert result.params["delay"] == pytest.approx(0.15, abs=0.01)
        assert result.rmse <= 1e-6

    def test_yp2_zero_defaults_to_plant_pole(self, short_session):
        result = of.fit(short_session, "yp2",
                        config=of.SimplexConfig(max_evals=300))
        assert result.params["zero"] == pytest.approx(3.0)

    def test_fixed_delay_is_echoed_not_searched(self, short_session):
        result = of.fit(short_session, "yp3", fix_delay=0.117,
                        config=of.SimplexConfig(max_evals=400))
        assert result.params["delay"] == 0.117
        assert result.converged

    def test_initial_overrides_accepted_unknown_rejected(
            self, short_session):
        config = of.SimplexConfig(max_evals=400)
        result = of.fit(short_session, "yp3", config=config,
                        initial={"alpha": -0.4, "kp": 4.0, "delay": 0.12})
        assert result.rmse <= 1e-4
        with pytest.raises(ValueError):
            of.fit(short_session, "yp3", initial={"gamma": 1.0})

    def test_closed_loop_needs_a_plant(self, short_session):
        bare = of.Session(step=short_session.step, i=short_session.i,
                          m=short_session.m)
        with pytest.raises(ValueError):
            of.fit(bare, "yp3")

    def test_closed_loop_needs_i_and_m(self, short_session, plant_velocity):
        partial = of.Session(step=short_session.step, i=short_session.i)
        with pytest.raises(ValueError):
            of.fit(partial, "yp3", plant_velocity)

    def test_open_loop_needs_e_and_c(self, short_session):
        with pytest.raises(ValueError):
            of.fit(of.Session(step=0.01, e=of.SampledSignal(0.01,
                                                            np.zeros(10))),
                   "yp2", mode="open_loop", zero=3.0)

    def test_unknown_model_kind(self, short_session):
        with pytest.raises(ValueError):
            of.fit(short_session, "yp9")

    def test_negative_fixed_delay(self, short_session):
        with pytest.raises(ValueError):
            of.fit(short_session, "yp3", fix_delay=-0.1)

    def test_unknown_mode(self, short_session):
        with pytest.raises(ValueError):
            of.fit(short_session, "yp3", mode="sideways")

    def test_all_divergent_cells_return_inf_sentinel(self, short_session):
        result = of.fit(short_session, "yp3", stability_bound=1e-12,
                        config=of.SimplexConfig(max_evals=60))
        assert math.isinf(result.rmse)
        assert not result.converged


class TestScan:
    def test_tiny_grid_locates_the_basin(self, short_session, tmp_path):
        grid = of.scan_alpha_delay_kp(
            short_session,
            alpha_values=[-0.6, -0.4, -0.2],
            delay_values=[0.117],
            kp_values=[4.403])
        assert grid.rmse.shape == (3, 1, 1)
        assert np.all(np.isfinite(grid.rmse))
        best = grid.argmin()
        assert best["alpha"] == pytest.approx(-0.4)
        assert best["rmse"] == grid.rmse.min()

        path = of.write_scan_grid(grid, str(tmp_path / "grid.csv"))
        table = of.read_table_csv(path)
        assert list(table) == ["alpha", "delay", "kp", "rmse"]
        assert np.array_equal(table["rmse"], grid.rmse.ravel())

    def test_parallel_scan_matches_serial(self, short_session):
        kwargs = dict(alpha_values=[-0.5, -0.3], delay_values=[0.1],
                      kp_values=[4.0])
        serial = of.scan_alpha_delay_kp(short_session, **kwargs)
        parallel = of.scan_alpha_delay_kp(short_session, jobs=2, **kwargs)
        assert np.array_equal(serial.rmse, parallel.rmse)

    def test_divergent_cells_carry_inf(self, short_session):
        grid = of.scan_alpha_delay_kp(
            short_session, alpha_values=[-0.4], delay_values=[0.3],
            kp_values=[50.0])
        assert np.isinf(grid.rmse).all()

    def test_scan_needs_signals_and_plant(self, short_session):
        partial = of.Session(step=short_session.step, i=short_session.i)
        with pytest.raises(ValueError):
            of.scan_alpha_delay_kp(partial)
        bare = of.Session(step=short_session.step, i=short_session.i,
                          m=short_session.m)
        with pytest.raises(ValueError):
            of.scan_alpha_delay_kp(bare)

    def test_grid_shape_and_sign_validation(self):
        axes = {"alpha": np.array([0.0, 1.0])}
        with pytest.raises(ValueError):
            of.ScanGrid(axes=axes, rmse=np.zeros(3))
        with pytest.raises(ValueError):
            of.ScanGrid(axes=axes, rmse=np.array([0.1, -0.1]))
        grid = of.ScanGrid(axes=axes, rmse=np.array([np.inf, 0.5]))
        assert grid.argmin() == {"alpha": 1.0, "rmse": 0.5}


class TestSweep:
    def test_two_point_sweep(self, short_session, tmp_path):
        results = of.sweep_delay(short_session, "yp3",
                                 delay_values=[0.10, 0.12])
        assert [r.params["delay"] for r in results] == [0.10, 0.12]
        assert all(r.converged for r in results)
        # 0.12 rounds to the same sample count as the true 0.117 dead
        # time, so it must beat 0.10.
        assert results[1].rmse < results[0].rmse

        path = of.write_sweep_results(results, str(tmp_path / "sweep.csv"))
        table = of.read_table_csv(path)
        assert list(table) == ["delay", "alpha", "kp", "rmse",
                               "evaluations", "converged"]
        assert np.array_equal(table["delay"], [0.10, 0.12])
        assert np.array_equal(table["converged"], [1.0, 1.0])

    def test_empty_sweep_table_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            of.write_sweep_results([], str(tmp_path / "none.csv"))


class TestReportFiles:
    def test_round_trip(self, tmp_path):
        result = of.FitResult(model_kind="yp3",
                              params={"alpha": -0.41, "kp": 4.4,
                                      "delay": 0.117},
                              rmse=1.5e-8, evaluations=564,
                              converged=True, effective_step=0.01)
        path = of.write_fit_report(result, str(tmp_path / "fit.json"))
        assert of.read_fit_report(path) == result

    def test_inf_rmse_round_trips_through_null(self, tmp_path):
        result = of.FitResult(model_kind="yp2",
                              params={"kp": 1.0, "zero": 3.0,
                                      "delay": 0.1},
                              rmse=math.inf, evaluations=60,
                              converged=False, effective_step=0.01)
        path = of.write_fit_report(result, str(tmp_path / "fit.json"))
        back = of.read_fit_report(path)
        assert math.isinf(back.rmse)
        assert back.converged is False

    def test_empty_table_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(ValueError):
            of.read_table_csv(str(empty))
