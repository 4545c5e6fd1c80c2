"""Command-line interface tests.

Everything runs in-process through main(argv) so exit codes and stdout
are asserted directly; one subprocess test proves the module entry
point works end to end.
"""

import argparse
import os
import subprocess
import sys

import numpy as np
import pytest

import operfit as of
from operfit.cli import _merge_negative_values, _parse_values, main


def lines_of(capsys) -> list[str]:
    return capsys.readouterr().out.strip().split("\n")


def kv(lines: list[str]) -> dict[str, str]:
    pairs = {}
    for line in lines:
        for token in line.split():
            name, _, value = token.partition("=")
            pairs[name] = value
    return pairs


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def sim_base(workdir):
    """An 8 s closed-loop run whose truth is kp=2, alpha=-0.5, L=0.15."""
    base = str(workdir / "demo")
    code = main(["simulate", "--kp", "2", "--L", "0.15",
                 "--duration", "8", "--out", base,
                 "--created-at", "2024-05-01T00:00:00Z"])
    assert code == 0
    return base


@pytest.fixture(scope="module")
def fit_report(sim_base, workdir):
    out = str(workdir / "demo-fit.json")
    code = main(["fit", "--session", sim_base, "--model", "yp3",
                 "--out", out])
    assert code == 0
    return out


class TestArgvHelpers:
    def test_negative_values_are_glued_to_their_flag(self):
        assert _merge_negative_values(
            ["--alpha", "-0.5", "--kp", "2"]) == ["--alpha=-0.5",
                                                  "--kp", "2"]
        assert _merge_negative_values(
            ["--alpha", "-0.6:0.1:-0.2"]) == ["--alpha=-0.6:0.1:-0.2"]
        assert _merge_negative_values(
            ["--L", "-0.3", "--fix-L", "-1"]) == ["--L=-0.3", "--fix-L=-1"]

    def test_non_numeric_dashes_are_left_alone(self):
        assert _merge_negative_values(
            ["--alpha", "--kp"]) == ["--alpha", "--kp"]
        assert _merge_negative_values(["--alpha"]) == ["--alpha"]

    def test_value_ranges(self):
        assert _parse_values("1:0.5:2") == pytest.approx([1.0, 1.5, 2.0])
        assert _parse_values("-0.6:0.1:-0.2") == pytest.approx(
            [-0.6, -0.5, -0.4, -0.3, -0.2])
        assert _parse_values("1,2,3") == [1.0, 2.0, 3.0]
        assert _parse_values("0.7") == [0.7]

    @pytest.mark.parametrize("bad", ["1:2", "1:0:2", "2:1:1", "abc"])
    def test_bad_value_ranges(self, bad):
        with pytest.raises(argparse.ArgumentTypeError):
            _parse_values(bad)


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert main([]) == 2

    def test_unknown_flag(self, capsys):
        assert main(["simulate", "--out", "x", "--bogus", "1"]) == 2

    def test_simulate_needs_out(self, capsys):
        assert main(["simulate"]) == 2

    def test_zero_duration(self, tmp_path, capsys):
        assert main(["simulate", "--duration", "0",
                     "--out", str(tmp_path / "x")]) == 2

    def test_half_a_custom_plant(self, tmp_path, capsys):
        assert main(["simulate", "--plant-gain", "2",
                     "--out", str(tmp_path / "x")]) == 2

    def test_missing_session_file(self, tmp_path, capsys):
        assert main(["fit", "--session", str(tmp_path / "absent"),
                     "--model", "yp3"]) == 2

    def test_bad_init_entry(self, sim_base, capsys):
        assert main(["fit", "--session", sim_base, "--model", "yp3",
                     "--init", "kp"]) == 2
        assert main(["fit", "--session", sim_base, "--model", "yp3",
                     "--init", "kp=fast"]) == 2

    def test_report_with_nothing_to_render(self, tmp_path, capsys):
        assert main(["report", "--out-dir", str(tmp_path)]) == 2


class TestSimulate:
    def test_writes_session_and_summary(self, sim_base):
        session = of.read_session(sim_base)
        assert len(session) == 800
        assert session.meta.plant == of.PLANT_PRESETS["paper-eq6"]
        assert session.validate() == []

    def test_byte_identical_reruns(self, workdir, capsys):
        args = ["simulate", "--duration", "2", "--forcing-seed", "5",
                "--created-at", "2024-01-01T00:00:00Z"]
        a, b = str(workdir / "rerun_a"), str(workdir / "rerun_b")
        assert main(args + ["--out", a]) == 0
        assert main(args + ["--out", b]) == 0
        for ext in (".csv", ".json"):
            with open(a + ext, "rb") as fa, open(b + ext, "rb") as fb:
                assert fa.read() == fb.read()

    def test_dead_time_flag_aliases_agree(self, workdir, capsys):
        short = str(workdir / "alias_l")
        long = str(workdir / "alias_delay")
        assert main(["simulate", "--L", "0.2", "--duration", "2",
                     "--out", short]) == 0
        assert main(["simulate", "--delay", "0.2", "--duration", "2",
                     "--out", long]) == 0
        with open(short + ".csv", "rb") as fa, \
                open(long + ".csv", "rb") as fb:
            assert fa.read() == fb.read()

    def test_divergent_loop_exits_3(self, tmp_path, capsys):
        code = main(["simulate", "--kp", "50", "--L", "0.3",
                     "--duration", "10", "--out", str(tmp_path / "boom")])
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_input_session_is_resampled_with_a_note(self, workdir,
                                                    capsys):
        src = str(workdir / "coarse")
        assert main(["forcing", "--step", "0.02", "--duration", "4",
                     "--out", src]) == 0
        out = str(workdir / "fine")
        code = main(["simulate", "--input", src, "--step", "0.01",
                     "--duration", "3.5", "--out", out])
        assert code == 0
        assert "resampling" in capsys.readouterr().err
        assert len(of.read_session(out)) == 350

    def test_input_too_short_is_a_usage_error(self, workdir, capsys):
        src = str(workdir / "tiny")
        assert main(["forcing", "--step", "0.01", "--duration", "1",
                     "--out", src]) == 0
        assert main(["simulate", "--input", src, "--duration", "2",
                     "--out", str(workdir / "never")]) == 2


class TestFit:
    def test_summary_line_and_report(self, sim_base, fit_report, capsys):
        result = of.read_fit_report(fit_report)
        assert result.converged
        assert result.params["kp"] == pytest.approx(2.0, rel=0.02)
        assert result.params["alpha"] == pytest.approx(-0.5, abs=0.02)
        assert result.params["delay"] == pytest.approx(0.15, abs=0.01)

    def test_one_line_summary_format(self, sim_base, workdir, capsys):
        out = str(workdir / "quick-fit.json")
        code = main(["fit", "--session", sim_base, "--model", "yp3",
                     "--init", "kp=2,alpha=-0.5,delay=0.15",
                     "--max-evals", "600", "--out", out])
        lines = lines_of(capsys)
        assert code == 0
        first = lines[0].split()
        assert first[0] == "model=yp3"
        assert first[1].startswith("rmse=")
        assert [t.split("=")[0] for t in first[2:]] == ["alpha", "kp",
                                                        "delay"]
        assert lines[1].startswith("evaluations=")
        assert lines[2] == "converged=true"
        assert lines[3] == f"report={out}"

    def test_budget_starvation_exits_4(self, sim_base, workdir, capsys):
        out = str(workdir / "starved.json")
        code = main(["fit", "--session", sim_base, "--model", "yp3",
                     "--max-evals", "8", "--out", out])
        assert code == 4
        assert "converged=false" in lines_of(capsys)
        assert of.read_fit_report(out).converged is False

    def test_fixed_dead_time_spelling(self, sim_base, workdir, capsys):
        out = str(workdir / "fixed.json")
        code = main(["fit", "--session", sim_base, "--model", "yp3",
                     "--fix-L", "0.15", "--out", out])
        assert code == 0
        assert of.read_fit_report(out).params["delay"] == 0.15


class TestScanSweep:
    def test_scan_summary_and_grid_file(self, sim_base, workdir, capsys):
        out = str(workdir / "grid.csv")
        code = main(["scan", "--session", sim_base,
                     "--alpha", "-0.6,-0.5,-0.4", "--L", "0.15",
                     "--kp", "2", "--out", out])
        values = kv(lines_of(capsys))
        assert code == 0
        assert float(values["alpha"]) == -0.5
        assert float(values["rmse"]) < 0.05
        assert values["grid"] == out
        table = of.read_table_csv(out)
        assert len(table["rmse"]) == 3

    def test_sweep_summary_and_table(self, sim_base, workdir, capsys):
        out = str(workdir / "sweep.csv")
        code = main(["sweep", "--session", sim_base, "--model", "yp3",
                     "--L", "0.1,0.15", "--max-evals", "500",
                     "--out", out])
        values = kv(lines_of(capsys))
        assert code == 0
        assert values["points"] == "2"
        assert values["converged"] == "2"
        assert float(values["best_delay"]) == 0.15
        table = of.read_table_csv(out)
        assert list(table["delay"]) == [0.1, 0.15]


class TestForcingValidate:
    def test_forcing_rms_and_validity(self, workdir, capsys):
        # The RMS normalization is exact over the construction period.
        out = str(workdir / "stick")
        code = main(["forcing", "--duration", "120", "--rms", "2.5",
                     "--out", out])
        values = kv(lines_of(capsys))
        assert code == 0
        assert values["samples"] == "12000"
        assert float(values["rms"]) == pytest.approx(2.5, abs=1e-12)
        assert main(["validate", "--session", out]) == 0
        assert kv(lines_of(capsys))["valid"] == "true"

    def test_validate_flags_identity_break(self, workdir, capsys):
        base = str(workdir / "broken")
        n, step = 50, 0.01
        i = of.SampledSignal(step, np.ones(n))
        m = of.SampledSignal(step, np.zeros(n))
        e = of.SampledSignal(step, np.full(n, 0.5))
        of.write_session(of.Session(step=step, i=i, e=e, m=m), base)
        code = main(["validate", "--session", base])
        out = lines_of(capsys)
        assert code == 1
        assert any(line.startswith("violation=") for line in out)
        assert out[-1] == "valid=false"
        assert main(["validate", "--session", base,
                     "--identity-tol", "0.6"]) == 0

    def test_validate_missing_file(self, tmp_path, capsys):
        assert main(["validate",
                     "--session", str(tmp_path / "nope")]) == 1
        assert kv(lines_of(capsys))["valid"] == "false"


class TestReport:
    def test_renders_every_figure_kind(self, sim_base, fit_report,
                                       workdir, capsys):
        scan_csv = str(workdir / "report-grid.csv")
        grid = of.scan_alpha_delay_kp(
            of.read_session(sim_base), alpha_values=[-0.6, -0.5, -0.4],
            delay_values=[0.1, 0.15], kp_values=[2.0])
        of.write_scan_grid(grid, scan_csv)
        sweep_csv = str(workdir / "sw.csv")
        results = of.sweep_delay(of.read_session(sim_base), "yp3",
                                 delay_values=[0.1, 0.15],
                                 config=of.SimplexConfig(max_evals=500))
        of.write_sweep_results(results, sweep_csv)
        out_dir = str(workdir / "figs")
        code = main(["report", "--session", sim_base,
                     "--scan", scan_csv, "--sweep", sweep_csv,
                     "--fit", fit_report, "--out-dir", out_dir])
        out = lines_of(capsys)
        assert code == 0
        figures = [line.split("=", 1)[1] for line in out
                   if line.startswith("figure=")]
        assert len(figures) >= 4
        for path in figures:
            assert path.startswith(out_dir)
            assert os.path.getsize(path) > 1000

    def test_fit_overlay_requires_session(self, fit_report, tmp_path,
                                          capsys):
        assert main(["report", "--fit", fit_report,
                     "--out-dir", str(tmp_path)]) == 2


class TestModuleEntry:
    def test_python_dash_m_invocation(self, tmp_path):
        out = str(tmp_path / "ep")
        proc = subprocess.run(
            [sys.executable, "-m", "operfit.cli", "forcing",
             "--duration", "1", "--out", out],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "session=" in proc.stdout
        proc = subprocess.run(
            [sys.executable, "-m", "operfit.cli", "validate",
             "--session", out],
            capture_output=True, text=True)
        assert proc.returncode == 0
