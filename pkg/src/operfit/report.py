"""Figure rendering for sessions, scans, sweeps, and fit overlays.

Every renderer writes PNG files next to the delimited data and returns
the paths written. Rendering is read-only: figures are derived from
files the toolkit produced, never the other way round.
"""

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .identify import FitResult, model_from_params, rmse_cost  # noqa: E402
from .loop import LoopConfig, simulate  # noqa: E402
from .models import PlantModel  # noqa: E402
from .sessions import Session  # noqa: E402

_TRACE_KW = dict(linewidth=1.0)


def _save(fig, path: str) -> str:
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def render_session(session: Session, out_path: str,
                   title: str = "") -> list[str]:
    """Trace plot: input and output overlaid, then error, then control."""
    rows = []
    if session.i is not None or session.m is not None:
        rows.append("tracking")
    if session.e is not None:
        rows.append("e")
    if session.c is not None:
        rows.append("c")
    if not rows:
        raise ValueError("session has nothing to plot")
    fig, axes = plt.subplots(len(rows), 1, sharex=True,
                             figsize=(8, 2.2 * len(rows)), squeeze=False)
    for ax, row in zip(axes[:, 0], rows):
        if row == "tracking":
            if session.i is not None:
                ax.plot(session.i.times, session.i.values,
                        label="input i", **_TRACE_KW)
            if session.m is not None:
                ax.plot(session.m.times, session.m.values,
                        label="output m", **_TRACE_KW)
            ax.legend(loc="upper right", fontsize=8)
            ax.set_ylabel(session.meta.units or "amplitude")
        elif row == "e":
            ax.plot(session.e.times, session.e.values, color="tab:red",
                    **_TRACE_KW)
            ax.set_ylabel("error e")
        else:
            ax.plot(session.c.times, session.c.values, color="tab:green",
                    **_TRACE_KW)
            ax.set_ylabel("control c")
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("time [s]")
    if title:
        axes[0, 0].set_title(title)
    return [_save(fig, out_path)]


def render_scan(columns: dict[str, np.ndarray], out_base: str) -> list[str]:
    """Cost-surface sections: RMSE vs alpha, one line per dead time.

    One figure per gain value, written as <out_base>_kp<value>.png.
    `columns` is the scan CSV read back (read_table_csv).
    """
    for name in ("alpha", "delay", "kp", "rmse"):
        if name not in columns:
            raise ValueError(f"scan table lacks a {name!r} column")
    alpha = columns["alpha"]
    delay = columns["delay"]
    kp = columns["kp"]
    rmse = np.where(np.isfinite(columns["rmse"]), columns["rmse"], np.nan)
    paths = []
    for kp_value in np.unique(kp):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        sel_kp = kp == kp_value
        for delay_value in np.unique(delay[sel_kp]):
            sel = sel_kp & (delay == delay_value)
            order = np.argsort(alpha[sel])
            ax.plot(alpha[sel][order], rmse[sel][order], marker="o",
                    markersize=3, linewidth=1.0,
                    label=f"delay {delay_value:g} s")
        ax.set_xlabel("alpha")
        ax.set_ylabel("closed-loop RMSE")
        ax.set_title(f"kp = {kp_value:g}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7, ncols=2)
        safe = f"{kp_value:g}".replace(".", "p").replace("-", "m")
        paths.append(_save(fig, f"{out_base}_kp{safe}.png"))
    return paths


def render_sweep(columns: dict[str, np.ndarray], out_path: str) -> list[str]:
    """Fitted parameters and cost as functions of the fixed dead time."""
    if "delay" not in columns:
        raise ValueError("sweep table lacks a 'delay' column")
    delay = columns["delay"]
    skip = {"delay", "evaluations", "converged"}
    names = [n for n in columns if n not in skip]
    fig, axes = plt.subplots(len(names), 1, sharex=True,
                             figsize=(7, 2.0 * len(names)), squeeze=False)
    order = np.argsort(delay)
    for ax, name in zip(axes[:, 0], names):
        vals = np.where(np.isfinite(columns[name]), columns[name], np.nan)
        ax.plot(delay[order], vals[order], marker="o", markersize=3,
                linewidth=1.0)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("dead time [s]")
    return [_save(fig, out_path)]


def render_fit(session: Session, result: FitResult,
               plant: PlantModel | None, out_path: str) -> list[str]:
    """Overlay of the recorded output and the fitted model's output."""
    if session.i is None or session.m is None:
        raise ValueError("fit overlay needs a session with i and m")
    if plant is None:
        plant = session.meta.plant
    if plant is None:
        raise ValueError("fit overlay needs a plant model")
    if not all(math.isfinite(v) for v in result.params.values()):
        raise ValueError("fit result carries non-finite parameters")
    model = model_from_params(result.model_kind, result.params)
    config = LoopConfig(operator=model, plant=plant, step=session.step,
                        duration=len(session.i) * session.step)
    sim = simulate(config, session.i)
    fig, (ax_m, ax_d) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax_m.plot(session.m.times, session.m.values, label="recorded m",
              **_TRACE_KW)
    ax_m.plot(sim.m.times, sim.m.values, "--",
              label=f"{result.model_kind} model", **_TRACE_KW)
    ax_m.set_ylabel("output m")
    ax_m.legend(loc="upper right", fontsize=8)
    ax_m.grid(True, alpha=0.3)
    ax_m.set_title(f"{result.model_kind}: RMSE = "
                   f"{rmse_cost(sim.m, session.m):.4g}")
    ax_d.plot(sim.m.times, sim.m.values - session.m.values,
              color="tab:red", **_TRACE_KW)
    ax_d.set_ylabel("model - recorded")
    ax_d.set_xlabel("time [s]")
    ax_d.grid(True, alpha=0.3)
    return [_save(fig, out_path)]


def ensure_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
