"""Parameter identification: simplex search over operator models.

The cost of a candidate operator against a recorded session is the RMSE
between the model's plant output and the recorded one (closed loop;
the candidate tracks the recorded forcing through the same plant) or
between the model's control and the recorded one (open loop; the
candidate replays the recorded error history). A from-scratch
Nelder-Mead simplex minimizes the cost, with domain constraints applied
as a large finite penalty so infeasible proposals slide back toward the
feasible set.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .loop import LoopConfig, UnstableLoopError, simulate
from .models import (FractionalModel, GainLeadDelayModel, PlantModel,
                     QuasiLinearModel, operator_output)
from .sessions import Session
from .signals import SampledSignal

MODEL_KINDS = ("yp1", "yp2", "yp3")
FIT_MODES = ("closed_loop", "open_loop")

# Cost assigned to proposals outside the parameter domain, plus their
# distance to the feasible set so the simplex is steered back.
_PENALTY = 1e9


def rmse_cost(model_output: SampledSignal,
              recorded: SampledSignal) -> float:
    """Root-mean-square error between two signals on the same grid."""
    if model_output.step != recorded.step:
        raise ValueError(
            f"step mismatch: {model_output.step} vs {recorded.step}")
    if len(model_output) != len(recorded):
        raise ValueError(
            f"length mismatch: {len(model_output)} vs {len(recorded)}")
    diff = model_output.values - recorded.values
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class SimplexConfig:
    """Nelder-Mead settings: standard coefficients, tight tolerances."""

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_evals: int = 3000
    x_tol: float = 1e-6
    f_tol: float = 1e-6
    restarts: int = 3

    def __post_init__(self):
        if self.reflection <= 0.0:
            raise ValueError("reflection must be positive")
        if self.expansion <= 1.0:
            raise ValueError("expansion must exceed 1")
        if not 0.0 < self.contraction < 1.0:
            raise ValueError("contraction must lie in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.x_tol <= 0.0 or self.f_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass(frozen=True)
class SimplexResult:
    """Best point found, its cost, and how the search ended."""

    x: np.ndarray
    fx: float
    evaluations: int
    converged: bool


class _EvalBudget(Exception):
    pass


def _default_spread(x0: np.ndarray) -> np.ndarray:
    # Classic rule: nudge each coordinate 5% (absolute nudge at zeros).
    spread = 0.05 * np.abs(x0)
    spread[spread == 0.0] = 0.00025
    return spread


def nelder_mead(fn, x0, config: SimplexConfig = SimplexConfig(),
                trace: list | None = None,
                initial_spread=None) -> SimplexResult:
    """Minimize fn from x0 with restarts from the perturbed best vertex.

    fn maps a parameter vector to a finite cost, +inf allowed. When
    `trace` is a list, the best cost of the working simplex is appended
    after every iteration (restarts start a fresh descent, so the trace
    is monotone within a restart, not across them).

    `initial_spread` sets the per-coordinate edge lengths of the first
    simplex (and scales the restart perturbations). Default is 5% of
    each start coordinate. Costs that are piecewise constant along a
    coordinate need a spread of several flat treads there, or every
    vertex lands on one tread and that coordinate never moves.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if n < 1:
        raise ValueError("need at least one parameter")
    if config.max_evals < n + 1:
        raise ValueError(
            f"max_evals {config.max_evals} cannot seed a {n + 1}-vertex "
            "simplex")
    if initial_spread is None:
        spread = _default_spread(x0)
    else:
        spread = np.asarray(initial_spread, dtype=float)
        if spread.shape != x0.shape or np.any(spread <= 0.0) \
                or not np.all(np.isfinite(spread)):
            raise ValueError("initial_spread needs one positive finite "
                             "entry per parameter")
    evals = 0

    def ev(x: np.ndarray) -> float:
        nonlocal evals
        if evals >= config.max_evals:
            raise _EvalBudget
        evals += 1
        value = fn(x)
        return math.inf if math.isnan(value) else float(value)

    rho = config.reflection
    chi = config.expansion
    psi = config.contraction
    sigma = config.shrink

    def run(start: np.ndarray) -> tuple[np.ndarray, float, bool]:
        verts = [start.copy()]
        for i in range(n):
            v = start.copy()
            v[i] += spread[i]
            verts.append(v)
        try:
            fvals = [ev(v) for v in verts]
        except _EvalBudget:
            return start, math.inf, False
        order = sorted(range(n + 1), key=lambda i: fvals[i])
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]
        converged = False
        try:
            while True:
                fspread = fvals[-1] - fvals[0]
                xspread = max(
                    float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
                if fspread <= config.f_tol and xspread <= config.x_tol:
                    converged = True
                    break
                centroid = np.mean(verts[:-1], axis=0)
                xr = centroid + rho * (centroid - verts[-1])
                fr = ev(xr)
                if fr < fvals[0]:
                    xe = centroid + rho * chi * (centroid - verts[-1])
                    fe = ev(xe)
                    new, fnew = (xe, fe) if fe < fr else (xr, fr)
                elif fr < fvals[-2]:
                    new, fnew = xr, fr
                else:
                    if fr < fvals[-1]:
                        xc = centroid + psi * rho * (centroid - verts[-1])
                        fc = ev(xc)
                        new, fnew = (xc, fc) if fc <= fr else (None, None)
                    else:
                        xc = centroid - psi * (centroid - verts[-1])
                        fc = ev(xc)
                        new, fnew = (xc, fc) if fc < fvals[-1] \
                            else (None, None)
                if new is None:
                    # Shrink everything toward the best vertex.
                    verts = [verts[0]] + [
                        verts[0] + sigma * (v - verts[0]) for v in verts[1:]]
                    fvals = [fvals[0]] + [ev(v) for v in verts[1:]]
                else:
                    verts[-1] = new
                    fvals[-1] = fnew
                order = sorted(range(n + 1), key=lambda i: fvals[i])
                verts = [verts[i] for i in order]
                fvals = [fvals[i] for i in order]
                if trace is not None:
                    trace.append(fvals[0])
        except _EvalBudget:
            converged = False
        return verts[0], fvals[0], converged

    def perturb(x: np.ndarray, round_index: int) -> np.ndarray:
        out = x.copy()
        for i in range(n):
            sign = 1.0 if (i + round_index) % 2 == 0 else -1.0
            out[i] += 0.5 * spread[i] * sign
        return out

    best_x, best_f, best_converged = run(x0)
    for r in range(1, config.restarts + 1):
        if evals >= config.max_evals:
            break
        x, fx, conv = run(perturb(best_x, r))
        # A restart replaces the incumbent when meaningfully better;
        # inside the f_tol band the two are ties at the configured
        # resolution, so prefer whichever descent actually converged.
        if fx < best_f - config.f_tol:
            take = True
        elif fx < best_f:
            take = conv or not best_converged
        else:
            take = conv and not best_converged \
                and fx <= best_f + config.f_tol
        if take:
            best_x, best_f, best_converged = x, fx, conv
    return SimplexResult(x=best_x, fx=best_f, evaluations=evals,
                         converged=best_converged)


@dataclass(frozen=True)
class FitResult:
    """Identified parameters for one model structure on one session."""

    model_kind: str
    params: dict[str, float]
    rmse: float
    evaluations: int
    converged: bool
    effective_step: float


@dataclass(frozen=True)
class ScanGrid:
    """Dense RMSE lattice over named parameter axes."""

    axes: dict[str, np.ndarray]
    rmse: np.ndarray
    fixed: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(v) for v in self.axes.values())
        if self.rmse.shape != shape:
            raise ValueError(
                f"rmse shape {self.rmse.shape} != axes shape {shape}")
        finite = self.rmse[np.isfinite(self.rmse)]
        if finite.size and np.any(finite < 0.0):
            raise ValueError("rmse entries must be >= 0")

    def argmin(self) -> dict[str, float]:
        """Axis values at the lowest cell (ties: lowest flat index)."""
        flat = int(np.argmin(self.rmse))
        idx = np.unravel_index(flat, self.rmse.shape)
        out = {name: float(vals[i])
               for (name, vals), i in zip(self.axes.items(), idx)}
        out["rmse"] = float(self.rmse[idx])
        return out


class _ParamSpace:
    """Vector <-> model mapping with feasibility bookkeeping."""

    def __init__(self, model_kind: str, fix_delay: float | None,
                 zero: float | None):
        self.model_kind = model_kind
        self.fix_delay = fix_delay
        self.zero = zero
        if model_kind == "yp3":
            names = ["alpha", "kp", "delay"]
            start = [-0.5, 1.0, 0.1]
        elif model_kind == "yp2":
            names = ["kp", "delay"]
            start = [1.0, 0.1]
        elif model_kind == "yp1":
            names = ["kp", "tl", "ti", "tn", "delay"]
            start = [1.0, 0.2, 0.2, 0.2, 0.1]
        else:
            raise ValueError(
                f"model_kind must be one of {MODEL_KINDS}, got {model_kind}")
        if fix_delay is not None:
            if fix_delay < 0.0:
                raise ValueError(f"fixed delay must be >= 0, got {fix_delay}")
            names = names[:-1]
            start = start[:-1]
        self.names = names
        self.default_start = np.asarray(start)

    def spreads(self, step: float) -> np.ndarray:
        """Initial simplex edge per parameter.

        The dead time is rounded to whole samples inside the simulator,
        so the cost is a staircase along that axis with treads `step`
        wide; the first simplex must straddle several treads or the
        search stalls on whichever tread it started on. The remaining
        spreads just cover the plausible ranges of the start guesses.
        """
        per_name = {"alpha": 0.2, "kp": 0.5, "tl": 0.1, "ti": 0.1,
                    "tn": 0.1, "delay": max(0.05, 3.0 * step)}
        return np.asarray([per_name[name] for name in self.names])

    def start_vector(self, initial: dict[str, float] | None) -> np.ndarray:
        vec = self.default_start.copy()
        if initial:
            unknown = set(initial) - set(self.names)
            if unknown:
                raise ValueError(
                    f"unknown initial parameters {sorted(unknown)} for "
                    f"{self.model_kind}")
            for i, name in enumerate(self.names):
                if name in initial:
                    vec[i] = float(initial[name])
        return vec

    def feasibility_gap(self, vec: np.ndarray) -> float:
        """0 when feasible, else a positive distance to feasibility."""
        gap = 0.0
        bad = False
        for name, value in zip(self.names, vec):
            if name == "alpha":
                if abs(value) > 2.0:
                    bad = True
                    gap += abs(value) - 2.0
            elif name == "kp":
                if value <= 0.0:
                    bad = True
                    gap += -value
            else:
                if value < 0.0:
                    bad = True
                    gap += -value
        return gap if bad else -1.0

    def build(self, vec: np.ndarray):
        p = dict(zip(self.names, (float(v) for v in vec)))
        delay = self.fix_delay if self.fix_delay is not None else p["delay"]
        if self.model_kind == "yp3":
            return FractionalModel(kp=p["kp"], alpha=p["alpha"], delay=delay)
        if self.model_kind == "yp2":
            return GainLeadDelayModel(kp=p["kp"], zero=self.zero, delay=delay)
        return QuasiLinearModel(kp=p["kp"], tl=p["tl"], ti=p["ti"],
                                tn=p["tn"], delay=delay)

    def result_params(self, vec: np.ndarray) -> dict[str, float]:
        p = {name: float(v) for name, v in zip(self.names, vec)}
        if self.model_kind == "yp1":
            # The two cascade lags commute, so the labelling is reported
            # canonically with ti <= tn.
            lo, hi = sorted((p["ti"], p["tn"]))
            p["ti"], p["tn"] = lo, hi
        if self.model_kind == "yp2":
            p["zero"] = self.zero
        if self.fix_delay is not None:
            p["delay"] = self.fix_delay
        order = {"yp3": ("alpha", "kp", "delay"),
                 "yp2": ("kp", "zero", "delay"),
                 "yp1": ("kp", "tl", "ti", "tn", "delay")}[self.model_kind]
        return {name: p[name] for name in order}


def model_from_params(model_kind: str, params: dict[str, float]):
    """Instantiate an operator model from a named parameter map."""
    if model_kind == "yp3":
        return FractionalModel(kp=params["kp"], alpha=params["alpha"],
                               delay=params["delay"])
    if model_kind == "yp2":
        return GainLeadDelayModel(kp=params["kp"], zero=params["zero"],
                                  delay=params["delay"])
    if model_kind == "yp1":
        return QuasiLinearModel(kp=params["kp"], tl=params["tl"],
                                ti=params["ti"], tn=params["tn"],
                                delay=params["delay"])
    raise ValueError(
        f"model_kind must be one of {MODEL_KINDS}, got {model_kind}")


def _session_cost_fn(session: Session, space: _ParamSpace,
                     plant: PlantModel | None, mode: str,
                     stability_bound: float):
    if mode == "closed_loop":
        if session.i is None or session.m is None:
            raise ValueError("closed-loop fit needs both i and m")
        if plant is None:
            raise ValueError("closed-loop fit needs a plant model")
        n = len(session.i)
        loop_args = dict(plant=plant, step=session.step,
                         duration=n * session.step)
        recorded_m = session.m

        def cost(vec: np.ndarray) -> float:
            gap = space.feasibility_gap(vec)
            if gap >= 0.0:
                return _PENALTY + gap
            model = space.build(vec)
            try:
                sim = simulate(LoopConfig(operator=model, **loop_args),
                               session.i, stability_bound=stability_bound)
            except UnstableLoopError:
                return math.inf
            return rmse_cost(sim.m, recorded_m)

        return cost

    if mode == "open_loop":
        if session.e is None or session.c is None:
            raise ValueError("open-loop fit needs both e and c")

        def cost(vec: np.ndarray) -> float:
            gap = space.feasibility_gap(vec)
            if gap >= 0.0:
                return _PENALTY + gap
            model = space.build(vec)
            return rmse_cost(operator_output(model, session.e), session.c)

        return cost

    raise ValueError(f"mode must be one of {FIT_MODES}, got {mode}")


def fit(session: Session, model_kind: str, plant: PlantModel | None = None,
        *, mode: str = "closed_loop",
        config: SimplexConfig = SimplexConfig(),
        initial: dict[str, float] | None = None,
        fix_delay: float | None = None,
        zero: float | None = None,
        stability_bound: float = 1e6) -> FitResult:
    """Identify one operator model structure against a session.

    Parameters
    ----------
    session : Session
        Recorded or synthetic run. Closed-loop mode replays session.i
        and matches session.m; open-loop mode replays session.e and
        matches session.c.
    model_kind : str
        "yp1" (quasi-linear), "yp2" (gain/zero/dead time), or "yp3"
        (fractional).
    plant : PlantModel, optional
        Controlled element; defaults to the session metadata's plant.
        Required for closed-loop fits.
    mode : str, optional
        "closed_loop" (default) or "open_loop".
    config : SimplexConfig, optional
        Search settings.
    initial : dict, optional
        Per-parameter starting overrides (alpha, kp, delay, tl, ti, tn).
    fix_delay : float, optional
        Hold the dead time at this value instead of searching it.
    zero : float, optional
        yp2's fixed zero location; defaults to 1/tau of the plant.
    stability_bound : float, optional
        Divergence bound handed to the simulator.

    Returns
    -------
    FitResult
        Best parameters found. A search that never left the penalty
        barrier or never met the tolerances comes back with
        converged=False (rmse is the inf sentinel in the former case).
    """
    if plant is None:
        plant = session.meta.plant
    if model_kind == "yp2" and zero is None:
        if plant is None:
            raise ValueError("yp2 needs a plant (or explicit zero)")
        zero = 1.0 / plant.tau
    space = _ParamSpace(model_kind, fix_delay, zero)
    cost = _session_cost_fn(session, space, plant, mode, stability_bound)
    best = nelder_mead(cost, space.start_vector(initial), config,
                       initial_spread=space.spreads(session.step))
    on_barrier = not math.isfinite(best.fx) or best.fx >= _PENALTY
    return FitResult(
        model_kind=model_kind,
        params=space.result_params(best.x),
        rmse=math.inf if on_barrier else best.fx,
        evaluations=best.evaluations,
        converged=best.converged and not on_barrier,
        effective_step=session.step)


# Module-level state for worker processes so the session is shipped once
# per worker rather than once per cell.
_WORKER: dict = {}


def _scan_worker_init(session, plant, stability_bound):
    _WORKER["session"] = session
    _WORKER["plant"] = plant
    _WORKER["bound"] = stability_bound


def _scan_cell(cell):
    alpha, delay, kp = cell
    return _scan_cell_local(_WORKER["session"], _WORKER["plant"],
                            _WORKER["bound"], alpha, delay, kp)


def _scan_cell_local(session, plant, stability_bound, alpha, delay, kp):
    n = len(session.i)
    model = FractionalModel(kp=kp, alpha=alpha, delay=delay)
    config = LoopConfig(operator=model, plant=plant, step=session.step,
                        duration=n * session.step)
    try:
        sim = simulate(config, session.i, stability_bound=stability_bound)
    except UnstableLoopError:
        return math.inf
    return rmse_cost(sim.m, session.m)


def scan_alpha_delay_kp(session: Session, plant: PlantModel | None = None,
                        alpha_values=None, delay_values=None,
                        kp_values=None, *, jobs: int = 1,
                        stability_bound: float = 1e6) -> ScanGrid:
    """Closed-loop RMSE of the fractional model over a dense lattice.

    Default axes: alpha from -0.95 to -0.05 in 0.05 steps, dead time
    from 0 to 0.4 in 0.05 steps, gain in {1, 3, 5, 7}. Diverged cells
    carry the +inf sentinel. Cells are independent; `jobs` > 1 spreads
    them over processes without changing the result.
    """
    if session.i is None or session.m is None:
        raise ValueError("scan needs a session with both i and m")
    if plant is None:
        plant = session.meta.plant
    if plant is None:
        raise ValueError("scan needs a plant model")
    alpha_axis = np.asarray(
        np.arange(-0.95, -0.05 + 0.025, 0.05) if alpha_values is None
        else alpha_values, dtype=float)
    delay_axis = np.asarray(
        np.arange(0.0, 0.4 + 0.025, 0.05) if delay_values is None
        else delay_values, dtype=float)
    kp_axis = np.asarray(
        [1.0, 3.0, 5.0, 7.0] if kp_values is None else kp_values,
        dtype=float)
    shape = (alpha_axis.size, delay_axis.size, kp_axis.size)
    cells = [(float(a), float(d), float(k))
             for a in alpha_axis for d in delay_axis for k in kp_axis]
    if jobs > 1:
        chunk = max(1, len(cells) // (jobs * 8))
        with ProcessPoolExecutor(
                max_workers=jobs, initializer=_scan_worker_init,
                initargs=(session, plant, stability_bound)) as pool:
            values = list(pool.map(_scan_cell, cells, chunksize=chunk))
    else:
        values = [_scan_cell_local(session, plant, stability_bound, *cell)
                  for cell in cells]
    rmse = np.asarray(values).reshape(shape)
    return ScanGrid(axes={"alpha": alpha_axis, "delay": delay_axis,
                          "kp": kp_axis},
                    rmse=rmse)


def _sweep_point(args):
    session, plant, model_kind, delay, mode, config, zero = args
    return fit(session, model_kind, plant, mode=mode, config=config,
               fix_delay=delay, zero=zero)


def sweep_delay(session: Session, model_kind: str,
                plant: PlantModel | None = None, delay_values=None, *,
                mode: str = "closed_loop",
                config: SimplexConfig = SimplexConfig(),
                zero: float | None = None,
                jobs: int = 1) -> list[FitResult]:
    """Fixed-delay fits across a lattice of dead-time values.

    Default lattice: 0.01 to 0.60 in 0.01 steps. Every point is an
    independent fit from the stock starting guess; points that fail to
    converge are recorded as such and the sweep carries on.
    """
    if plant is None:
        plant = session.meta.plant
    delay_axis = np.asarray(
        np.arange(1, 61) * 0.01 if delay_values is None else delay_values,
        dtype=float)
    tasks = [(session, plant, model_kind, float(d), mode, config, zero)
             for d in delay_axis]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks, chunksize=1))
    return [_sweep_point(t) for t in tasks]


def write_fit_report(result: FitResult, path: str) -> str:
    """Write a fit result as JSON (non-finite rmse becomes null)."""
    payload = {
        "model_kind": result.model_kind,
        "params": {k: float(v) for k, v in result.params.items()},
        "rmse": result.rmse if math.isfinite(result.rmse) else None,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "effective_step": result.effective_step,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def read_fit_report(path: str) -> FitResult:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    rmse = payload["rmse"]
    return FitResult(
        model_kind=payload["model_kind"],
        params={k: float(v) for k, v in payload["params"].items()},
        rmse=math.inf if rmse is None else float(rmse),
        evaluations=int(payload["evaluations"]),
        converged=bool(payload["converged"]),
        effective_step=float(payload["effective_step"]))


def write_scan_grid(grid: ScanGrid, path: str) -> str:
    """Write a scan grid as CSV: one row per cell, axes then rmse."""
    names = list(grid.axes)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names + ["rmse"]) + "\n")
        for idx in np.ndindex(grid.rmse.shape):
            row = [f"{grid.axes[name][i]:.17g}"
                   for name, i in zip(names, idx)]
            row.append(f"{grid.rmse[idx]:.17g}")
            fh.write(",".join(row) + "\n")
    return path


def write_sweep_results(results: list[FitResult], path: str) -> str:
    """Write sweep fits as CSV: delay, fitted params, rmse, bookkeeping."""
    if not results:
        raise ValueError("nothing to write")
    param_names = [n for n in results[0].params if n != "delay"]
    header = ["delay"] + param_names + ["rmse", "evaluations", "converged"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in results:
            row = [f"{r.params['delay']:.17g}"]
            row += [f"{r.params[n]:.17g}" for n in param_names]
            row.append(f"{r.rmse:.17g}")
            row.append(str(r.evaluations))
            row.append("1" if r.converged else "0")
            fh.write(",".join(row) + "\n")
    return path


def read_table_csv(path: str) -> dict[str, np.ndarray]:
    """Read a numeric CSV (scan grid or sweep table) into columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    data = {name: [] for name in header}
    for fields in rows[1:]:
        for name, token in zip(header, fields):
            data[name].append(float(token))
    return {name: np.asarray(vals) for name, vals in data.items()}
