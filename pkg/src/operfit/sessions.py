"""Tracking-session container and its on-disk format.

A session is one tracking run: forcing input i, error e, control c, and
plant output m on a shared uniform grid, plus recording metadata. On
disk a session is a pair of files sharing a base path:

* <base>.csv  -- header exactly ``t,i,e,c,m``, one row per sample,
  floats with 17 significant digits, missing signals left as empty
  columns, UTF-8, LF newlines.
* <base>.json -- metadata: step, plant {gain, tau}, subject_id, source,
  units, created_at (ISO-8601 or null). Extra keys are preserved so
  recorders can attach their own (tick_rate, input_gain, ...).
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .models import PlantModel
from .signals import SampledSignal

SOURCES = ("synthetic", "ui_recording", "external")

_CSV_HEADER = ["t", "i", "e", "c", "m"]
_SIGNAL_COLUMNS = ("i", "e", "c", "m")

# Relative timestamp jitter accepted before a file is rejected as
# non-uniform (resampling bypasses the check).
_JITTER_TOL = 1e-3


class SessionFileError(ValueError):
    """A session file could not be parsed. `row` is the 1-based line."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None
                         else f"{message} (line {row})")
        self.row = row


class MalformedRowError(SessionFileError):
    """Wrong field count, unparsable number, or inconsistent column."""


class NonFiniteValueError(SessionFileError):
    """A parsed cell is NaN or infinite."""


class NonUniformSamplingError(SessionFileError):
    """Timestamps deviate from a uniform grid beyond the tolerance."""


class SessionInvariantError(ValueError):
    """A parsed session violates session invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class SessionMeta:
    """Recording metadata carried alongside the signals."""

    plant: PlantModel | None = None
    subject_id: str = ""
    source: str = "synthetic"
    units: str = "display units"
    created_at: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Session:
    """One tracking run on a shared uniform grid.

    Any of the four signals may be absent (None) for partial recordings;
    all present signals must agree on step, length, and start time.
    """

    step: float
    i: SampledSignal | None = None
    e: SampledSignal | None = None
    c: SampledSignal | None = None
    m: SampledSignal | None = None
    meta: SessionMeta = field(default_factory=SessionMeta)

    def __post_init__(self):
        if not np.isfinite(self.step) or self.step <= 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        present = self.present_signals()
        if not present:
            raise ValueError("session must contain at least one signal")
        first = next(iter(present.values()))
        for name, sig in present.items():
            if sig.step != self.step:
                raise ValueError(
                    f"signal {name} step {sig.step} != session step "
                    f"{self.step}")
            if len(sig) != len(first) or sig.t0 != first.t0:
                raise ValueError(
                    f"signal {name} grid disagrees with the others")

    def present_signals(self) -> dict[str, SampledSignal]:
        """Signals actually carried, keyed by column name."""
        out = {}
        for name in _SIGNAL_COLUMNS:
            sig = getattr(self, name)
            if sig is not None:
                out[name] = sig
        return out

    def __len__(self) -> int:
        return len(next(iter(self.present_signals().values())))

    @property
    def t0(self) -> float:
        return next(iter(self.present_signals().values())).t0

    def validate(self, identity_tol: float | None = None) -> list[str]:
        """Check session invariants; returns a list of violations.

        When i, e, and m are all present the loop identity
        e == i - m must hold within identity_tol (default 1e-6, which
        suits synthetic sessions; pass a looser bound for recordings).
        """
        tol = 1e-6 if identity_tol is None else identity_tol
        violations = []
        if self.meta.source not in SOURCES:
            violations.append(
                f"source {self.meta.source!r} not one of {SOURCES}")
        if self.i is not None and self.e is not None and self.m is not None:
            worst = float(np.max(np.abs(
                self.e.values - (self.i.values - self.m.values))))
            if worst > tol:
                violations.append(
                    f"loop identity violated: max|e - (i - m)| = "
                    f"{worst:.3e} > {tol:.3e}")
        return violations


def _base_path(path: str) -> str:
    for suffix in (".csv", ".json"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _format_value(x: float) -> str:
    return f"{x:.17g}"


def write_session(session: Session, path: str) -> tuple[str, str]:
    """Write a session to <base>.csv and <base>.json.

    `path` may be the bare base or either file name. Returns the two
    paths written. Output bytes are a pure function of the session.
    """
    base = _base_path(path)
    csv_path, json_path = base + ".csv", base + ".json"
    n = len(session)
    times = session.t0 + session.step * np.arange(n)
    columns = [getattr(session, name) for name in _SIGNAL_COLUMNS]
    lines = [",".join(_CSV_HEADER)]
    for k in range(n):
        row = [_format_value(times[k])]
        for sig in columns:
            row.append("" if sig is None else _format_value(sig.values[k]))
        lines.append(",".join(row))
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    meta = session.meta
    payload = {
        "step": session.step,
        "plant": None if meta.plant is None
        else {"gain": meta.plant.gain, "tau": meta.plant.tau},
        "subject_id": meta.subject_id,
        "source": meta.source,
        "units": meta.units,
        "created_at": meta.created_at,
    }
    for key in sorted(meta.extra):
        if key not in payload:
            payload[key] = meta.extra[key]
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


def _parse_cell(token: str, row: int, column: str) -> float | None:
    if token == "":
        return None
    try:
        value = float(token)
    except ValueError:
        raise MalformedRowError(
            f"column {column}: cannot parse {token!r}", row) from None
    if not math.isfinite(value):
        raise NonFiniteValueError(
            f"column {column}: non-finite value {token!r}", row)
    return value


def _read_meta(json_path: str) -> tuple[SessionMeta, float]:
    with open(json_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict) or "step" not in payload:
        raise SessionFileError(f"{json_path}: metadata must carry a step")
    step = payload.get("step")
    if not isinstance(step, (int, float)) or not math.isfinite(step) \
            or step <= 0:
        raise SessionFileError(f"{json_path}: bad step {step!r}")
    plant_raw = payload.get("plant")
    plant = None
    if plant_raw is not None:
        try:
            plant = PlantModel(gain=float(plant_raw["gain"]),
                               tau=float(plant_raw["tau"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionFileError(
                f"{json_path}: bad plant entry: {exc}") from None
    known = {"step", "plant", "subject_id", "source", "units", "created_at"}
    extra = {k: v for k, v in payload.items() if k not in known}
    meta = SessionMeta(
        plant=plant,
        subject_id=str(payload.get("subject_id", "")),
        source=str(payload.get("source", "external")),
        units=str(payload.get("units", "")),
        created_at=payload.get("created_at"),
        extra=extra,
    )
    return meta, float(step)


def read_session(path: str, *, resample_step: float | None = None,
                 identity_tol: float | None = None,
                 check: bool = True) -> Session:
    """Read a session pair back from disk.

    Timestamps must form a uniform grid at the metadata step within 0.1%
    relative jitter unless `resample_step` is given, in which case all
    signals are linearly interpolated onto a fresh uniform grid at that
    step. With `check` (the default) session invariants are enforced and
    a SessionInvariantError lists every violation.
    """
    base = _base_path(path)
    csv_path, json_path = base + ".csv", base + ".json"
    meta, step = _read_meta(json_path)

    with open(csv_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SessionFileError(f"{csv_path}: empty file")
    if rows[0] != _CSV_HEADER:
        raise MalformedRowError(
            f"header must be exactly {','.join(_CSV_HEADER)}", row=1)

    times: list[float] = []
    columns: dict[str, list[float]] = {name: [] for name in _SIGNAL_COLUMNS}
    present: dict[str, bool] = {}
    for idx, fields in enumerate(rows[1:], start=2):
        if len(fields) != len(_CSV_HEADER):
            raise MalformedRowError(
                f"expected {len(_CSV_HEADER)} fields, got {len(fields)}",
                row=idx)
        t = _parse_cell(fields[0], idx, "t")
        if t is None:
            raise MalformedRowError("column t: empty timestamp", row=idx)
        times.append(t)
        for name, token in zip(_SIGNAL_COLUMNS, fields[1:]):
            value = _parse_cell(token, idx, name)
            if name not in present:
                present[name] = value is not None
            if (value is not None) != present[name]:
                raise MalformedRowError(
                    f"column {name}: value present in some rows but "
                    "missing in others", row=idx)
            if value is not None:
                columns[name].append(value)
    if not times:
        raise SessionFileError(f"{csv_path}: no data rows")

    t_arr = np.asarray(times)
    if len(t_arr) > 1:
        diffs = np.diff(t_arr)
        worst = int(np.argmax(np.abs(diffs - step)))
        if abs(diffs[worst] - step) > _JITTER_TOL * step \
                and resample_step is None:
            raise NonUniformSamplingError(
                f"timestamp spacing {diffs[worst]:.9g} deviates from the "
                f"step {step:.9g} by more than {_JITTER_TOL:.0%}",
                row=worst + 3)

    signals: dict[str, SampledSignal | None] = {}
    for name in _SIGNAL_COLUMNS:
        if not present.get(name, False):
            signals[name] = None
            continue
        vals = np.asarray(columns[name])
        if resample_step is not None:
            n_new = int(np.floor(
                (t_arr[-1] - t_arr[0]) / resample_step * (1 + 1e-12))) + 1
            grid = t_arr[0] + resample_step * np.arange(n_new)
            signals[name] = SampledSignal(
                resample_step, np.interp(grid, t_arr, vals), t0=t_arr[0])
        else:
            signals[name] = SampledSignal(step, vals, t0=t_arr[0])

    session = Session(
        step=resample_step if resample_step is not None else step,
        i=signals["i"], e=signals["e"], c=signals["c"], m=signals["m"],
        meta=meta)
    if check:
        violations = session.validate(identity_tol=identity_tol)
        if violations:
            raise SessionInvariantError(violations)
    return session


def session_paths(path: str) -> tuple[str, str]:
    """The CSV/JSON pair a base path refers to."""
    base = _base_path(path)
    return base + ".csv", base + ".json"


def session_exists(path: str) -> bool:
    csv_path, json_path = session_paths(path)
    return os.path.exists(csv_path) and os.path.exists(json_path)
