"""Scenarios: built-in test cases, JSON/CSV loading and run export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout

from .comfort import comfort_bounds
from .cost import energy_objective
from .errors import DataError, DomainError
from .model import PPM, ComfortSpec, ControlSchedule, ExogenousSeries, MicroclimateState, RoomParams

DAY_TYPES = ("cold", "mild", "hot")
SERIES_HEADER = ("t_hours", "T_out_C", "N_oc")
TRAJECTORY_HEADER = (
    "t_hours", "T_C", "T_star_C", "CO2_ppm", "W_W", "Q_kgps", "T_out_C", "N_oc", "T_lo_C", "T_hi_C",
)

# synthetic daily weather: (mean, amplitude) in degC, maximum at 15:00
WEATHER = {"cold": (-18.0, 4.0), "mild": (12.0, 5.0), "hot": (27.0, 5.0)}
PEAK_HOUR = 15.0

BUILTIN_PARAMS = {
    "tc1": RoomParams(
        U=55.0, U_star=200.0, mC_star=107e6, V=540.0, R_r=0.1, W_min=-15000.0, W_max=5000.0,
        W_oc=120.0, Q_max=0.55, T_in=21.0, S_p=500e-4,
    ),
    "tc2": RoomParams(
        U=15.0, U_star=200.0, mC_star=20e6, V=105.0, R_r=0.2, W_min=-2000.0, W_max=950.0,
        W_oc=120.0,
    ),
    "tc2_svs": RoomParams(
        U=15.0, U_star=200.0, mC_star=20e6, V=105.0, R_r=0.2, W_min=-2000.0, W_max=1100.0,
        W_oc=120.0, Q_max=0.05, T_in=21.0, S_p=120e-4,
    ),
}


def weather_profile(day_type, hours):
    """Outside temperature [degC] of the synthetic ``day_type`` at ``hours``."""
    mean, amp = WEATHER[day_type]
    return mean + amp * np.cos(2.0 * np.pi * (np.asarray(hours, dtype=float) - PEAK_HOUR) / 24.0)


def office_occupancy(hours):
    h = np.asarray(hours, dtype=float) % 24.0
    lecture = ((h >= 9) & (h < 12)) | ((h >= 14) & (h < 17))
    working = (h >= 8) & (h < 19)
    return np.where(lecture, 25.0, np.where(working, 5.0, 0.0))


def home_occupancy(hours):
    h = np.asarray(hours, dtype=float) % 24.0
    return np.where((h < 8) | (h >= 19), 2.0, 0.0)


OCCUPANCY = {"tc1": office_occupancy, "tc2": home_occupancy, "tc2_svs": home_occupancy}


@dataclass(frozen=True, eq=False)
class Scenario:
    params: RoomParams
    comfort: ComfortSpec
    exo: ExogenousSeries
    day_type: str = "cold"
    initial: MicroclimateState = field(default_factory=lambda: MicroclimateState(21.0, 21.0, 400 * PPM))
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.day_type not in DAY_TYPES:
            raise DomainError(f"day_type must be one of {DAY_TYPES}, got '{self.day_type}'")
        if self.exo.end - self.exo.start < 86400.0 - 1e-6:
            raise DomainError("scenario forecast must span at least 24 h")

    @property
    def name(self):
        return self.tags.get("name", "custom")

    def with_params(self, **changes):
        return replace(self, params=replace(self.params, **changes))


def builtin_scenario(name: str, day_type: str = "cold", days: int = 2) -> Scenario:
    """Built-in room parameters with the synthetic weather and occupancy profiles.

    The forecast repeats the same day ``days`` times (hourly points), so fixed
    planning windows may reach past midnight.
    """
    if name not in BUILTIN_PARAMS:
        raise DomainError(f"unknown scenario '{name}' (choose from {', '.join(BUILTIN_PARAMS)})")
    if day_type not in DAY_TYPES:
        raise DomainError(f"unknown day type '{day_type}' (choose from {', '.join(DAY_TYPES)})")
    hours = np.arange(24 * days + 1, dtype=float)
    exo = ExogenousSeries(hours * 3600.0, weather_profile(day_type, hours), OCCUPANCY[name](hours))
    return Scenario(
        BUILTIN_PARAMS[name], ComfortSpec(), exo, day_type, tags={"name": name, "day_type": day_type}
    )


def load_series(path) -> ExogenousSeries:
    """Read a ``t_hours,T_out_C,N_oc`` CSV file."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: cannot read series ({exc.strerror})") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != SERIES_HEADER:
        raise DataError(f"{path}: header must be '{','.join(SERIES_HEADER)}'")
    t, T, N = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        values = []
        for name, cell in zip(SERIES_HEADER, row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}: field '{name}' is not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}: field '{name}' is not finite")
            values.append(v)
        if t and values[0] <= t[-1]:
            raise DataError(f"{path}:{lineno}: t_hours {values[0]} does not increase (previous {t[-1]})")
        if values[2] < 0:
            raise DataError(f"{path}:{lineno}: negative occupancy {values[2]}")
        t.append(values[0])
        T.append(values[1])
        N.append(values[2])
    if not t:
        raise DataError(f"{path}: no data rows")
    if t[0] != 0:
        raise DataError(f"{path}:2: t_hours must start at 0, got {t[0]}")
    return ExogenousSeries(np.array(t) * 3600.0, np.array(T), np.array(N))


def write_series(exo: ExogenousSeries, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_HEADER)
        for t, T, N in zip(exo.t_grid, exo.T_out, exo.N_oc):
            w.writerow((repr(float(t) / 3600.0), repr(float(T)), repr(float(N))))


def _known(cls, section, data, path):
    names = {f.name for f in fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise DataError(f"{path}: unknown {section} field(s): {', '.join(sorted(unknown))}")
    return data


def load_scenario(path) -> Scenario:
    """Scenario from a JSON config.

    Keys: ``base`` (built-in name, optional), ``day_type``, ``params`` and
    ``comfort`` (field overrides), ``series`` (CSV path relative to the
    config) and ``initial`` (``T``, ``T_star``, ``co2_ppm``).
    """
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"{path}: cannot read config ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(cfg, dict):
        raise DataError(f"{path}: config must be a JSON object")
    allowed = {"base", "day_type", "params", "comfort", "series", "initial", "name"}
    if set(cfg) - allowed:
        raise DataError(f"{path}: unknown key(s): {', '.join(sorted(set(cfg) - allowed))}")

    day_type = cfg.get("day_type", "cold")
    base = cfg.get("base")
    try:
        if base is not None:
            sc = builtin_scenario(base, day_type)
            params, exo = sc.params, sc.exo
        else:
            if "params" not in cfg or "series" not in cfg:
                raise DataError(f"{path}: without 'base' both 'params' and 'series' are required")
            params, exo = None, None
        p_over = _known(RoomParams, "params", cfg.get("params", {}), path)
        params = replace(params, **p_over) if params is not None else RoomParams(**p_over)
        comfort = ComfortSpec(**_known(ComfortSpec, "comfort", cfg.get("comfort", {}), path))
        if "series" in cfg:
            exo = load_series(path.parent / cfg["series"])
        init = cfg.get("initial", {})
        if set(init) - {"T", "T_star", "co2_ppm"}:
            raise DataError(f"{path}: 'initial' accepts T, T_star, co2_ppm")
        initial = MicroclimateState(
            float(init.get("T", 21.0)), float(init.get("T_star", 21.0)), float(init.get("co2_ppm", 400.0)) * PPM
        )
        return Scenario(params, comfort, exo, day_type, initial, {"name": cfg.get("name", path.stem), "day_type": day_type})
    except DataError:
        raise
    except (DomainError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def resolve_scenario(spec: str, day_type: str = "cold") -> Scenario:
    """Built-in name or path to a JSON config."""
    if spec in BUILTIN_PARAMS:
        return builtin_scenario(spec, day_type)
    if Path(spec).suffix.lower() == ".json" or Path(spec).exists():
        return load_scenario(spec)
    raise DomainError(f"unknown scenario '{spec}' (built-ins: {', '.join(BUILTIN_PARAMS)}, or a JSON path)")


def run_metrics(result, scenario: Scenario | None = None) -> dict:
    """The deterministic summary written to ``metrics.json``."""
    traj = result.trajectory
    return {
        "controller": result.controller_tag,
        "scenario": result.scenario_tag,
        "energy": result.energy.to_kwh(),
        "penalty_Kh": result.penalty,
        "max_co2_ppm": float(np.max(traj.nu_co2) / PPM) if len(traj.t) > 1 else 0.0,
        "solver_iterations": int(sum(result.iterations)),
        "n_cycles": len(result.solve_times),
    }


def export_run(result, out_dir, exo: ExogenousSeries, comfort: ComfortSpec) -> dict:
    """Write ``trajectory.csv``, ``metrics.json`` and ``timings.json`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(out / ".run.lock"))
        with lock.acquire(timeout=0):
            paths = _write_run(result, out, exo, comfort)
    except Timeout:
        raise DataError(f"{out}: directory is in use by another run") from None
    except OSError as exc:
        raise DataError(f"{exc.filename or out}: {exc.strerror}") from exc
    return paths


def _write_run(result, out: Path, exo, comfort):
    traj = result.trajectory
    n = len(traj.applied_W)
    t = traj.t[:n]
    traj_path = out / "trajectory.csv"
    with traj_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        if n:
            bounds = comfort_bounds(exo.N_oc_at(t), comfort)
            cols = (
                t / 3600.0, traj.T[:n], traj.T_star[:n], traj.nu_co2[:n] / PPM, traj.applied_W, traj.applied_Q,
                exo.T_out_at(t), exo.N_oc_at(t), bounds.T_lo, bounds.T_hi,
            )
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])
    metrics_path = out / "metrics.json"
    metrics_path.write_text(json.dumps(run_metrics(result), indent=2, sort_keys=True) + "\n")
    timings_path = out / "timings.json"
    timings_path.write_text(json.dumps({"solve_times_s": list(result.solve_times)}, indent=2) + "\n")
    return {"trajectory": traj_path, "metrics": metrics_path, "timings": timings_path}


def read_trajectory(path):
    """Columns of an exported ``trajectory.csv`` as float arrays."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array(rows[1:], dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def reaccount_energy(columns, params: RoomParams, dt_int=60.0):
    """Energy breakdown re-derived from exported trajectory columns."""
    n = len(columns["t_hours"])
    sched = ControlSchedule(columns["W_W"], columns["Q_kgps"], step_duration=dt_int)
    t = columns["t_hours"] * 3600.0
    if n == 0:
        return energy_objective(sched, None, params)
    exo = ExogenousSeries(np.append(t, t[-1] + dt_int), np.append(columns["T_out_C"], columns["T_out_C"][-1]),
                          np.append(columns["N_oc"], columns["N_oc"][-1]))
    return energy_objective(sched, exo, params, t0=t[0])
