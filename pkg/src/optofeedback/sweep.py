"""Parameter sweeps: one CSV row per axis point plus a JSON run manifest."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import evolve_cm, evolve_to_steady, extract_mechanical, max_dt, steady_cm, vacuum_thermal_cm
from .effective import effective_params
from .errors import OptoFeedbackError, ParameterError
from .measures import BellConfig, MeasureSet, compute_measures
from .model import PARAM_KEYS, SystemParams, check_stability

AXES = ("lambda_f", "g_p", "n_th", "time")
MEASURES = ("En", "St", "P_m", "B_max", "pred")
DEFAULT_MEASURES = ("En", "St", "P_m")
PRED_FIELDS = ("pred_En", "pred_St", "pred_P_m", "pred_zeta_en", "pred_chi_st")


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of a one-dimensional sweep.

    With ``lock_lambda`` the feedback gain follows ``lambda_f = -4 g_p`` at
    every point.  For ``axis='time'`` the range gives sample times of one
    trajectory started from the vacuum/thermal product state.
    """

    axis: str
    start: float
    stop: float
    n_points: int
    base: SystemParams = field(default_factory=SystemParams)
    measures: tuple[str, ...] = DEFAULT_MEASURES
    bell: BellConfig = field(default_factory=BellConfig)
    output_path: str = "sweep.csv"
    lock_lambda: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ParameterError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.n_points < 2:
            raise ParameterError("n_points must be >= 2")
        unknown = set(self.measures) - set(MEASURES)
        if unknown:
            raise ParameterError(f"unknown measures {sorted(unknown)}")
        if self.axis == "time" and min(self.start, self.stop) < 0:
            raise ParameterError("time axis must be non-negative")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_points)

    def params_at(self, value: float) -> SystemParams:
        params = self.base if self.axis == "time" else self.base.replace(**{self.axis: float(value)})
        if self.lock_lambda:
            params = params.replace(lambda_f=-4 * params.g_p)
        return params

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["measures"] = list(self.measures)
        return d


def csv_columns(spec: SweepSpec) -> list[str]:
    cols = (["t"] if spec.axis == "time" else []) + list(PARAM_KEYS) + ["stable", "margin"]
    cols += list(MeasureSet.CSV_FIELDS)
    if "pred" in spec.measures:
        cols += list(PRED_FIELDS)
    return cols + ["error"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) and math.isnan(v):
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _row(spec: SweepSpec, params: SystemParams, stable, margin, ms: MeasureSet | None, error="", t=None):
    fields = ([t] if spec.axis == "time" else []) + [getattr(params, k) for k in PARAM_KEYS]
    fields += [stable, margin]
    if ms is None:
        fields += [None] * len(MeasureSet.CSV_FIELDS)
    else:
        fields += [getattr(ms, k) for k in MeasureSet.CSV_FIELDS]
    if "pred" in spec.measures:
        fields += _pred_fields(params) if ms is not None else [None] * len(PRED_FIELDS)
    fields.append(error.replace(",", ";").replace("\n", " "))
    return ",".join(_fmt(v) for v in fields)


def _pred_fields(params):
    try:
        m = effective_params(params.replace(rwa=True))
    except OptoFeedbackError:
        return [None] * len(PRED_FIELDS)
    return [m.En_pred, m.St_pred, m.P_m_pred, m.zeta_en_pred, m.chi_st_pred]


def steady_mechanical_cm(params: SystemParams) -> np.ndarray:
    """Long-time mechanical CM: Lyapunov solution, or period average without the RWA."""
    if params.rwa:
        return extract_mechanical(steady_cm(params))
    return extract_mechanical(evolve_to_steady(params).average)


def _bell_cfg(spec):
    return spec.bell if "B_max" in spec.measures else None


def evaluate_point(spec: SweepSpec, value: float) -> tuple[str, float]:
    """Compute one row; per-point failures are captured into the row."""
    t0 = time.perf_counter()
    params = spec.params_at(value)
    report = check_stability(params)
    if not report.stable:
        row = _row(spec, params, False, report.margin, None, "unstable")
    else:
        try:
            ms = compute_measures(steady_mechanical_cm(params), _bell_cfg(spec))
            row = _row(spec, params, True, report.margin, ms)
        except Exception as exc:  # recorded in the row; one bad point never aborts a sweep
            row = _row(spec, params, True, report.margin, None, f"{type(exc).__name__}: {exc}")
    return row, time.perf_counter() - t0


def _evaluate_packed(args):
    return evaluate_point(*args)


def _measure_time_row(args):
    spec, params, stable, margin, t, sigma = args
    t0 = time.perf_counter()
    try:
        ms = compute_measures(extract_mechanical(sigma), _bell_cfg(spec))
        row = _row(spec, params, stable, margin, ms, t=t)
    except Exception as exc:
        row = _row(spec, params, stable, margin, None, f"{type(exc).__name__}: {exc}", t=t)
    return row, time.perf_counter() - t0


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _time_rows(spec: SweepSpec):
    params = spec.base
    report = check_stability(params)
    times = np.sort(spec.values())
    sigma = vacuum_thermal_cm(params)
    t_prev = 0.0
    states = []
    error = ""
    for t in times:
        if error:
            states.append((t, None))
            continue
        try:
            if t > t_prev:
                sigma = evolve_cm(params, sigma, float(t), dt=max_dt(params), t0=t_prev,
                                  sample_every=10**9).sigmas[-1]
            states.append((t, sigma))
            t_prev = float(t)
        except OptoFeedbackError as exc:
            error = f"{type(exc).__name__}: {exc}"
            states.append((t, None))
    jobs = [(spec, params, report.stable, report.margin, float(t), s) for t, s in states if s is not None]
    done = _map(_measure_time_row, jobs, spec.workers)
    failed = [(_row(spec, params, report.stable, report.margin, None, error, t=float(t)), 0.0)
              for t, s in states if s is None]
    return done + failed


def sweep_rows(spec: SweepSpec) -> tuple[list[str], list[float]]:
    """Rows in axis order and the wall-clock seconds spent on each."""
    if spec.axis == "time":
        out = _time_rows(spec)
    else:
        out = _map(_evaluate_packed, [(spec, float(v)) for v in spec.values()], spec.workers)
    return [r for r, _ in out], [w for _, w in out]


def manifest_core(spec: SweepSpec) -> dict:
    """Reproducibility-relevant part of the manifest (hashed into the CSV).

    The output location and worker counts are left out: they do not change
    any value, so identical runs produce identical bytes.
    """
    from . import __version__

    sweep = spec.to_dict()
    sweep.pop("output_path")
    sweep.pop("workers")
    sweep["bell"].pop("workers")

    return {
        "tool": "optofeedback",
        "version": __version__,
        "backend": _kernels.BACKEND,
        "params": spec.base.as_dict(),
        "sweep": sweep,
        "seed": spec.bell.seed,
    }


def manifest_hash(core: dict) -> str:
    blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    core: dict
    sha256: str
    wall_clock: list[float]
    platform: dict

    def to_json(self) -> str:
        return json.dumps(
            {**self.core, "manifest_sha256": self.sha256, "wall_clock_s": self.wall_clock,
             "platform": self.platform},
            indent=2,
            sort_keys=True,
        )


def manifest_path(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def run_sweep(spec: SweepSpec) -> RunManifest:
    """Execute ``spec`` and write the CSV and its manifest.

    The CSV body depends only on the manifest core (version, backend,
    parameters, sweep, seed), not on worker count or timing.
    """
    rows, wall = sweep_rows(spec)
    core = manifest_core(spec)
    digest = manifest_hash(core)
    out = Path(spec.output_path)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# optofeedback {core['version']} backend={core['backend']}\n")
        fh.write(f"# manifest_sha256 {digest}\n")
        fh.write(",".join(csv_columns(spec)) + "\n")
        for row in rows:
            fh.write(row + "\n")
    manifest = RunManifest(
        core,
        digest,
        wall,
        {"python": platform.python_version(), "numpy": np.__version__},
    )
    manifest_path(out).write_text(manifest.to_json() + "\n", encoding="utf-8")
    return manifest


def read_sweep_csv(path) -> list[dict[str, str]]:
    """Parse a sweep CSV into dicts, skipping ``#`` header lines."""
    import csv

    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
