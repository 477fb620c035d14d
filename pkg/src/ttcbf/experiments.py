"""Config files, parameter sweeps and CSV serialization for the experiments.

Config and sweep files are flat ``key = value`` text with ``#`` comments.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import qp
from .hocbf_algebra import lambda_feasibility
from .lower_bounds import ExponentialSumBound, eval_bound_ct
from .plant import ObstacleSpec, RobotState, cbf_derivatives
from .simulation import HOCBF, TTCBF, SimConfig, SimLog, run_simulation, verify_decay_ttcbf

BASE_KEYS = (
    "robot_radius", "obs_radius", "obs_x", "obs_y",
    "init_x", "init_y", "init_vx", "init_vy",
    "y_ref", "vx_ref", "vy_ref",
    "p_vx", "p_vy", "p_y",
    "u_min", "u_max", "dt", "duration", "approach",
)
OPTIONAL_KEYS = {"lambda1": None, "lambda2": None, "gamma": 0.0, "bound_gamma_r1": 0.0}
SWEEP_KEYS = (
    "lambda1_min", "lambda1_max", "lambda1_step",
    "lambda2_min", "lambda2_max", "lambda2_step",
)
LOG_COLUMNS = (
    "step", "t", "x", "y", "vx", "vy", "ux", "uy", "h", "h_dot",
    "constraint_offset", "active_set", "status", "ttcbf_slack",
)
SWEEP_COLUMNS = ("approach", "lambda1", "lambda2", "mean_x_speed", "min_h", "bypass", "infeasible_steps")

BASELINE = {
    "robot_radius": 1.0, "obs_radius": 2.0, "obs_x": 0.0, "obs_y": -3.1,
    "init_x": -10.0, "init_y": 0.0, "init_vx": 10.0, "init_vy": 0.0,
    "y_ref": 0.0, "vx_ref": 10.0, "vy_ref": 0.0,
    "p_vx": 1.0, "p_vy": 1.0, "p_y": 1000.0,
    "u_min": -1000.0, "u_max": 1000.0, "dt": 0.01, "duration": 2.0,
}


class ConfigError(ValueError):
    pass


def parse_key_values(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _float(raw: dict[str, str], key: str) -> float:
    try:
        v = float(raw[key])
    except KeyError:
        raise ConfigError(f"missing required key {key!r}") from None
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {raw[key]!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"key {key!r}: must be finite, got {raw[key]!r}")
    return v


def config_from_mapping(raw: dict[str, str], need_lambdas: bool = True) -> SimConfig:
    allowed = set(BASE_KEYS) | set(OPTIONAL_KEYS) | (set() if need_lambdas else set(SWEEP_KEYS))
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")
    for key in BASE_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    approach = raw["approach"].strip().lower()
    if approach not in (HOCBF, TTCBF):
        raise ConfigError(f"key 'approach': expected 'hocbf' or 'ttcbf', got {raw['approach']!r}")

    lambda1 = _float(raw, "lambda1") if need_lambdas or "lambda1" in raw else (0.5 if approach == TTCBF else 1.0)
    if approach == HOCBF and (need_lambdas or "lambda2" in raw):
        lambda2 = _float(raw, "lambda2")
    elif approach == HOCBF:
        lambda2 = 1.0
    else:
        lambda2 = None
    r_obs, r_robot = _float(raw, "obs_radius"), _float(raw, "robot_radius")
    if not (r_obs > 0 and r_robot > 0):
        raise ConfigError("keys 'obs_radius' and 'robot_radius' must be positive")
    obstacle = ObstacleSpec(_float(raw, "obs_x"), _float(raw, "obs_y"), r_obs, r_robot)
    try:
        return SimConfig(
            obstacle=obstacle,
            initial_state=RobotState(_float(raw, "init_x"), _float(raw, "init_y"), _float(raw, "init_vx"), _float(raw, "init_vy")),
            refs=qp.References(_float(raw, "vx_ref"), _float(raw, "vy_ref"), _float(raw, "y_ref")),
            penalties=qp.Penalties(_float(raw, "p_vx"), _float(raw, "p_vy"), _float(raw, "p_y")),
            dt=_float(raw, "dt"),
            duration=_float(raw, "duration"),
            approach=approach,
            lambda1=lambda1,
            lambda2=lambda2,
            gamma=_float(raw, "gamma") if "gamma" in raw else 0.0,
            bound_gamma_r1=_float(raw, "bound_gamma_r1") if "bound_gamma_r1" in raw else 0.0,
            u_min=_float(raw, "u_min"),
            u_max=_float(raw, "u_max"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> SimConfig:
    return config_from_mapping(parse_key_values(Path(path).read_text()))


def baseline_config(approach: str = TTCBF, lambda1: float = 0.5, lambda2: float | None = None, gamma: float = 0.0) -> SimConfig:
    raw = {k: repr(v) for k, v in BASELINE.items()}
    raw.update(approach=approach, lambda1=repr(lambda1), gamma=repr(gamma))
    if lambda2 is not None:
        raw["lambda2"] = repr(lambda2)
    return config_from_mapping(raw)


def format_float(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


# --- per-step logs -----------------------------------------------------------


def log_rows(log: SimLog) -> Iterable[list[str]]:
    for k in range(log.n_steps):
        x, y, vx, vy = log.states[k]
        slack = "" if log.ttcbf_slack is None else format_float(log.ttcbf_slack[k])
        yield [
            str(k),
            format_float(log.time[k]),
            format_float(x), format_float(y), format_float(vx), format_float(vy),
            format_float(log.inputs[k, 0]), format_float(log.inputs[k, 1]),
            format_float(log.h[k]), format_float(log.h_dot[k]),
            format_float(log.constraint_offset[k]),
            "|".join(log.active_sets[k]),
            log.statuses[k],
            slack,
        ]


def write_log_csv(log: SimLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        w.writerows(log_rows(log))


def read_log_csv(path, config: SimConfig) -> SimLog:
    """Rebuild a :class:`SimLog` from a per-step CSV (final state is the last logged row)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LOG_COLUMNS:
            raise ConfigError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = list(reader)
    n = len(rows)
    col = lambda name: np.array([float(r[name]) for r in rows]) if n else np.zeros(0)
    states = np.column_stack([col("x"), col("y"), col("vx"), col("vy")]) if n else np.zeros((0, 4))
    slack = None
    if n and rows[0]["ttcbf_slack"] != "":
        slack = col("ttcbf_slack")
    final = RobotState(*states[-1]) if n else config.initial_state
    return SimLog(
        config=config,
        time=col("t"),
        states=states,
        inputs=np.column_stack([col("ux"), col("uy")]) if n else np.zeros((0, 2)),
        h=col("h"),
        h_dot=col("h_dot"),
        constraint_offset=col("constraint_offset"),
        active_sets=[tuple(a for a in r["active_set"].split("|") if a) for r in rows],
        statuses=[r["status"] for r in rows],
        ttcbf_slack=slack,
        final_state=final,
    )


def summary_line(log: SimLog) -> str:
    return (
        f"steps={log.n_steps} mean_x_speed={format_float(log.mean_x_speed)} "
        f"min_h={format_float(log.min_h)} bypass={str(log.bypassed).lower()} "
        f"infeasible_steps={log.infeasible_steps}"
    )


# --- sweeps ------------------------------------------------------------------


def grid(lo: float, hi: float, step: float) -> list[float]:
    if not step > 0.0:
        raise ConfigError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise ConfigError(f"empty range [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    lambda1_values: tuple[float, ...]
    lambda2_values: tuple[float, ...] = ()

    @property
    def approach(self) -> str:
        return self.base.approach

    def points(self) -> list[tuple[float, float | None]]:
        if self.approach == HOCBF:
            return [(a, b) for a in self.lambda1_values for b in self.lambda2_values]
        return [(a, None) for a in self.lambda1_values]

    def feasibility_warnings(self) -> list[str]:
        """Warn about lambda1 grid points below the initial-condition sufficient bound."""
        if self.approach != HOCBF:
            return []
        stack = cbf_derivatives(self.base.initial_state, self.base.obstacle)
        lo = min(self.lambda1_values)
        report = lambda_feasibility((lo, max(self.lambda2_values)), (stack.h, stack.h_dot))
        check = report.checks[0]
        if check.applicable and not check.satisfied:
            return [f"lambda1 = {lo} is below -h_dot/h = {check.bound:.4f} at the initial state"]
        return []


def sweep_spec(approach: str = TTCBF, **overrides) -> SweepSpec:
    """Sweep over the default lambda grids on the baseline scenario."""
    raw = {k: repr(v) for k, v in BASELINE.items()}
    raw["approach"] = approach
    raw.update({k: repr(v) if not isinstance(v, str) else v for k, v in overrides.items()})
    return sweep_from_mapping(raw)


def sweep_from_mapping(raw: dict[str, str]) -> SweepSpec:
    base = config_from_mapping(raw, need_lambdas=False)
    get = lambda key, default: _float(raw, key) if key in raw else default
    if base.approach == HOCBF:
        l1 = grid(get("lambda1_min", 2.1), get("lambda1_max", 10.0), get("lambda1_step", 0.1))
        l2 = grid(get("lambda2_min", 0.5), get("lambda2_max", 10.0), get("lambda2_step", 0.1))
        if min(l1) <= 0 or min(l2) <= 0:
            raise ConfigError("hocbf lambdas must be positive")
        return SweepSpec(base, tuple(l1), tuple(l2))
    l1 = grid(get("lambda1_min", 0.01), get("lambda1_max", 0.5), get("lambda1_step", 0.01))
    if min(l1) <= 0 or max(l1) > 1:
        raise ConfigError("key 'lambda1_min'/'lambda1_max': ttcbf lambda1 must lie in (0, 1]")
    return SweepSpec(base, tuple(l1))


def load_sweep(path) -> SweepSpec:
    return sweep_from_mapping(parse_key_values(Path(path).read_text()))


@dataclass(frozen=True)
class SweepRow:
    approach: str
    lambda1: float
    lambda2: float | None
    mean_x_speed: float | None
    min_h: float | None
    bypass: bool
    infeasible_steps: int
    decay_ok: bool | None = None  # ttcbf only: per-step and cumulative geometric decay held
    dominance_margin: float | None = None

    def as_csv(self) -> list[str]:
        return [
            self.approach,
            format_float(self.lambda1),
            format_float(self.lambda2),
            format_float(self.mean_x_speed),
            format_float(self.min_h),
            str(self.bypass).lower(),
            str(self.infeasible_steps),
        ]


def summarize(log: SimLog) -> SweepRow:
    cfg = log.config
    decay = verify_decay_ttcbf(log, cfg.lambda1).passed if cfg.approach == TTCBF else None
    return SweepRow(cfg.approach, cfg.lambda1, cfg.lambda2, log.mean_x_speed, log.min_h,
                    log.bypassed, log.infeasible_steps, decay)


def _run_point(args) -> SweepRow:
    base, l1, l2 = args
    return summarize(run_simulation(base.with_params(l1, l2)))


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Run every grid point; rows come back sorted by ``(lambda1, lambda2)`` whatever ``jobs`` is."""
    tasks = [(spec.base, l1, l2) for l1, l2 in spec.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_run_point(t) for t in tasks]
    return sorted(rows, key=lambda r: (r.lambda1, -math.inf if r.lambda2 is None else r.lambda2))


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows(r.as_csv() for r in rows)


# --- lower bounds --------------------------------------------------------------

BOUND_COLUMNS = ("quantity", "index", "t", "value")


def lower_bound_rows(bound: ExponentialSumBound, times: Sequence[float]) -> list[list[str]]:
    rows = []
    for i, (c, lam) in enumerate(zip(bound.coefficients, bound.rates), 1):
        rows.append(["coefficient", str(i), "", format_float(c)])
        rows.append(["rate", str(i), "", format_float(lam)])
    values = eval_bound_ct(bound, np.asarray(times, dtype=float)) if len(times) else []
    for t, v in zip(times, np.atleast_1d(values)):
        rows.append(["h_lb", "", format_float(t), format_float(v)])
    return rows


def write_lower_bound_csv(bound: ExponentialSumBound, times: Sequence[float], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOUND_COLUMNS)
        w.writerows(lower_bound_rows(bound, times))


def read_lower_bound_csv(path) -> tuple[list[float], list[float], list[tuple[float, float]]]:
    """Return ``(coefficients, rates, [(t, h_lb), ...])``."""
    coeffs, rates, samples = {}, {}, []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["quantity"] == "coefficient":
                coeffs[int(row["index"])] = float(row["value"])
            elif row["quantity"] == "rate":
                rates[int(row["index"])] = float(row["value"])
            else:
                samples.append((float(row["t"]), float(row["value"])))
    return [coeffs[i] for i in sorted(coeffs)], [rates[i] for i in sorted(rates)], samples
