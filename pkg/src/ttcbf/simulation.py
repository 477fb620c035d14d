"""Closed-loop simulation of the CBF-filtered double integrator and log checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import qp
from .hocbf_algebra import as_lambdas
from .lower_bounds import ExponentialSumBound, eval_bound_ct, solve_bound_coefficients
from .plant import (
    ObstacleSpec,
    RobotState,
    cbf_derivatives,
    cbf_value,
    hocbf_constraint,
    taylor_truncation_slack,
    ttcbf_constraint,
)

HOCBF = "hocbf"
TTCBF = "ttcbf"


@dataclass(frozen=True)
class SimConfig:
    obstacle: ObstacleSpec = ObstacleSpec(0.0, -3.1, 2.0, 1.0)
    initial_state: RobotState = RobotState(-10.0, 0.0, 10.0, 0.0)
    refs: qp.References = qp.References()
    penalties: qp.Penalties = qp.Penalties()
    dt: float = 0.01
    duration: float = 2.0
    approach: str = TTCBF
    lambda1: float = 0.5
    lambda2: float | None = None
    gamma: float = 0.0
    bound_gamma_r1: float = 0.0
    u_min: float | tuple[float, float] = -1000.0
    u_max: float | tuple[float, float] = 1000.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.duration < 0.0:
            raise ValueError(f"duration must be nonnegative, got {self.duration}")
        if self.approach == HOCBF:
            if self.lambda2 is None:
                raise ValueError("hocbf approach needs lambda2")
            as_lambdas((self.lambda1, self.lambda2))
        elif self.approach == TTCBF:
            if not 0.0 < self.lambda1 <= 1.0:
                raise ValueError(f"ttcbf lambda1 must lie in (0, 1], got {self.lambda1}")
            if self.gamma < 0.0:
                raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        else:
            raise ValueError(f"unknown approach {self.approach!r}")

    @property
    def n_steps(self) -> int:
        # guard against 2.0 / 0.01 landing just below an integer
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def lambdas(self) -> tuple[float, ...]:
        if self.approach == HOCBF:
            return (self.lambda1, self.lambda2)
        return (self.lambda1,)

    def with_params(self, lambda1: float, lambda2: float | None = None) -> "SimConfig":
        return replace(self, lambda1=lambda1, lambda2=lambda2 if lambda2 is not None else self.lambda2)


@dataclass
class SimLog:
    """Per-step record; row ``k`` holds the state at ``t_k`` and the input applied over ``[t_k, t_k+1)``."""

    config: SimConfig
    time: np.ndarray
    states: np.ndarray  # (n, 4): x, y, vx, vy
    inputs: np.ndarray  # (n, 2)
    h: np.ndarray
    h_dot: np.ndarray
    constraint_offset: np.ndarray
    active_sets: list[tuple[str, ...]]
    statuses: list[str]
    ttcbf_slack: np.ndarray | None
    final_state: RobotState = field(default=None)

    @property
    def n_steps(self) -> int:
        return len(self.time)

    @property
    def mean_x_speed(self) -> float | None:
        return float(np.mean(self.states[:, 2])) if self.n_steps else None

    @property
    def min_h(self) -> float | None:
        return float(np.min(self.h)) if self.n_steps else None

    @property
    def bypassed(self) -> bool:
        obs = self.config.obstacle
        return self.final_state.x > obs.x_obs + obs.safe_distance

    @property
    def infeasible_steps(self) -> int:
        return sum(s == qp.INFEASIBLE for s in self.statuses)

    @property
    def first_infeasible_step(self) -> int | None:
        return next((k for k, s in enumerate(self.statuses) if s == qp.INFEASIBLE), None)

    def activation_step(self) -> int | None:
        return next((k for k, a in enumerate(self.active_sets) if "cbf" in a), None)


def step_dynamics(state: RobotState, u: Sequence[float], dt: float) -> RobotState:
    """Exact zero-order-hold update of the planar double integrator."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    half_dt2 = 0.5 * dt * dt
    return RobotState(
        state.x + dt * state.vx + half_dt2 * u[0],
        state.y + dt * state.vy + half_dt2 * u[1],
        state.vx + dt * u[0],
        state.vy + dt * u[1],
    )


def safety_constraint(config: SimConfig, state: RobotState):
    stack = cbf_derivatives(state, config.obstacle)
    if config.approach == HOCBF:
        return stack, hocbf_constraint(stack, config.lambdas)
    return stack, ttcbf_constraint(stack, config.lambda1, config.gamma, config.dt)


def run_simulation(config: SimConfig) -> SimLog:
    """Filter the tracking controller through the CBF QP at every sample.

    When the QP is infeasible the box-clamped unconstrained minimizer is
    applied and the step is logged as infeasible.
    """
    n = config.n_steps
    states = np.zeros((n, 4))
    inputs = np.zeros((n, 2))
    h = np.zeros(n)
    h_dot = np.zeros(n)
    offsets = np.zeros(n)
    slack = np.zeros(n) if config.approach == TTCBF else None
    active_sets: list[tuple[str, ...]] = []
    statuses: list[str] = []
    lo = qp.per_axis(config.u_min)
    hi = qp.per_axis(config.u_max)

    state = config.initial_state
    for k in range(n):
        stack, cbf = safety_constraint(config, state)
        problem = qp.build_qp(state, config.refs, config.penalties, config.dt, cbf, config.u_min, config.u_max)
        sol = qp.solve_qp(problem)
        if sol.optimal:
            u = sol.u
        else:
            ux, uy = problem.unconstrained_minimizer()
            u = (min(max(ux, lo[0]), hi[0]), min(max(uy, lo[1]), hi[1]))
        nxt = step_dynamics(state, u, config.dt)

        states[k] = (state.x, state.y, state.vx, state.vy)
        inputs[k] = u
        h[k] = stack.h
        h_dot[k] = stack.h_dot
        offsets[k] = cbf.offset
        active_sets.append(sol.active_set)
        statuses.append(sol.status)
        if slack is not None:
            slack[k] = taylor_truncation_slack(
                stack.h,
                cbf_value(nxt, config.obstacle),
                config.lambda1,
                config.gamma,
                config.bound_gamma_r1,
                config.dt,
            )
        state = nxt

    return SimLog(
        config=config,
        time=np.arange(n) * config.dt,
        states=states,
        inputs=inputs,
        h=h,
        h_dot=h_dot,
        constraint_offset=offsets,
        active_sets=active_sets,
        statuses=statuses,
        ttcbf_slack=slack,
        final_state=state,
    )


@dataclass(frozen=True)
class DominanceReport:
    anchor: str
    anchor_step: int | None
    bound: ExponentialSumBound | None
    min_margin: float | None  # min over steps of h(t_k) - h_lb(t_k)
    tolerance: float | None
    passed: bool
    never_active: bool = False


def verify_dominance_hocbf(log: SimLog, lambdas: Sequence[float], anchor: str = "start") -> DominanceReport:
    """Check that logged ``h`` stays above the exponential-sum bound fitted at the anchor.

    ``anchor="activation"`` anchors at the first step whose active set holds
    the CBF row. The check passes when ``h - h_lb >= -1e-3 * h(anchor)`` for
    every step from the anchor on.
    """
    lam = as_lambdas(lambdas, relative_degree=2)
    if anchor == "start":
        k0 = 0 if log.n_steps else None
    elif anchor == "activation":
        k0 = log.activation_step()
        if k0 is None:
            return DominanceReport(anchor, None, None, None, None, False, never_active=True)
    else:
        raise ValueError(f"anchor must be 'start' or 'activation', got {anchor!r}")
    if k0 is None:
        return DominanceReport(anchor, None, None, None, None, True)
    bound = solve_bound_coefficients(lam, (log.h[k0], log.h_dot[k0]), t0=float(log.time[k0]))
    margin = log.h[k0:] - eval_bound_ct(bound, log.time[k0:])
    tol = 1e-3 * abs(log.h[k0])
    worst = float(np.min(margin))
    return DominanceReport(anchor, k0, bound, worst, tol, worst >= -tol)


@dataclass(frozen=True)
class DecayReport:
    step_violations: tuple[int, ...]  # k such that h_{k+1} < (1 - lambda) h_k - tol
    cumulative_violations: tuple[tuple[int, int], ...]  # (k0, k) pairs
    worst_step_margin: float | None

    @property
    def passed(self) -> bool:
        return not self.step_violations and not self.cumulative_violations


def verify_decay_ttcbf(log_or_h, lambda1: float, max_pairs: int = 100) -> DecayReport:
    """Per-step and cumulative geometric-decay checks on a TTCBF run.

    Tolerance is ``1e-6 * max(1, |h_k0|)`` relative to the anchor sample.
    Accepts a :class:`SimLog` or a bare sequence of ``h`` samples.
    """
    if not 0.0 < lambda1 <= 1.0:
        raise ValueError(f"lambda1 must lie in (0, 1], got {lambda1}")
    h = np.asarray(log_or_h.h if isinstance(log_or_h, SimLog) else log_or_h, dtype=float)
    if len(h) < 2:
        return DecayReport((), (), None)
    tol = 1e-6 * np.maximum(1.0, np.abs(h))
    margin = h[1:] - (1.0 - lambda1) * h[:-1]
    steps = tuple(int(k) for k in np.flatnonzero(margin < -tol[:-1]))

    pairs: list[tuple[int, int]] = []
    factor = 1.0 - lambda1
    for k0 in range(len(h) - 1):
        powers = factor ** np.arange(1, len(h) - k0)
        bad = np.flatnonzero(h[k0 + 1 :] < powers * h[k0] - tol[k0])
        pairs.extend((k0, k0 + 1 + int(j)) for j in bad[: max_pairs - len(pairs)])
        if len(pairs) >= max_pairs:
            break
    return DecayReport(steps, tuple(pairs), float(np.min(margin)))
