"""Planar double integrator, squared-distance CBF and the two CBF constraints.

State is ``(x, y, vx, vy)`` and the input is the acceleration ``u = (ux, uy)``.
The candidate barrier
``h = (x - x_obs)^2 + (y - y_obs)^2 - (r_robot + r_obs)^2`` has relative
degree two, so ``h'' = a + b . u`` is the first derivative touching ``u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hocbf_algebra import as_lambdas, flatten_hocbf


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.vx, self.vy)):
            raise ValueError(f"state must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])


@dataclass(frozen=True)
class ObstacleSpec:
    x_obs: float
    y_obs: float
    r_obs: float
    r_robot: float

    def __post_init__(self):
        if not (self.r_obs > 0 and self.r_robot > 0):
            raise ValueError("radii must be positive")

    @property
    def safe_distance(self) -> float:
        return self.r_robot + self.r_obs


@dataclass(frozen=True)
class DerivativeStack:
    """``h``, ``h'`` and the input-affine split ``h'' = h_ddot_drift + h_ddot_input . u``."""

    h: float
    h_dot: float
    h_ddot_drift: float
    h_ddot_input: tuple[float, float]

    def h_ddot(self, u: Sequence[float]) -> float:
        return self.h_ddot_drift + self.h_ddot_input[0] * u[0] + self.h_ddot_input[1] * u[1]


@dataclass(frozen=True)
class LinearInputConstraint:
    """Scalar inequality ``normal . u + offset >= 0``."""

    normal: tuple[float, float]
    offset: float

    def value(self, u: Sequence[float]) -> float:
        return self.normal[0] * u[0] + self.normal[1] * u[1] + self.offset


def cbf_value(state: RobotState, obs: ObstacleSpec) -> float:
    dx = state.x - obs.x_obs
    dy = state.y - obs.y_obs
    return dx * dx + dy * dy - obs.safe_distance**2


def cbf_derivatives(state: RobotState, obs: ObstacleSpec) -> DerivativeStack:
    dx = state.x - obs.x_obs
    dy = state.y - obs.y_obs
    return DerivativeStack(
        h=dx * dx + dy * dy - obs.safe_distance**2,
        h_dot=2.0 * dx * state.vx + 2.0 * dy * state.vy,
        h_ddot_drift=2.0 * (state.vx**2 + state.vy**2),
        h_ddot_input=(2.0 * dx, 2.0 * dy),
    )


def assemble_flattened_constraint(
    lambdas: Sequence[float],
    drift_derivatives: Sequence[float],
    top_drift: float,
    top_input: Sequence[float],
) -> LinearInputConstraint:
    """General-degree HOCBF constraint from ``[h, ..., h^(r-1)]`` and ``h^(r) = top_drift + top_input . u``."""
    weights = flatten_hocbf(lambdas).coefficients
    r = len(weights) - 1
    if len(drift_derivatives) != r:
        raise ValueError(f"relative degree {r} needs {r} input-free derivatives, got {len(drift_derivatives)}")
    offset = top_drift + sum(w * d for w, d in zip(weights[:-1], drift_derivatives))
    return LinearInputConstraint((float(top_input[0]), float(top_input[1])), float(offset))


def hocbf_constraint(stack: DerivativeStack, lambdas: Sequence[float]) -> LinearInputConstraint:
    """``h'' + (l1 + l2) h' + l1 l2 h >= 0`` as a constraint on ``u``."""
    lam = as_lambdas(lambdas)
    if len(lam) != 2:
        raise ValueError(f"the double-integrator barrier has relative degree 2, got {len(lam)} lambdas")
    return assemble_flattened_constraint(lam, (stack.h, stack.h_dot), stack.h_ddot_drift, stack.h_ddot_input)


def ttcbf_constraint(
    stack: DerivativeStack, lambda1: float, gamma: float, dt: float, r: int = 2
) -> LinearInputConstraint:
    """Truncated-Taylor condition ``dt h' + dt^2/2 h'' + lambda1 h >= gamma dt^(r+1)``."""
    if r != 2:
        raise ValueError(f"the double-integrator barrier has relative degree 2, got r={r}")
    if not 0.0 < lambda1 <= 1.0:
        raise ValueError(f"lambda1 must lie in (0, 1], got {lambda1}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    half_dt2 = 0.5 * dt * dt
    normal = (half_dt2 * stack.h_ddot_input[0], half_dt2 * stack.h_ddot_input[1])
    offset = dt * stack.h_dot + half_dt2 * stack.h_ddot_drift + lambda1 * stack.h - gamma * dt ** (r + 1)
    return LinearInputConstraint(normal, offset)


def taylor_truncation_slack(
    h_k: float,
    h_k1: float,
    lambda1: float,
    gamma: float = 0.0,
    bound_gamma_r1: float = 0.0,
    dt: float = 0.01,
    r: int = 2,
) -> float:
    """Margin of ``h_{k+1} >= (1 - lambda1) h_k + (gamma - Gamma/(r+1)!) dt^(r+1)``.

    Nonnegative whenever ``|h^(r+1)| <= bound_gamma_r1`` over the step and the
    applied input satisfied :func:`ttcbf_constraint`.
    """
    shift = (gamma - bound_gamma_r1 / math.factorial(r + 1)) * dt ** (r + 1)
    return h_k1 - (h_k - lambda1 * h_k + shift)
