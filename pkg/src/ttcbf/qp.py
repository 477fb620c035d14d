"""Per-step safety-filter QP over the acceleration ``u = (ux, uy)``.

The objective is a separable strictly convex quadratic
``0.5 * sum_i H_i u_i^2 + g . u + const`` and there are at most five
inequalities (one CBF row, four box rows). With two unknowns every vertex of
the active-set lattice has at most two constraints, so the solver enumerates
all of them and keeps the KKT point. Arithmetic is done on Python floats,
which is far faster than numpy at this size.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .plant import LinearInputConstraint, RobotState

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MULTIPLIER_TOL = 1e-10
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class References:
    vx_ref: float = 10.0
    vy_ref: float = 0.0
    y_ref: float = 0.0


@dataclass(frozen=True)
class Penalties:
    p_vx: float = 1.0
    p_vy: float = 1.0
    p_y: float = 1000.0


@dataclass(frozen=True)
class QpProblem:
    quadratic_diag: tuple[float, float]
    linear: tuple[float, float]
    constant: float = 0.0
    inequalities: tuple[LinearInputConstraint, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not all(h > 0.0 for h in self.quadratic_diag):
            raise ValueError(f"objective must be strictly convex, got curvature {self.quadratic_diag}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"c{i}" for i in range(len(self.inequalities))))
        if len(self.labels) != len(self.inequalities):
            raise ValueError("one label per inequality is required")

    def objective(self, u: Sequence[float]) -> float:
        (h0, h1), (g0, g1) = self.quadratic_diag, self.linear
        return 0.5 * (h0 * u[0] * u[0] + h1 * u[1] * u[1]) + g0 * u[0] + g1 * u[1] + self.constant

    def unconstrained_minimizer(self) -> tuple[float, float]:
        return (-self.linear[0] / self.quadratic_diag[0], -self.linear[1] / self.quadratic_diag[1])

    def constraint_values(self, u: Sequence[float]) -> list[float]:
        return [c.value(u) for c in self.inequalities]


@dataclass(frozen=True)
class QpSolution:
    u: tuple[float, float]
    status: str
    active_set: tuple[str, ...] = ()
    objective_value: float = math.inf
    multipliers: dict[str, float] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def box_constraints(u_min, u_max) -> tuple[list[LinearInputConstraint], list[str]]:
    lo = per_axis(u_min)
    hi = per_axis(u_max)
    if lo[0] > hi[0] or lo[1] > hi[1]:
        raise ValueError(f"empty input box: u_min={lo}, u_max={hi}")
    rows = [
        LinearInputConstraint((1.0, 0.0), -lo[0]),
        LinearInputConstraint((-1.0, 0.0), hi[0]),
        LinearInputConstraint((0.0, 1.0), -lo[1]),
        LinearInputConstraint((0.0, -1.0), hi[1]),
    ]
    return rows, ["ux_min", "ux_max", "uy_min", "uy_max"]


def per_axis(v) -> tuple[float, float]:
    if isinstance(v, (int, float)):
        return (float(v), float(v))
    a, b = v
    return (float(a), float(b))


def build_qp(
    state: RobotState,
    refs: References,
    penalties: Penalties,
    dt: float,
    cbf: LinearInputConstraint | None,
    u_min=-1000.0,
    u_max=1000.0,
) -> QpProblem:
    """Expand the one-step tracking cost under zero-order hold into a QP.

    Predictions: ``vx+ = vx + dt ux``, ``vy+ = vy + dt uy`` and
    ``y+ = y + dt vy + dt^2/2 uy``; each squared tracking error is weighted by
    its penalty.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if min(penalties.p_vx, penalties.p_vy, penalties.p_y) < 0.0:
        raise ValueError(f"penalties must be nonnegative: {penalties}")
    half_dt2 = 0.5 * dt * dt
    evx = state.vx - refs.vx_ref
    evy = state.vy - refs.vy_ref
    ey = state.y + dt * state.vy - refs.y_ref
    hx = 2.0 * penalties.p_vx * dt * dt
    hy = 2.0 * (penalties.p_vy * dt * dt + penalties.p_y * half_dt2 * half_dt2)
    if not (hx > 0.0 and hy > 0.0):
        raise ValueError("penalties give zero curvature on an input axis")
    gx = 2.0 * penalties.p_vx * dt * evx
    gy = 2.0 * (penalties.p_vy * dt * evy + penalties.p_y * half_dt2 * ey)
    const = penalties.p_vx * evx * evx + penalties.p_vy * evy * evy + penalties.p_y * ey * ey

    rows, labels = box_constraints(u_min, u_max)
    if cbf is not None:
        rows = [cbf] + rows
        labels = ["cbf"] + labels
    return QpProblem((hx, hy), (gx, gy), const, tuple(rows), tuple(labels))


def _candidate(problem: QpProblem, idx: tuple[int, ...]):
    """KKT point with the constraints in ``idx`` held as equalities, or None if singular."""
    h0, h1 = problem.quadratic_diag
    g0, g1 = problem.linear
    if not idx:
        return (-g0 / h0, -g1 / h1), ()
    if len(idx) == 1:
        c = problem.inequalities[idx[0]]
        a0, a1 = c.normal
        # H u + g = mu a,  a.u + offset = 0
        s = a0 * a0 / h0 + a1 * a1 / h1
        if s <= 0.0 or not math.isfinite(s):
            return None
        mu = (a0 * g0 / h0 + a1 * g1 / h1 - c.offset) / s
        return ((mu * a0 - g0) / h0, (mu * a1 - g1) / h1), (mu,)
    c1 = problem.inequalities[idx[0]]
    c2 = problem.inequalities[idx[1]]
    (a, b), (c, d) = c1.normal, c2.normal
    det = a * d - b * c
    if abs(det) <= 1e-12 * math.hypot(a, b) * math.hypot(c, d):
        return None
    u0 = (-c1.offset * d + c2.offset * b) / det
    u1 = (-c2.offset * a + c1.offset * c) / det
    # A^T mu = H u + g
    r0 = h0 * u0 + g0
    r1 = h1 * u1 + g1
    mu1 = (d * r0 - c * r1) / det
    mu2 = (a * r1 - b * r0) / det
    return (u0, u1), (mu1, mu2)


def solve_qp(problem: QpProblem) -> QpSolution:
    """Exact minimizer by enumerating active sets of size zero, one, then two.

    A candidate is accepted when all multipliers are at least ``-1e-10`` and
    every inequality holds up to a small scale-relative tolerance. The
    objective is strictly convex, so every accepted candidate is the same
    point; the search stops at the smallest size that yields one and breaks
    ties by lowest objective, then lexicographic label order.
    Returns status ``infeasible`` when no candidate is accepted.
    """
    n = len(problem.inequalities)
    for size in range(min(n, 2) + 1):
        accepted = []
        for idx in itertools.combinations(range(n), size):
            cand = _candidate(problem, idx)
            if cand is None:
                continue
            u, mu = cand
            if any(m < -MULTIPLIER_TOL for m in mu):
                continue
            if not (math.isfinite(u[0]) and math.isfinite(u[1])):
                continue
            if _feasible(problem, u):
                accepted.append((problem.objective(u), idx, u, mu))
        if accepted:
            best = min(a[0] for a in accepted)
            tol = 1e-12 * max(1.0, abs(best))
            ties = [a for a in accepted if a[0] <= best + tol]
            f, idx, u, mu = min(ties, key=lambda a: sorted(problem.labels[i] for i in a[1]))
            labels = tuple(problem.labels[i] for i in idx)
            return QpSolution(u, OPTIMAL, labels, f, dict(zip(labels, mu)))
    return QpSolution((math.nan, math.nan), INFEASIBLE)


def _feasible(problem: QpProblem, u) -> bool:
    for c in problem.inequalities:
        v = c.normal[0] * u[0] + c.normal[1] * u[1]
        if v + c.offset < -FEASIBILITY_TOL * max(1.0, abs(c.offset), abs(v)):
            return False
    return True


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> tuple[float, float]:
    """(stationarity norm, worst constraint violation) at an optimal solution."""
    u = solution.u
    grad = [problem.quadratic_diag[i] * u[i] + problem.linear[i] for i in range(2)]
    for label, mu in solution.multipliers.items():
        a = problem.inequalities[problem.labels.index(label)].normal
        grad[0] -= mu * a[0]
        grad[1] -= mu * a[1]
    violation = max([0.0] + [-v for v in problem.constraint_values(u)])
    return math.hypot(*grad), violation
