"""Analytic lower bounds imposed by exponential (HO)CBF conditions.

Continuous time: the equality version of the flattened HOCBF condition is a
linear ODE with characteristic roots ``-lambda_i``, so the slowest admissible
trajectory is ``h_lb(t) = sum_i c_i exp(-lambda_i (t - t0))`` with ``c`` fixed
by the initial values of ``h`` and its first ``r - 1`` derivatives.

Discrete time: ``h_{k+1} >= (1 - lambda) h_k`` iterates to a geometric bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .hocbf_algebra import as_lambdas, flatten_hocbf

RATE_SEPARATION = 1e-9


class DegenerateRatesError(ValueError):
    """Raised when decay rates are too close for an exponential-sum bound."""


@dataclass(frozen=True)
class ExponentialSumBound:
    coefficients: tuple[float, ...]
    rates: tuple[float, ...]
    t0: float = 0.0

    @property
    def relative_degree(self) -> int:
        return len(self.rates)

    def __call__(self, t):
        return eval_bound_ct(self, t)


def vandermonde_matrix(lambdas: Sequence[float]) -> np.ndarray:
    """Matrix with entry ``(p, q) = (-lambda_q)^p``."""
    values = np.asarray(as_lambdas(lambdas))
    return np.vander(-values, increasing=True).T


def check_distinct(rates: Sequence[float], tol: float = RATE_SEPARATION) -> None:
    values = np.sort(np.asarray(rates, dtype=float))
    if len(values) < 2:
        return
    gap = np.min(np.diff(values))
    if gap / values[-1] <= tol:
        raise DegenerateRatesError(
            f"degenerate rates: minimum relative separation {gap / values[-1]:.3g} <= {tol:g}"
        )


def solve_bound_coefficients(
    lambdas: Sequence[float], h_init: Sequence[float], t0: float = 0.0
) -> ExponentialSumBound:
    """Fit the exponential-sum lower bound to ``[h, h', ..., h^(r-1)]`` at ``t0``.

    Raises :class:`DegenerateRatesError` for (nearly) repeated rates.
    """
    rates = as_lambdas(lambdas)
    rhs = np.asarray(h_init, dtype=float)
    if rhs.shape != (len(rates),):
        raise ValueError(f"h_init must hold {len(rates)} values, got shape {rhs.shape}")
    check_distinct(rates)
    M = vandermonde_matrix(rates)
    # LU with partial pivoting
    c = scipy.linalg.solve(M, rhs)
    residual = np.max(np.abs(M @ c - rhs))
    if residual > 1e-8 * (1.0 + np.max(np.abs(rhs))):
        raise DegenerateRatesError(f"degenerate rates: solve residual {residual:.3g}")
    return ExponentialSumBound(tuple(float(v) for v in c), rates, float(t0))


def eval_bound_deriv_ct(bound: ExponentialSumBound, t, j: int = 0):
    """``j``-th time derivative of the bound, ``sum_i c_i (-lambda_i)^j exp(-lambda_i (t - t0))``."""
    if j < 0:
        raise ValueError(f"derivative order must be nonnegative, got {j}")
    tt = np.asarray(t, dtype=float)
    if np.any(tt < bound.t0):
        raise ValueError(f"bound is only defined for t >= t0 = {bound.t0}")
    c = np.asarray(bound.coefficients)
    lam = np.asarray(bound.rates)
    dt = tt[..., None] - bound.t0
    out = np.sum(c * (-lam) ** j * np.exp(-lam * dt), axis=-1)
    return float(out) if out.ndim == 0 else out


def eval_bound_ct(bound: ExponentialSumBound, t):
    return eval_bound_deriv_ct(bound, t, 0)


def ode_residual(bound: ExponentialSumBound, t):
    """Flattened HOCBF operator applied to the bound; zero up to rounding."""
    weights = flatten_hocbf(bound.rates).coefficients
    return sum(w * eval_bound_deriv_ct(bound, t, j) for j, w in enumerate(weights))


def eval_bound_dt(lam: float, h_k0: float, steps: int) -> float:
    """Geometric lower bound ``(1 - lam)^steps * h_k0`` of a discrete exponential CBF."""
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"discrete-time lambda must lie in (0, 1], got {lam}")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    return (1.0 - lam) ** steps * h_k0
