"""Elementary symmetric polynomials and the flattened HOCBF condition.

With linear class-K functions ``alpha_i(z) = lambda_i * z`` the auxiliary
chain ``Psi_i = d/dt Psi_{i-1} + lambda_i * Psi_{i-1}`` collapses into a single
linear combination of ``h, h', ..., h^(r)`` whose weights are elementary
symmetric polynomials of the lambdas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def as_lambdas(lambdas: Sequence[float], relative_degree: int | None = None) -> tuple[float, ...]:
    """Validate a vector of linear class-K parameters and return it as a tuple."""
    values = tuple(float(v) for v in np.atleast_1d(np.asarray(lambdas, dtype=float)))
    if len(values) == 0:
        raise ValueError("need at least one lambda")
    if relative_degree is not None and len(values) != relative_degree:
        raise ValueError(f"expected {relative_degree} lambdas, got {len(values)}")
    bad = [v for v in values if not (np.isfinite(v) and v > 0.0)]
    if bad:
        raise ValueError(f"lambdas must be finite and strictly positive, got {bad}")
    return values


def esp_table(values: Sequence[float]) -> list[float]:
    # running product prod_i (1 + lambda_i z); entry k is e_k
    e = [1.0]
    for lam in values:
        nxt = e + [0.0]
        for k in range(len(e), 0, -1):
            nxt[k] += lam * e[k - 1]
        e = nxt
    return e


def elem_sym_poly(lambdas: Sequence[float], k: int) -> float:
    """Elementary symmetric polynomial ``e_k`` of ``lambdas``.

    Out-of-range orders follow the usual convention: ``e_0 = 1`` and
    ``e_k = 0`` for ``k < 0`` or ``k > len(lambdas)``.
    """
    values = [float(v) for v in lambdas]
    if not values:
        raise ValueError("lambdas must be nonempty")
    if k < 0 or k > len(values):
        return 0.0
    return esp_table(values)[k]


@dataclass(frozen=True)
class FlattenedCondition:
    """Weights of ``sum_j coefficients[j] * h^(j) >= 0``; the last weight is 1."""

    coefficients: tuple[float, ...]

    @property
    def relative_degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, derivatives: Sequence[float]) -> float:
        if len(derivatives) != len(self.coefficients):
            raise ValueError(
                f"need {len(self.coefficients)} derivative values, got {len(derivatives)}"
            )
        return float(sum(c * d for c, d in zip(self.coefficients, derivatives)))


def flatten_hocbf(lambdas: Sequence[float]) -> FlattenedCondition:
    """Closed-form weights ``coefficients[j] = e_{r-j}(lambda_1..lambda_r)``."""
    values = as_lambdas(lambdas)
    e = esp_table(values)
    r = len(values)
    return FlattenedCondition(tuple(e[r - j] for j in range(r + 1)))


def psi_chain_coefficients(lambdas: Sequence[float], i: int) -> list[float]:
    """Weights of ``Psi_i`` over ``(h, h', ..., h^(i))`` by unrolling the chain.

    Each step differentiates (shift every weight up one derivative order) and
    adds ``lambda_i`` times the previous auxiliary function. Deliberately does
    not use the symmetric-polynomial closed form so it can serve as a check on
    :func:`flatten_hocbf`.
    """
    values = as_lambdas(lambdas)
    if not 1 <= i <= len(values):
        raise ValueError(f"chain index must lie in 1..{len(values)}, got {i}")
    psi = [1.0]  # Psi_0 = h
    for lam in values[:i]:
        shifted = [0.0] + psi
        scaled = [lam * c for c in psi] + [0.0]
        psi = [a + b for a, b in zip(shifted, scaled)]
    return psi


@dataclass(frozen=True)
class LambdaCheck:
    index: int  # 1-based position in the lambda vector
    value: float
    bound: float | None  # None when the sufficient condition does not apply
    satisfied: bool
    applicable: bool


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[LambdaCheck, ...]
    last_positive: bool

    @property
    def feasible(self) -> bool:
        return self.last_positive and all(c.satisfied for c in self.checks if c.applicable)

    @property
    def inapplicable(self) -> tuple[int, ...]:
        return tuple(c.index for c in self.checks if not c.applicable)


def lambda_feasibility(lambdas: Sequence[float], h_init: Sequence[float]) -> FeasibilityReport:
    """Check the sufficient initial-condition bounds on the HOCBF parameters.

    For ``i = 1..r-1`` the requirement is ``lambda_i >= -h^(i) / h^(i-1)``, and
    ``lambda_r > 0``. A check whose denominator ``h^(i-1)`` is not positive is
    reported as inapplicable instead of failing.
    """
    values = [float(v) for v in lambdas]
    h = [float(v) for v in h_init]
    if len(values) != len(h):
        raise ValueError(
            f"lambdas and h_init must have equal length, got {len(values)} and {len(h)}"
        )
    if not values:
        raise ValueError("lambdas must be nonempty")
    checks = []
    for i in range(1, len(values)):
        lam = values[i - 1]
        denom = h[i - 1]
        if denom <= 0.0:
            checks.append(LambdaCheck(i, lam, None, False, False))
            continue
        bound = -h[i] / denom
        checks.append(LambdaCheck(i, lam, bound, lam >= bound, True))
    return FeasibilityReport(tuple(checks), values[-1] > 0.0)
