"""Non-k-separability inequalities evaluated on density-matrix elements.

Both criteria are one-sided: a violated inequality certifies that the state
is not k-separable (k = 2 means genuinely multipartite entangled); a
satisfied inequality says nothing.

The evaluators read matrix elements through an ``element(row, col)``
callable with 1-based indices, so the same code runs on a stored matrix and
on elements reconstructed from local measurements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .qstate import DensityMatrix, Dims, NoiseFamily, as_dims, dits_to_index

C1 = "C1"
C2 = "C2"

VIOLATION_TOL = 1e-12
DIAGONAL_CLAMP_TOL = 1e-12
THRESHOLD_TOL = 1e-9

ElementFn = Callable[[int, int], complex]


@dataclass(frozen=True)
class CriterionReport:
    criterion_id: str
    k: int
    lhs: float
    rhs: float
    margin: float
    violated: bool

    def as_dict(self) -> dict:
        return {
            "criterion": self.criterion_id,
            "k": self.k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
        }


def _make_report(criterion_id: str, k: int, lhs: float, rhs: float) -> CriterionReport:
    margin = lhs - rhs
    return CriterionReport(criterion_id, k, lhs, rhs, margin, margin > VIOLATION_TOL)


def _check_k(k: int, n: int) -> None:
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= n={n}, got k={k}")


def _diag(element: ElementFn, i: int) -> float:
    value = element(i, i).real
    if value < -DIAGONAL_CLAMP_TOL:
        raise ValueError(f"diagonal entry rho_{{{i},{i}}} = {value:.3e} is negative")
    return max(value, 0.0)


def index_set_A(dims: Dims | tuple[int, ...]) -> list[int]:
    """Flat indices of strings with every digit in {0, d_l - 1}, minus the two extremes."""
    dims = as_dims(dims)
    low = (0,) * dims.n
    high = tuple(d - 1 for d in dims)
    out = []
    for digits in itertools.product(*[(0, d - 1) for d in dims]):
        if digits in (low, high):
            continue
        out.append(dits_to_index(digits, dims))
    return sorted(out)


def criterion1_from_elements(element: ElementFn, dims: Dims, k: int) -> CriterionReport:
    """(2^{k-1} - 1) |rho_{1,D}| <= 1/2 sum_{j in A} sqrt(rho_{j,j} rho_{D-j+1,D-j+1})."""
    _check_k(k, dims.n)
    D = dims.total
    lhs = (2 ** (k - 1) - 1) * abs(element(1, D))
    rhs = 0.5 * sum(math.sqrt(_diag(element, j) * _diag(element, D - j + 1)) for j in index_set_A(dims))
    return _make_report(C1, k, float(lhs), float(rhs))


def criterion1_evaluate(rho: DensityMatrix, k: int) -> CriterionReport:
    return criterion1_from_elements(rho.element, rho.dims, k)


def criterion2_terms(n: int, d: int):
    """Yield (i, j, p, q, row, col) for 1 <= j < i <= n and p, q in 1..d-1.

    ``row`` and ``col`` are the 1-based indices p*d^{n-i}+1 and q*d^{n-j}+1.
    """
    for i in range(1, n + 1):
        for j in range(1, i):
            for p in range(1, d):
                for q in range(1, d):
                    yield i, j, p, q, p * d ** (n - i) + 1, q * d ** (n - j) + 1


def criterion2_from_elements(element: ElementFn, dims: Dims, k: int) -> CriterionReport:
    if not dims.is_uniform:
        raise ValueError(f"criterion 2 needs equal local dimensions, got dims={dims.dims}")
    n, d = dims.n, dims[0]
    _check_k(k, n)
    rho11 = _diag(element, 1)
    lhs = 0.0
    pair_sum = 0.0
    for i, j, p, q, row, col in criterion2_terms(n, d):
        lhs += abs(element(row, col))
        both = p * d ** (n - i) + q * d ** (n - j) + 1
        pair_sum += math.sqrt(rho11 * _diag(element, both))
    single_sum = sum(_diag(element, p * d ** (n - i) + 1) for i in range(1, n + 1) for p in range(1, d))
    rhs = pair_sum + (n - k) / 2 * single_sum
    return _make_report(C2, k, float(lhs), float(rhs))


def criterion2_evaluate(rho: DensityMatrix, k: int) -> CriterionReport:
    return criterion2_from_elements(rho.element, rho.dims, k)


_EVALUATORS = {C1: criterion1_evaluate, C2: criterion2_evaluate}


def evaluate(rho: DensityMatrix, criterion_id: str, k: int) -> CriterionReport:
    try:
        fn = _EVALUATORS[criterion_id.upper()]
    except KeyError:
        raise ValueError(f"unknown criterion {criterion_id!r}") from None
    return fn(rho, k)


def k_profile(rho: DensityMatrix, criterion_id: str) -> list[CriterionReport]:
    return [evaluate(rho, criterion_id, k) for k in range(2, rho.n + 1)]


@dataclass(frozen=True)
class ThresholdResult:
    """Where the criterion starts firing along a noise family.

    ``status`` is ``"crossing"`` (``p_star`` set), ``"never"`` or ``"always"``.
    """

    status: str
    p_star: float | None
    violated_side: str
    exact: Fraction | None = None

    def describe(self) -> str:
        if self.status == "crossing":
            sign = ">" if self.violated_side == "above" else "<"
            return f"violated for p {sign} {self.p_star:.10f}"
        return f"{self.status} violated on (0, 1)"


def family_margin(family: NoiseFamily, criterion_id: str, k: int, p: float) -> float:
    return evaluate(family.state(p), criterion_id, k).margin


def noise_threshold(
    family: NoiseFamily,
    criterion_id: str,
    k: int,
    tol: float = THRESHOLD_TOL,
) -> ThresholdResult:
    """Bisect the direct-evaluation margin along ``family`` to locate p*."""
    margin = lambda p: family_margin(family, criterion_id, k, p)  # noqa: E731
    grid = np.linspace(0.0, 1.0, 11)
    values = np.array([margin(p) for p in grid])
    steps = np.diff(values)
    increasing = bool(np.all(steps >= -1e-12))
    side = "above" if values[-1] >= values[0] else "below"

    violated = values > VIOLATION_TOL
    if violated.all():
        return ThresholdResult("always", None, side)
    if not violated.any():
        return ThresholdResult("never", None, side)
    if not (increasing or np.all(steps <= 1e-12)):
        raise ValueError("margin is not monotone in p along this family; bisection is not applicable")

    # bracket [lo, hi] with margin(lo) <= tol < margin(hi) when increasing
    lo, hi = (0.0, 1.0) if increasing else (1.0, 0.0)
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) > VIOLATION_TOL:
            hi = mid
        else:
            lo = mid
    return ThresholdResult("crossing", 0.5 * (lo + hi), side)
