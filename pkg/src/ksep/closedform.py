"""Closed-form detection functions for the GHZ and W white-noise families.

A value below 1 means the corresponding criterion is violated, i.e. the
state is certified non-k-separable. Functions accept floats or
``fractions.Fraction``; Fractions give exact results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

from .criteria import C1, C2, ThresholdResult, evaluate
from .qstate import GHZ_WHITE_NOISE, NoiseFamily

UNDETECTABLE = math.inf


class UndetectableError(ValueError):
    """Raised at the singular end of a family, where nothing can be detected."""


def _check_nkd(n: int, d: int, k: int) -> None:
    if n < 2 or d < 2:
        raise ValueError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= n={n}, got k={k}")


def alpha(n: int, d: int, k: int, p: Real) -> Real:
    """GHZ family detection value; ``p`` is the GHZ weight."""
    _check_nkd(n, d, k)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0:
        raise UndetectableError("undetectable at p=0 (pure white noise)")
    return Fraction(2 ** (n - 1) - 1, 2 ** (k - 1) - 1) * (1 - p) / (p * d ** (n - 1))


def beta_denominator(n: int, d: int) -> int:
    """sum_{i=1}^{n(d-1)-1} i  -  n * sum_{j=1}^{d-2} j."""
    return sum(range(1, n * (d - 1))) - n * sum(range(1, d - 1))


def beta(n: int, d: int, k: int, p: Real) -> Real:
    """W family detection value; ``p`` is the noise weight."""
    _check_nkd(n, d, k)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 1:
        raise UndetectableError("undetectable at p=1 (pure white noise)")
    dn = d**n
    first = p * n * (d - 1) / (dn * (1 - p))
    bracket = n * (d - 1) + n**2 * (d - 1) ** 2 * p / (dn * (1 - p))
    return first + bracket * Fraction(n - k, 2) / beta_denominator(n, d)


def alpha_threshold(n: int, d: int, k: int) -> ThresholdResult:
    """alpha < 1 exactly when p exceeds the returned p*."""
    _check_nkd(n, d, k)
    num = 2 ** (n - 1) - 1
    exact = Fraction(num, num + d ** (n - 1) * (2 ** (k - 1) - 1))
    return ThresholdResult("crossing", float(exact), "above", exact)


def beta_threshold(n: int, d: int, k: int) -> ThresholdResult:
    """beta < 1 exactly when p is below the returned p*.

    With x = p / (1 - p), beta is affine in x, so two exact evaluations fix it.
    """
    _check_nkd(n, d, k)
    c0 = Fraction(beta(n, d, k, Fraction(0)))
    c1 = Fraction(beta(n, d, k, Fraction(1, 2))) - c0
    if c0 >= 1:
        return ThresholdResult("never", None, "below")
    if c1 <= 0:
        return ThresholdResult("always", None, "below")
    x_star = (1 - c0) / c1
    exact = x_star / (1 + x_star)
    return ThresholdResult("crossing", float(exact), "below", exact)


def detection_value(family: NoiseFamily, k: int, p: Real) -> float:
    """alpha or beta for the family; ``inf`` at the singular endpoint."""
    fn = alpha if family.family == GHZ_WHITE_NOISE else beta
    try:
        return float(fn(family.n, family.d, k, p))
    except UndetectableError:
        return UNDETECTABLE


def family_threshold(family: NoiseFamily, k: int) -> ThresholdResult:
    if family.family == GHZ_WHITE_NOISE:
        return alpha_threshold(family.n, family.d, k)
    return beta_threshold(family.n, family.d, k)


def natural_criterion(family: NoiseFamily) -> str:
    return C1 if family.family == GHZ_WHITE_NOISE else C2


def direct_ratio(family: NoiseFamily, k: int, p: float) -> float:
    """rhs/lhs of the matching criterion evaluated on the constructed matrix."""
    report = evaluate(family.state(p), natural_criterion(family), k)
    if report.lhs == 0:
        return UNDETECTABLE
    return report.rhs / report.lhs


@dataclass(frozen=True)
class FigureRow:
    p: float
    k: int
    value: float
    detected: bool
    direct: float | None = None


def figure_data(
    family: NoiseFamily,
    k_values: Iterable[int],
    p_grid: Sequence[float],
    direct: bool = False,
) -> list[FigureRow]:
    """Rows (p, k, value, detected) ordered by k then p."""
    rows = []
    for k in sorted(k_values):
        for p in p_grid:
            value = detection_value(family, k, p)
            cross = direct_ratio(family, k, p) if direct else None
            rows.append(FigureRow(float(p), k, value, value < 1, cross))
    return rows

