import math
from fractions import Fraction

import numpy as np
import pytest

from ksep.closedform import (
    UNDETECTABLE,
    UndetectableError,
    alpha,
    alpha_threshold,
    beta,
    beta_denominator,
    beta_threshold,
    direct_ratio,
    figure_data,
)
from ksep.criteria import C1, C2, criterion2_terms, noise_threshold
from ksep.qstate import ghz_noise_family, w_noise_family

GRID = [Fraction(i, 40) for i in range(1, 40)]


def test_alpha_printed_specializations_exact():
    for k in (2, 3):
        for p in GRID:
            assert alpha(3, 3, k, p) == (1 - p) / (3 * p * (2 ** (k - 1) - 1))
    for k in (2, 3, 4):
        for p in GRID:
            assert alpha(4, 3, k, p) == 7 * (1 - p) / (27 * p * (2 ** (k - 1) - 1))


def test_alpha_examples():
    assert alpha(3, 3, 2, Fraction(1, 2)) == Fraction(1, 3)
    assert alpha(3, 3, 2, 1) == 0
    with pytest.raises(UndetectableError):
        alpha(3, 3, 2, 0)
    with pytest.raises(ValueError):
        alpha(3, 3, 4, 0.5)


def test_beta_examples():
    for p in GRID:
        assert beta(3, 3, 3, p) == 2 * p / (9 * (1 - p))
        # k = 2: hand solve gives 5p/(18(1-p)) + 1/4
        assert beta(3, 3, 2, p) == 5 * p / (18 * (1 - p)) + Fraction(1, 4)
    assert beta(3, 3, 2, 0) == Fraction(1, 4)
    assert math.isclose(beta(4, 3, 4, 0.1), 8 * 0.1 / (81 * 0.9), rel_tol=1e-14)
    assert math.isclose(beta(4, 3, 4, 0.1), 0.010973936899862825, rel_tol=1e-12)
    with pytest.raises(UndetectableError):
        beta(3, 3, 2, 1)


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("d", range(2, 6))
def test_beta_denominator_identity(n, d):
    expected = n * (n - 1) * (d - 1) ** 2 // 2
    assert beta_denominator(n, d) == expected
    assert len(list(criterion2_terms(n, d))) == expected


@pytest.mark.parametrize(
    "n, d, k, expected",
    [(3, 3, 2, Fraction(1, 4)), (3, 3, 3, Fraction(1, 10)), (4, 3, 2, Fraction(7, 34)), (4, 3, 4, Fraction(1, 28))],
)
def test_alpha_threshold(n, d, k, expected):
    t = alpha_threshold(n, d, k)
    assert t.exact == expected
    assert alpha(n, d, k, expected) == 1
    assert t.violated_side == "above"


@pytest.mark.parametrize("n, d, k, expected", [(3, 3, 3, Fraction(9, 11)), (3, 3, 2, Fraction(27, 37))])
def test_beta_threshold(n, d, k, expected):
    t = beta_threshold(n, d, k)
    assert t.exact == expected
    assert beta(n, d, k, expected) == 1
    assert abs(float(beta(n, d, k, t.p_star)) - 1) <= 1e-12
    assert t.violated_side == "below"


def test_monotonicity():
    ps = np.linspace(0.01, 0.99, 99)
    for n, d in [(3, 2), (3, 3), (4, 3), (5, 2)]:
        for k in range(2, n + 1):
            a = [alpha(n, d, k, p) for p in ps]
            b = [beta(n, d, k, p) for p in ps]
            assert all(x > y for x, y in zip(a, a[1:]))
            assert all(x < y for x, y in zip(b, b[1:]))
        for p in ps:
            a = [alpha(n, d, k, p) for k in range(2, n + 1)]
            assert all(x > y for x, y in zip(a, a[1:]))
            b = [beta(n, d, k, p) for k in range(2, n + 1)]
            assert all(x > y for x, y in zip(b, b[1:]))


@pytest.mark.parametrize("n, d", [(3, 3), (4, 2)])
def test_closed_form_matches_direct(n, d):
    for k in range(2, n + 1):
        for p in np.linspace(0.01, 0.99, 25):
            assert math.isclose(direct_ratio(ghz_noise_family(n, d), k, p), alpha(n, d, k, p), rel_tol=1e-10)
            assert math.isclose(direct_ratio(w_noise_family(n, d), k, p), beta(n, d, k, p), rel_tol=1e-10)


@pytest.mark.parametrize("n, d", [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)])
def test_analytic_thresholds_match_bisection(n, d):
    for k in range(2, n + 1):
        ghz = noise_threshold(ghz_noise_family(n, d), C1, k)
        assert abs(ghz.p_star - alpha_threshold(n, d, k).p_star) <= 1e-8
        w = noise_threshold(w_noise_family(n, d), C2, k)
        assert abs(w.p_star - beta_threshold(n, d, k).p_star) <= 1e-8


def test_figure_data_examples():
    rows = figure_data(ghz_noise_family(3, 3), [2], [0.3, 0.25, 0.2])
    assert [r.p for r in rows] == [0.3, 0.25, 0.2]
    assert math.isclose(rows[0].value, 0.7 / 0.9, rel_tol=1e-14)
    assert rows[0].detected
    assert not rows[1].detected  # exactly at the threshold value == 1
    assert not rows[2].detected

    rows = figure_data(w_noise_family(4, 3), [4], [0.99])
    assert rows[0].value > 1 and not rows[0].detected
    assert math.isclose(rows[0].value, 8 * 0.99 / (81 * 0.01), rel_tol=1e-12)


def test_figure_data_singular_points_and_order():
    rows = figure_data(ghz_noise_family(3, 3), [3, 2], [0.0, 0.5], direct=True)
    assert [(r.k, r.p) for r in rows] == [(2, 0.0), (2, 0.5), (3, 0.0), (3, 0.5)]
    assert rows[0].value == UNDETECTABLE and not rows[0].detected
    assert rows[0].direct == UNDETECTABLE
    rows = figure_data(w_noise_family(3, 3), [2], [1.0])
    assert rows[0].value == UNDETECTABLE and not rows[0].detected
