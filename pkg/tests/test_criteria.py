import itertools
import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from ksep.criteria import (
    C1,
    C2,
    criterion1_evaluate,
    criterion1_from_elements,
    criterion2_evaluate,
    criterion2_terms,
    index_set_A,
    k_profile,
    noise_threshold,
)
from ksep.qstate import (
    DensityMatrix,
    Dims,
    ghz_noise_family,
    ghz_state,
    maximally_mixed,
    projector,
    random_density_matrix,
    w_noise_family,
    w_state,
)


def brute_force_A(dims):
    """Oracle: scan every basis string in lexicographic order."""
    out = []
    strings = list(itertools.product(*[range(d) for d in dims]))
    for pos, digits in enumerate(strings):
        extremes = all(j in (0, d - 1) for j, d in zip(digits, dims))
        low = all(j == 0 for j in digits)
        high = all(j == d - 1 for j, d in zip(digits, dims))
        if extremes and not low and not high:
            out.append(pos + 1)
    return out


@pytest.mark.parametrize(
    "dims, expected",
    [((2, 2), [2, 3]), ((3, 3, 3), [3, 7, 9, 19, 21, 25])],
)
def test_index_set_A_examples(dims, expected):
    assert index_set_A(dims) == expected
    assert brute_force_A(dims) == expected


@pytest.mark.parametrize("dims", [(2, 2, 2, 2), (2, 3, 4), (4, 3), (3, 3, 3, 3)])
def test_index_set_A_matches_brute_force(dims):
    A = index_set_A(dims)
    assert A == brute_force_A(dims)
    assert len(A) == 2 ** len(dims) - 2
    D = int(np.prod(dims))
    # closed under the reflection j -> D - j + 1
    assert sorted(D - j + 1 for j in A) == A


def test_criterion1_pure_ghz():
    r = criterion1_evaluate(projector(ghz_state(3, 3)), 2)
    assert abs(r.lhs - 1 / 3) <= 1e-15
    assert r.rhs == 0
    assert r.violated


def test_criterion1_maximally_mixed():
    rho = maximally_mixed((3, 3, 3))
    for k in (2, 3):
        r = criterion1_evaluate(rho, k)
        assert r.lhs == 0
        assert abs(r.rhs - 1 / 9) <= 1e-15
        assert not r.violated


@pytest.mark.parametrize("p", [0.05, 0.3, 0.77])
def test_criterion1_ratio_on_ghz_family(p):
    rho = ghz_noise_family(3, 3).state(p)
    for k in (2, 3):
        r = criterion1_evaluate(rho, k)
        # hand-derived: lhs = (2^{k-1}-1) p/3, rhs = 3 (1-p)/27
        assert math.isclose(r.lhs, (2 ** (k - 1) - 1) * p / 3, rel_tol=1e-13)
        assert math.isclose(r.rhs, 3 * (1 - p) / 27, rel_tol=1e-13)
        assert math.isclose(r.rhs / r.lhs, (1 - p) / (3 * p * (2 ** (k - 1) - 1)), rel_tol=1e-10)


def test_criterion2_pure_w():
    r = criterion2_evaluate(projector(w_state(3, 3)), 2)
    assert abs(r.lhs - 2) <= 1e-14
    assert abs(r.rhs - 0.5) <= 1e-14
    assert r.violated


def test_criterion2_maximally_mixed():
    r = criterion2_evaluate(maximally_mixed((3, 3, 3)), 2)
    assert r.lhs == 0
    assert not r.violated


def test_criterion2_term_count():
    for n, d in [(3, 3), (4, 2), (4, 3), (5, 4)]:
        assert len(list(criterion2_terms(n, d))) == n * (n - 1) * (d - 1) ** 2 // 2


def test_criterion2_indices_hit_single_excitations():
    n, d = 3, 3
    support = set(w_state(n, d).support())
    for i, j, p, q, row, col in criterion2_terms(n, d):
        assert row in support and col in support and row != col


def test_errors():
    ghz = projector(ghz_state(3, 3))
    for k in (1, 4):
        with pytest.raises(ValueError):
            criterion1_evaluate(ghz, k)
        with pytest.raises(ValueError):
            criterion2_evaluate(ghz, k)
    with pytest.raises(ValueError):
        criterion2_evaluate(maximally_mixed((2, 3, 4)), 2)
    # heterogeneous dims are fine for criterion 1
    assert not criterion1_evaluate(maximally_mixed((2, 3, 4)), 2).violated


def test_diagonal_clamp_and_rejection():
    dims = Dims((2, 2))
    base = {(1, 1): 0.5, (4, 4): 0.5, (2, 2): -1e-13, (3, 3): 1e-13, (1, 4): 0.1}
    element = lambda r, c: base.get((r, c), 0.0)  # noqa: E731
    report = criterion1_from_elements(element, dims, 2)
    assert report.rhs == 0.0
    base[(2, 2)] = -1e-9
    with pytest.raises(ValueError):
        criterion1_from_elements(element, dims, 2)


def test_k_profile_examples():
    assert [r.violated for r in k_profile(projector(ghz_state(3, 3)), C1)] == [True, True]
    assert [r.violated for r in k_profile(ghz_noise_family(3, 3).state(0.15), C1)] == [False, True]
    assert [r.violated for r in k_profile(maximally_mixed((3, 3, 3)), C1)] == [False, False]
    assert [r.k for r in k_profile(maximally_mixed((2, 2, 2, 2)), C1)] == [2, 3, 4]


def _upward_closed(reports):
    flags = [r.violated for r in reports]
    return all(not a or b for a, b in zip(flags, flags[1:]))


@pytest.mark.parametrize("dims", [(3, 3, 3), (2, 2, 2, 2)])
def test_upward_closed_random_states(dims):
    for seed in range(200):
        rho = random_density_matrix(seed, dims)
        assert _upward_closed(k_profile(rho, C1))
        assert _upward_closed(k_profile(rho, C2))


def test_upward_closed_families():
    for p in np.linspace(0, 1, 21):
        assert _upward_closed(k_profile(ghz_noise_family(4, 3).state(p), C1))
        assert _upward_closed(k_profile(w_noise_family(4, 3).state(p), C2))


def _intermediate_unitary(d, rng, permute):
    """Unitary on one qudit that fixes |0> and |d-1>."""
    u = np.eye(d, dtype=complex)
    if d > 2:
        if permute:
            inner = np.eye(d - 2)[rng.permutation(d - 2)]
        elif d - 2 == 1:
            inner = np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(1)
        else:
            inner = unitary_group.rvs(d - 2, random_state=rng)
        u[1 : d - 1, 1 : d - 1] = inner
    return u


@pytest.mark.parametrize("dims, permute", [((3, 3, 3), False), ((4, 4, 3), True), ((4, 4, 3), False)])
def test_criterion1_invariant_under_intermediate_relabeling(dims, permute):
    rng = np.random.default_rng(7)
    for seed in range(10):
        rho = random_density_matrix(seed, dims)
        u = np.array([[1.0]])
        for d in dims:
            u = np.kron(u, _intermediate_unitary(d, rng, permute))
        moved = DensityMatrix(u @ rho.data @ u.conj().T, rho.dims)
        for k in range(2, len(dims) + 1):
            a, b = criterion1_evaluate(rho, k), criterion1_evaluate(moved, k)
            assert math.isclose(a.lhs, b.lhs, rel_tol=1e-12, abs_tol=1e-15)
            assert math.isclose(a.rhs, b.rhs, rel_tol=1e-12, abs_tol=1e-15)


def test_sides_finite_nonnegative_on_rank_deficient_states():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.standard_normal(27) + 1j * rng.standard_normal(27)
        v /= np.linalg.norm(v)
        rho = DensityMatrix(np.outer(v, v.conj()), Dims((3, 3, 3)))
        for report in k_profile(rho, C1) + k_profile(rho, C2):
            assert np.isfinite(report.lhs) and np.isfinite(report.rhs)
            assert report.lhs >= 0 and report.rhs >= 0


def test_reports_deterministic():
    rho = random_density_matrix(11, (3, 3, 3))
    assert criterion1_evaluate(rho, 2) == criterion1_evaluate(rho, 2)
    assert criterion2_evaluate(rho, 3) == criterion2_evaluate(rho, 3)


@pytest.mark.parametrize(
    "family, crit, k, expected",
    [
        (ghz_noise_family(3, 3), C1, 2, 0.25),
        (ghz_noise_family(3, 3), C1, 3, 0.1),
        (w_noise_family(3, 3), C2, 2, 27 / 37),
    ],
)
def test_noise_threshold_examples(family, crit, k, expected):
    result = noise_threshold(family, crit, k)
    assert result.status == "crossing"
    assert abs(result.p_star - expected) <= 1e-9
    assert result.violated_side == ("above" if family.family.startswith("GHZ") else "below")


def test_noise_threshold_never_and_always():
    assert noise_threshold(ghz_noise_family(3, 3), C2, 2).status == "never"
    assert noise_threshold(w_noise_family(3, 3), C1, 2).status == "never"

    class PureGHZ:
        def state(self, p):
            return projector(ghz_state(3, 3))

    assert noise_threshold(PureGHZ(), C1, 2).status == "always"
