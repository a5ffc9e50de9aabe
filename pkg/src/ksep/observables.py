"""Local observables that measure the matrix elements used by the criteria.

Element access through local measurements:

* far antidiagonal rho_{1,D}: the 2n settings M_l, M~_l, combined through
  sum_l (-1)^l M_l = n Q and sum_l (-1)^l M~_l = n Q~, with
  <Q> = 2 Re rho_{1,D} and <Q~> = -2 Im rho_{1,D};
* pair coherences: O(r,s,a,b) and O~(r,s,a,b), each a sum of two product
  terms, with <O> = 2 Re rho_{u,v} and <O~> = -2 Im rho_{u,v} where u is the
  string with digit a at site r and v the string with digit b at site s
  (all other digits 0, r < s);
* diagonal entries: one product projector each.

Index correspondence with the criterion-2 sum, whose terms read
|rho_{p d^(n-i)+1, q d^(n-j)+1}| with j < i:

    ============  ========================================
    criterion 2   observable
    ============  ========================================
    site j        r (earlier site)
    site i        s (later site)
    level q       a
    level p       b
    element       conj(rho_{u,v}); the modulus is the same
    ============  ========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .criteria import ElementFn, criterion2_terms, index_set_A
from .qstate import DensityMatrix, Dims, as_dims, dits_to_index, index_to_dits, random_density_matrix


def _ketbra(d: int, a: int, b: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=complex)
    out[a, b] = 1.0
    return out


def _kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


@dataclass(frozen=True)
class LocalTerm:
    """coeff * (A_1 (x) A_2 (x) ... (x) A_n)."""

    coeff: complex
    factors: tuple[np.ndarray, ...]

    def matrix(self) -> np.ndarray:
        return self.coeff * _kron_all(self.factors)

    @property
    def hermitian_factors(self) -> bool:
        return all(np.allclose(f, f.conj().T, atol=1e-12, rtol=0) for f in self.factors)


@dataclass(frozen=True)
class ObservableOp:
    label: str
    dims: Dims
    terms: tuple[LocalTerm, ...]
    matrix: np.ndarray

    @property
    def locality(self) -> tuple[np.ndarray, ...] | None:
        """Per-site factors when the operator is a single product, else None."""
        if len(self.terms) == 1 and self.terms[0].coeff == 1:
            return self.terms[0].factors
        return None

    @property
    def is_local(self) -> bool:
        return self.locality is not None and self.terms[0].hermitian_factors

    def expectation(self, rho: DensityMatrix | np.ndarray) -> float:
        data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
        return float(np.einsum("ij,ji->", self.matrix, data).real)


def _observable(label: str, dims: Dims, terms: Sequence[LocalTerm]) -> ObservableOp:
    mat = sum(t.matrix() for t in terms)
    mat.setflags(write=False)
    return ObservableOp(label, dims, tuple(terms), mat)


def build_Q(dims) -> ObservableOp:
    dims = as_dims(dims)
    down = tuple(_ketbra(d, 0, d - 1) for d in dims)
    up = tuple(_ketbra(d, d - 1, 0) for d in dims)
    return _observable("Q", dims, [LocalTerm(1, down), LocalTerm(1, up)])


def build_Qtilde(dims) -> ObservableOp:
    dims = as_dims(dims)
    down = tuple(_ketbra(d, 0, d - 1) for d in dims)
    up = tuple(_ketbra(d, d - 1, 0) for d in dims)
    return _observable("Qtilde", dims, [LocalTerm(-1j, down), LocalTerm(1j, up)])


def _setting(label: str, dims: Dims, angle: float) -> ObservableOp:
    factors = []
    for d in dims:
        y_x = _ketbra(d, d - 1, 0)
        x_y = _ketbra(d, 0, d - 1)
        R = y_x + x_y
        R_tilde = 1j * y_x - 1j * x_y
        factors.append(math.cos(angle) * R + math.sin(angle) * R_tilde)
    return _observable(label, dims, [LocalTerm(1, tuple(factors))])


def _check_l(l: int, n: int) -> None:
    if not 1 <= l <= n:
        raise ValueError(f"setting index l must satisfy 1 <= l <= {n}, got {l}")


def build_M(l: int, dims) -> ObservableOp:
    dims = as_dims(dims)
    _check_l(l, dims.n)
    return _setting(f"M({l})", dims, l * math.pi / dims.n)


def build_Mtilde(l: int, dims) -> ObservableOp:
    dims = as_dims(dims)
    _check_l(l, dims.n)
    return _setting(f"Mtilde({l})", dims, (l * math.pi + math.pi / 2) / dims.n)


@dataclass(frozen=True)
class SettingsReport:
    dims: tuple[int, ...]
    deviation_Q: float
    deviation_Qtilde: float
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return max(self.deviation_Q, self.deviation_Qtilde) <= self.tol


def verify_ghz_settings(dims) -> SettingsReport:
    """Max entry-wise deviation of sum_l (-1)^l M_l - n Q and its tilde twin."""
    dims = as_dims(dims)
    n = dims.n
    sum_m = sum((-1) ** l * build_M(l, dims).matrix for l in range(1, n + 1))
    sum_mt = sum((-1) ** l * build_Mtilde(l, dims).matrix for l in range(1, n + 1))
    dev_q = float(np.max(np.abs(sum_m - n * build_Q(dims).matrix)))
    dev_qt = float(np.max(np.abs(sum_mt - n * build_Qtilde(dims).matrix)))
    return SettingsReport(dims.dims, dev_q, dev_qt)


def _check_pair(r: int, s: int, a: int, b: int, n: int, d: int) -> None:
    if not 1 <= r < s <= n:
        raise ValueError(f"need 1 <= r < s <= n={n}, got r={r}, s={s}")
    if not (1 <= a <= d - 1 and 1 <= b <= d - 1):
        raise ValueError(f"levels a, b must lie in 1..{d - 1}, got a={a}, b={b}")


def _pair_factors(r, s, a, b, n, d):
    x = 0
    T = _ketbra(d, x, x)
    M = _ketbra(d, a, x) + _ketbra(d, x, a)
    M_t = 1j * _ketbra(d, a, x) - 1j * _ketbra(d, x, a)
    N = _ketbra(d, b, x) + _ketbra(d, x, b)
    N_t = 1j * _ketbra(d, b, x) - 1j * _ketbra(d, x, b)

    def place(at_r, at_s):
        return tuple(at_r if site == r else at_s if site == s else T for site in range(1, n + 1))

    return place, M, M_t, N, N_t


def build_O(r: int, s: int, a: int, b: int, n: int, d: int) -> ObservableOp:
    _check_pair(r, s, a, b, n, d)
    place, M, M_t, N, N_t = _pair_factors(r, s, a, b, n, d)
    terms = [LocalTerm(0.5, place(M, N)), LocalTerm(0.5, place(M_t, N_t))]
    return _observable(f"O({r},{s},{a},{b})", Dims.uniform(n, d), terms)


def build_Otilde(r: int, s: int, a: int, b: int, n: int, d: int) -> ObservableOp:
    _check_pair(r, s, a, b, n, d)
    place, M, M_t, N, N_t = _pair_factors(r, s, a, b, n, d)
    terms = [LocalTerm(0.5, place(M, N_t)), LocalTerm(-0.5, place(M_t, N))]
    return _observable(f"Otilde({r},{s},{a},{b})", Dims.uniform(n, d), terms)


def coherence_target(r: int, s: int, a: int, b: int, n: int, d: int) -> tuple[int, int]:
    """(row, col) of the element whose real/imaginary parts O and O~ measure."""
    _check_pair(r, s, a, b, n, d)
    u = [0] * n
    v = [0] * n
    u[r - 1] = a
    v[s - 1] = b
    dims = Dims.uniform(n, d)
    return dits_to_index(u, dims), dits_to_index(v, dims)


def build_diag_projector(digits: Sequence[int], dims) -> ObservableOp:
    dims = as_dims(dims)
    dits_to_index(digits, dims)  # range check
    factors = tuple(_ketbra(d, m, m) for m, d in zip(digits, dims))
    label = "DiagProj(" + ",".join(str(m) for m in digits) + ")"
    return _observable(label, dims, [LocalTerm(1, factors)])


def count_criterion1_elements(n: int) -> int:
    return 2**n - 1


def count_criterion1_observables(n: int) -> int:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return 2**n + 2 * n - 2


def _pair_sum(n: int, d: int) -> int:
    return sum(i * (d - 1) for i in range(1, n))


def count_criterion2_elements(n: int, d: int) -> int:
    return 2 * (d - 1) * _pair_sum(n, d) + (n * (d - 1) + 1)


def count_criterion2_observables(n: int, d: int) -> int:
    if n < 2 or d < 2:
        raise ValueError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    return 5 * (d - 1) * _pair_sum(n, d) + (n * (d - 1) + 1)


def tomography_count(dims) -> int:
    """(d_1^2 - 1)(d_2^2 - 1)...(d_n^2 - 1)."""
    return math.prod(d * d - 1 for d in as_dims(dims))


def criterion1_plan(dims) -> list[ObservableOp]:
    """Every local observable needed for criterion 1: 2n settings plus the A-diagonals."""
    dims = as_dims(dims)
    plan = [build_M(l, dims) for l in range(1, dims.n + 1)]
    plan += [build_Mtilde(l, dims) for l in range(1, dims.n + 1)]
    plan += [build_diag_projector(index_to_dits(j, dims), dims) for j in index_set_A(dims)]
    return plan


def _product(label: str, dims: Dims, factors) -> ObservableOp:
    return _observable(label, dims, [LocalTerm(1, factors)])


def criterion2_plan(n: int, d: int) -> list[ObservableOp]:
    """Every local product observable needed for criterion 2.

    Each pair coherence takes four product settings (two for O, two for
    O~); every diagonal entry takes one projector.
    """
    dims = Dims.uniform(n, d)
    plan = []
    for r in range(1, n):
        for s in range(r + 1, n + 1):
            for a in range(1, d):
                for b in range(1, d):
                    place, M, M_t, N, N_t = _pair_factors(r, s, a, b, n, d)
                    tag = f"({r},{s},{a},{b})"
                    plan.append(_product(f"O{tag}[MN]", dims, place(M, N)))
                    plan.append(_product(f"O{tag}[MtNt]", dims, place(M_t, N_t)))
                    plan.append(_product(f"Otilde{tag}[MNt]", dims, place(M, N_t)))
                    plan.append(_product(f"Otilde{tag}[MtN]", dims, place(M_t, N)))
    diag = {1}
    for i, j, p, q, _, _ in criterion2_terms(n, d):
        diag.add(p * d ** (n - i) + q * d ** (n - j) + 1)
    for i in range(1, n + 1):
        for p in range(1, d):
            diag.add(p * d ** (n - i) + 1)
    plan += [build_diag_projector(index_to_dits(idx, dims), dims) for idx in sorted(diag)]
    return plan


def count_distinct(ops: Sequence[ObservableOp]) -> int:
    seen = {np.round(op.matrix, 12).tobytes() for op in ops}
    return len(seen)


def _single_excitation(digits: Sequence[int]) -> tuple[int, int] | None:
    """(site, level) for a string with exactly one nonzero digit (1-based site)."""
    nonzero = [(site + 1, m) for site, m in enumerate(digits) if m != 0]
    return nonzero[0] if len(nonzero) == 1 else None


def reconstruct_element(rho: DensityMatrix, row: int, col: int) -> complex:
    """Recover rho_{row,col} from exact expectations of the local observables.

    Supported targets: diagonal entries, the far antidiagonal pair (1, D) /
    (D, 1), and coherences between single-excitation strings at different
    sites (uniform dims only).
    """
    dims = rho.dims
    D, n = dims.total, dims.n
    if row == col:
        return complex(build_diag_projector(index_to_dits(row, dims), dims).expectation(rho))
    if {row, col} == {1, D}:
        q = sum((-1) ** l * build_M(l, dims).expectation(rho) for l in range(1, n + 1)) / n
        qt = sum((-1) ** l * build_Mtilde(l, dims).expectation(rho) for l in range(1, n + 1)) / n
        value = complex(q / 2, -qt / 2)
        return value if row == 1 else value.conjugate()
    u = _single_excitation(index_to_dits(row, dims))
    v = _single_excitation(index_to_dits(col, dims))
    if dims.is_uniform and u and v and u[0] != v[0]:
        d = dims[0]
        (r, a), (s, b) = sorted([u, v])
        o = build_O(r, s, a, b, n, d).expectation(rho)
        ot = build_Otilde(r, s, a, b, n, d).expectation(rho)
        value = complex(o / 2, -ot / 2)
        return value if u[0] < v[0] else value.conjugate()
    raise ValueError(f"unsupported target ({row}, {col}) for local reconstruction")


def measured_elements(rho: DensityMatrix) -> ElementFn:
    """Element accessor backed by :func:`reconstruct_element`, memoized per call site."""
    cache: dict[tuple[int, int], complex] = {}

    def element(row: int, col: int) -> complex:
        key = (row, col)
        if key not in cache:
            cache[key] = reconstruct_element(rho, row, col)
        return cache[key]

    return element


@dataclass(frozen=True)
class ContractReport:
    dims: tuple[int, ...]
    samples: int
    max_deviation: float
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def expectation_functionals(dims) -> list[tuple[ObservableOp, Callable[[np.ndarray], float]]]:
    """Every observable paired with the matrix-element functional it claims to measure."""
    dims = as_dims(dims)
    D = dims.total
    pairs = [
        (build_Q(dims), lambda m: 2 * m[0, D - 1].real),
        (build_Qtilde(dims), lambda m: -2 * m[0, D - 1].imag),
    ]
    for j in index_set_A(dims) + [1, D]:
        op = build_diag_projector(index_to_dits(j, dims), dims)
        pairs.append((op, lambda m, j=j: m[j - 1, j - 1].real))
    if dims.is_uniform:
        n, d = dims.n, dims[0]
        for r in range(1, n):
            for s in range(r + 1, n + 1):
                for a in range(1, d):
                    for b in range(1, d):
                        u, v = coherence_target(r, s, a, b, n, d)
                        pairs.append((build_O(r, s, a, b, n, d), lambda m, u=u, v=v: 2 * m[u - 1, v - 1].real))
                        pairs.append(
                            (build_Otilde(r, s, a, b, n, d), lambda m, u=u, v=v: -2 * m[u - 1, v - 1].imag)
                        )
    return pairs


def verify_expectation_contracts(dims, samples: int = 100, seed0: int = 0) -> ContractReport:
    dims = as_dims(dims)
    pairs = expectation_functionals(dims)
    worst = 0.0
    for seed in range(seed0, seed0 + samples):
        rho = random_density_matrix(seed, dims)
        for op, functional in pairs:
            worst = max(worst, abs(op.expectation(rho) - functional(rho.data)))
    return ContractReport(dims.dims, samples, worst)
