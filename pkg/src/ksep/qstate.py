"""Basis indexing, state construction and density-matrix validation.

All flat indices exposed here are 1-based and big-endian mixed radix: the
digit of subsystem 1 is the most significant one, so for dims (d_1, ..., d_n)

    index = sum_{l<n} j_l * d_{l+1} * ... * d_n + j_n + 1.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_DIM_CAP = 4096
DIM_CAP_ENV = "KSEP_DIM_CAP"

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

GHZ_WHITE_NOISE = "GHZ_WHITE_NOISE"
W_WHITE_NOISE = "W_WHITE_NOISE"


class DimensionCapError(ValueError):
    """Raised when a system's total dimension exceeds the configured cap."""


class InvalidStateError(ValueError):
    """Raised when a matrix cannot be used as a density matrix."""


def dim_cap() -> int:
    """Return the active total-dimension cap (``KSEP_DIM_CAP`` overrides the default)."""
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{DIM_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 4:
        raise ValueError(f"{DIM_CAP_ENV} must be at least 4, got {cap}")
    return cap


@dataclass(frozen=True)
class Dims:
    """Local dimensions (d_1, ..., d_n) of an n-partite system."""

    dims: tuple[int, ...]
    cap: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise ValueError(f"need at least two subsystems, got dims={dims}")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got dims={dims}")
        cap = dim_cap() if self.cap is None else self.cap
        if self.total > cap:
            raise DimensionCapError(f"total dimension {self.total} exceeds cap {cap}")

    @classmethod
    def uniform(cls, n: int, d: int, cap: int | None = None) -> "Dims":
        return cls((d,) * n, cap=cap)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.dims)) == 1

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, item):
        return self.dims[item]


def as_dims(dims: Dims | Sequence[int]) -> Dims:
    return dims if isinstance(dims, Dims) else Dims(tuple(dims))


def dits_to_index(digits: Sequence[int], dims: Dims | Sequence[int]) -> int:
    """Map a basis label (j_1, ..., j_n) to its 1-based flat index."""
    dims = as_dims(dims)
    if len(digits) != dims.n:
        raise ValueError(f"expected {dims.n} digits, got {len(digits)}")
    index = 0
    for j, d in zip(digits, dims):
        if not 0 <= j < d:
            raise ValueError(f"digit {j} out of range for local dimension {d}")
        index = index * d + int(j)
    return index + 1


def index_to_dits(index: int, dims: Dims | Sequence[int]) -> tuple[int, ...]:
    """Inverse of :func:`dits_to_index`."""
    dims = as_dims(dims)
    if not 1 <= index <= dims.total:
        raise IndexError(f"index {index} outside [1, {dims.total}]")
    rest = index - 1
    digits = []
    for d in reversed(dims.dims):
        rest, j = divmod(rest, d)
        digits.append(j)
    return tuple(reversed(digits))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    dims: Dims

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.dims.total,):
            raise ValueError(f"amplitude vector shape {amps.shape} does not match D={self.dims.total}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidStateError(f"state vector has squared norm {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def support(self) -> list[int]:
        """1-based indices of the nonzero amplitudes."""
        return [int(i) + 1 for i in np.flatnonzero(self.amplitudes)]


@dataclass(frozen=True)
class DensityMatrix:
    """D x D density matrix with attached subsystem dimensions.

    Hermiticity and unit trace are enforced on construction; positivity is
    only checked by :func:`validate`.
    """

    data: np.ndarray
    dims: Dims

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=complex)
        D = self.dims.total
        if data.shape != (D, D):
            raise InvalidStateError(f"matrix shape {data.shape} does not match D={D}")
        herm = hermiticity_deviation(data)
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"matrix is not Hermitian (max deviation {herm:.3e})")
        tr = abs(np.trace(data) - 1.0)
        if tr > TRACE_TOL:
            raise InvalidStateError(f"trace deviates from 1 by {tr:.3e}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.dims.n

    @property
    def D(self) -> int:
        return self.dims.total

    def element(self, row: int, col: int) -> complex:
        """Matrix element rho_{row,col} with 1-based indices."""
        return complex(self.data[row - 1, col - 1])


def hermiticity_deviation(mat: np.ndarray) -> float:
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0.0
    return float(np.max(np.abs(mat - mat.conj().T)))


def _uniform_dims(n: int, d: int) -> Dims:
    if n < 2 or d < 2:
        raise ValueError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    return Dims.uniform(n, d)


def ghz_state(n: int, d: int) -> StateVector:
    """(1/sqrt(d)) * sum_i |i>^{(x)n}."""
    dims = _uniform_dims(n, d)
    amps = np.zeros(dims.total, dtype=complex)
    for i in range(d):
        amps[dits_to_index((i,) * n, dims) - 1] = 1 / np.sqrt(d)
    return StateVector(amps, dims)


def w_state(n: int, d: int) -> StateVector:
    """Uniform superposition of the n(d-1) single-excitation basis strings."""
    dims = _uniform_dims(n, d)
    amps = np.zeros(dims.total, dtype=complex)
    norm = 1 / np.sqrt(n * (d - 1))
    for site in range(n):
        for level in range(1, d):
            digits = [0] * n
            digits[site] = level
            amps[dits_to_index(digits, dims) - 1] = norm
    return StateVector(amps, dims)


def basis_state(index: int, dims: Dims | Sequence[int]) -> StateVector:
    dims = as_dims(dims)
    amps = np.zeros(dims.total, dtype=complex)
    amps[index - 1] = 1.0
    return StateVector(amps, dims)


def projector(v: StateVector) -> DensityMatrix:
    amps = v.amplitudes
    return DensityMatrix(np.outer(amps, amps.conj()), v.dims)


def maximally_mixed(dims: Dims | Sequence[int]) -> DensityMatrix:
    dims = as_dims(dims)
    return DensityMatrix(np.eye(dims.total, dtype=complex) / dims.total, dims)


def mix_with_white_noise(rho: DensityMatrix, state_weight: float) -> DensityMatrix:
    """Return ``state_weight * rho + (1 - state_weight) * I / D``."""
    if not 0.0 <= state_weight <= 1.0:
        raise ValueError(f"state_weight must lie in [0, 1], got {state_weight}")
    D = rho.D
    data = state_weight * rho.data + (1.0 - state_weight) * np.eye(D) / D
    return DensityMatrix(data, rho.dims)


def random_density_matrix(seed: int, dims: Dims | Sequence[int]) -> DensityMatrix:
    """G G^dagger / tr(G G^dagger) for a seeded complex Gaussian G."""
    dims = as_dims(dims)
    rng = np.random.default_rng(seed)
    D = dims.total
    g = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, dims)


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float
    passed: bool

    def failures(self) -> list[str]:
        out = []
        if self.hermiticity_deviation > HERMITIAN_TOL:
            out.append(f"hermiticity deviation {self.hermiticity_deviation:.3e}")
        if self.trace_deviation > TRACE_TOL:
            out.append(f"trace deviation {self.trace_deviation:.3e}")
        if self.min_eigenvalue < -PSD_TOL:
            out.append(f"min eigenvalue {self.min_eigenvalue:.3e}")
        return out


def validate(rho: DensityMatrix | np.ndarray) -> ValidationReport:
    """Check Hermiticity, unit trace and positivity; never raises on bad input."""
    mat = np.asarray(rho.data if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    herm = hermiticity_deviation(mat)
    trace_dev = float(abs(np.trace(mat) - 1.0))
    hermitian_part = (mat + mat.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(hermitian_part)[0])
    passed = herm <= HERMITIAN_TOL and trace_dev <= TRACE_TOL and min_eig >= -PSD_TOL
    return ValidationReport(herm, trace_dev, min_eig, passed)


@dataclass(frozen=True)
class NoiseFamily:
    """One-parameter family of GHZ or W states mixed with white noise.

    ``p`` weighs the GHZ projector in the GHZ family but the noise term in
    the W family; :meth:`state` applies the right convention.
    """

    family: str
    n: int
    d: int

    def __post_init__(self) -> None:
        if self.family not in (GHZ_WHITE_NOISE, W_WHITE_NOISE):
            raise ValueError(f"unknown family {self.family!r}")
        _uniform_dims(self.n, self.d)

    @property
    def dims(self) -> Dims:
        return Dims.uniform(self.n, self.d)

    @property
    def parameter_meaning(self) -> str:
        if self.family == GHZ_WHITE_NOISE:
            return "p is the weight of the GHZ projector"
        return "p is the weight of the white noise"

    @property
    def detected_above(self) -> bool:
        """True if the criterion fires for p above the threshold."""
        return self.family == GHZ_WHITE_NOISE

    def state(self, p: float) -> DensityMatrix:
        if self.family == GHZ_WHITE_NOISE:
            return mix_with_white_noise(projector(ghz_state(self.n, self.d)), p)
        return mix_with_white_noise(projector(w_state(self.n, self.d)), 1.0 - p)


def ghz_noise_family(n: int, d: int) -> NoiseFamily:
    """p |GHZ><GHZ| + (1 - p) I / d^n."""
    return NoiseFamily(GHZ_WHITE_NOISE, n, d)


def w_noise_family(n: int, d: int) -> NoiseFamily:
    """(1 - p) |W><W| + p I / d^n."""
    return NoiseFamily(W_WHITE_NOISE, n, d)
