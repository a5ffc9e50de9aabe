"""Partial transpose and the PPT test across subsystem cuts."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .qstate import DensityMatrix, Dims, NoiseFamily, as_dims

NPT_TOL = 1e-10


def _check_cut(subset: Iterable[int], n: int) -> tuple[int, ...]:
    cut = tuple(sorted(set(int(s) for s in subset)))
    if not cut or len(cut) >= n:
        raise ValueError(f"cut must be a nonempty proper subset of 1..{n}, got {cut}")
    if cut[0] < 1 or cut[-1] > n:
        raise ValueError(f"cut positions must lie in 1..{n}, got {cut}")
    return cut


def partial_transpose(rho: DensityMatrix | np.ndarray, subset: Iterable[int], dims=None) -> np.ndarray:
    """Transpose the subsystems in ``subset`` (1-based positions)."""
    if isinstance(rho, DensityMatrix):
        mat, dims = rho.data, rho.dims
    else:
        mat, dims = np.asarray(rho), as_dims(dims)
    n = dims.n
    cut = _check_cut(subset, n)
    tensor = mat.reshape(dims.dims + dims.dims)
    axes = list(range(2 * n))
    for site in cut:
        axes[site - 1], axes[n + site - 1] = axes[n + site - 1], axes[site - 1]
    return tensor.transpose(axes).reshape(dims.total, dims.total)


def min_eigenvalue(h: np.ndarray, tol: float = 1e-10) -> float:
    h = np.asarray(h)
    dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return float(np.linalg.eigvalsh(h)[0])


def is_npt(rho: DensityMatrix, subset: Iterable[int], tol: float = NPT_TOL) -> bool:
    return min_eigenvalue(partial_transpose(rho, subset)) < -tol


def single_site_cuts(dims: Dims) -> list[tuple[int]]:
    return [(site,) for site in range(1, dims.n + 1)]


def npt_onset(family: NoiseFamily, subset: Iterable[int], tol: float = 1e-9) -> float | None:
    """Smallest GHZ weight at which the cut turns NPT; None if it never does.

    Only meaningful for families where entanglement grows with p.
    """
    cut = tuple(subset)
    npt = lambda p: is_npt(family.state(p), cut)  # noqa: E731
    if not npt(1.0):
        return None
    if npt(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if npt(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
