"""Matrix Market files for density matrices.

Entries are 1-based complex coordinates as written by :func:`scipy.io.mmwrite`;
the subsystem dimensions travel in a ``%dims d_1 d_2 ... d_n`` comment line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .qstate import DensityMatrix, Dims, InvalidStateError


class MatrixFileError(ValueError):
    """Raised for unreadable or malformed matrix files."""


def write_state(path: str | Path, rho: DensityMatrix) -> None:
    dims_line = "dims " + " ".join(str(d) for d in rho.dims)
    coo = scipy.sparse.coo_matrix(np.asarray(rho.data))
    scipy.io.mmwrite(str(path), coo, comment=dims_line, field="complex", precision=17)


def _read_dims(path: Path) -> Dims:
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("%"):
                break
            body = line.lstrip("%").strip()
            if body.startswith("dims"):
                try:
                    return Dims(tuple(int(tok) for tok in body.split()[1:]))
                except ValueError as exc:
                    raise MatrixFileError(f"{path}: bad dims line {line.strip()!r}: {exc}") from exc
    raise MatrixFileError(f"{path}: missing '%dims' header line")


def read_state(path: str | Path) -> DensityMatrix:
    path = Path(path)
    try:
        dims = _read_dims(path)
        mat = scipy.io.mmread(str(path))
    except MatrixFileError:
        raise
    except (OSError, ValueError, IndexError, UnicodeDecodeError) as exc:
        raise MatrixFileError(f"{path}: {exc}") from exc
    mat = mat.toarray() if scipy.sparse.issparse(mat) else np.asarray(mat)
    try:
        return DensityMatrix(mat.astype(complex), dims)
    except InvalidStateError as exc:
        raise MatrixFileError(f"{path}: {exc}") from exc
