"""Sparse and small dense matrix plumbing over complex doubles.

Every sparse operator in the package is a canonical ``scipy.sparse.csr_matrix``
with complex128 data (sorted indices, duplicates summed, no stored zeros).
Dense kernels use numpy / scipy.linalg and are meant for Hessenberg factors
and desk-scale oracles only.
"""
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp

from .config import settings
from .errors import ArgumentError, DimensionError, DomainError, IllConditionedError, ParseError

logger = logging.getLogger(__name__)

SparseMatrix = sp.csr_matrix


def as_sparse(A) -> sp.csr_matrix:
    """Promote anything matrix-like to a canonical complex CSR matrix."""
    if sp.issparse(A):
        M = sp.csr_matrix(A, dtype=np.complex128, copy=True)
    else:
        arr = np.asarray(A, dtype=np.complex128)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
        M = sp.csr_matrix(arr)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def matvec(A, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise DimensionError(f"matvec: vector of length {x.shape} against {A.shape[0]}x{A.shape[1]} matrix")
    return np.asarray(A @ x, dtype=np.complex128).ravel()


def require_square(A, what: str = "matrix") -> int:
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{what} must be square, got {A.shape[0]}x{A.shape[1]}")
    return A.shape[0]


# Matrix Market ----------------------------------------------------------------

_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")
_VALUE_COUNT = {"real": 1, "integer": 1, "complex": 2, "pattern": 0}


def _locate_bad_entry(lines, n_rows: int, n_cols: int, field_kind: str) -> Optional[Tuple[int, str]]:
    """First offending line (1-based) of the size line or coordinate section."""
    n_values = _VALUE_COUNT[field_kind]
    size_seen = False
    for lineno, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if not size_seen:
            size_seen = True
            continue
        if len(parts) != 2 + n_values:
            return lineno, f"expected {2 + n_values} fields, got {len(parts)}"
        try:
            i, j = int(parts[0]), int(parts[1])
            for p in parts[2:]:
                float(p)
        except ValueError:
            return lineno, f"malformed entry {stripped!r}"
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            return lineno, f"index ({i},{j}) outside {n_rows}x{n_cols}"
    return None


def read_matrix_market(path: Union[str, Path]) -> sp.csr_matrix:
    """Read a coordinate Matrix Market file with scipy.io.

    Symmetric, skew-symmetric and Hermitian storage is expanded to the full
    pattern and duplicate entries are summed. When scipy rejects the body,
    the file is scanned once more to report the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise ArgumentError(f"cannot read {path}: no such file")
    try:
        n_rows, n_cols, nnz, fmt, field_kind, symmetry = scipy.io.mminfo(str(path))
    except (ValueError, IndexError, TypeError, RuntimeError) as e:
        raise ParseError(f"malformed header: {e}", line=1) from e
    if fmt != "coordinate":
        raise ParseError(f"only coordinate format is supported, got {fmt!r}", line=1)
    if field_kind not in _VALUE_COUNT or symmetry not in _SYMMETRIES:
        raise ParseError(f"unsupported field/symmetry {field_kind!r}/{symmetry!r}", line=1)

    try:
        M = scipy.io.mmread(str(path))
    except (ValueError, IndexError, TypeError, RuntimeError) as e:
        lines = path.read_text().splitlines()
        located = _locate_bad_entry(lines, n_rows, n_cols, field_kind)
        if located is None:
            raise ParseError(f"unreadable coordinate section: {e}") from e
        lineno, message = located
        raise ParseError(message, line=lineno) from e

    logger.debug(f"Read {n_rows}x{n_cols} matrix with {nnz} stored entries from {path}")
    return as_sparse(M)


def write_matrix_market(path: Union[str, Path], A, comment: str = "") -> Path:
    """Write A in general coordinate form, replacing the target atomically."""
    path = Path(path)
    M = as_sparse(A)
    payload = M.real if not np.any(M.data.imag) else M
    tmp_path = path.with_name(path.stem + ".tmp.mtx")
    try:
        scipy.io.mmwrite(str(tmp_path), payload, comment=comment, precision=settings.MTX_PRECISION, symmetry="general")
        os.replace(tmp_path, path)
    except OSError as e:
        logger.error(f"Failed to write matrix to {path}: {e}")
        raise
    return path


# Scalar functions ---------------------------------------------------------------

class FunctionKind(str, Enum):
    INVERSE = "inverse"
    INVERSE_SQRT = "inverse_sqrt"
    LOG = "log"
    EXP = "exp"
    POLYNOMIAL = "polynomial"
    USER_CALLABLE = "user_callable"


_ALIASES = {
    "inv": FunctionKind.INVERSE,
    "inverse": FunctionKind.INVERSE,
    "invsqrt": FunctionKind.INVERSE_SQRT,
    "inverse_sqrt": FunctionKind.INVERSE_SQRT,
    "log": FunctionKind.LOG,
    "exp": FunctionKind.EXP,
}

_SHORT_NAMES = {
    FunctionKind.INVERSE: "inv",
    FunctionKind.INVERSE_SQRT: "invsqrt",
    FunctionKind.LOG: "log",
    FunctionKind.EXP: "exp",
    FunctionKind.POLYNOMIAL: "poly",
    FunctionKind.USER_CALLABLE: "user",
}


@dataclass(frozen=True)
class ScalarFunction:
    kind: FunctionKind
    # ascending order: c0 + c1 z + c2 z^2 + ...
    coefficients: Tuple[complex, ...] = ()
    fn: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def from_name(cls, name: str) -> "ScalarFunction":
        try:
            return cls(_ALIASES[name.strip().lower()])
        except KeyError:
            raise ArgumentError(f"unknown function {name!r}; expected one of {sorted(_ALIASES)}")

    @classmethod
    def polynomial(cls, coefficients) -> "ScalarFunction":
        coeffs = tuple(complex(c) for c in coefficients)
        if not coeffs:
            raise ArgumentError("a polynomial needs at least one coefficient")
        return cls(FunctionKind.POLYNOMIAL, coefficients=coeffs)

    @classmethod
    def user(cls, fn: Callable) -> "ScalarFunction":
        return cls(FunctionKind.USER_CALLABLE, fn=fn)

    @property
    def name(self) -> str:
        return _SHORT_NAMES[self.kind]

    @property
    def degree(self) -> Optional[int]:
        if self.kind != FunctionKind.POLYNOMIAL:
            return None
        nonzero = [k for k, c in enumerate(self.coefficients) if c != 0]
        return nonzero[-1] if nonzero else 0

    def check_domain(self, eigenvalues) -> None:
        """Raise DomainError if f is undefined (principal branch) at some eigenvalue."""
        z = np.atleast_1d(np.asarray(eigenvalues, dtype=np.complex128))
        if z.size == 0:
            return
        scale = max(1.0, float(np.max(np.abs(z))))
        tiny = 1e-14 * scale
        if self.kind == FunctionKind.INVERSE:
            bad = np.abs(z) <= tiny
        elif self.kind in (FunctionKind.INVERSE_SQRT, FunctionKind.LOG):
            bad = (np.abs(z.imag) <= tiny) & (z.real <= tiny)
        else:
            return
        if np.any(bad):
            raise DomainError(f"{self.kind.value} is undefined at eigenvalue {z[bad][0]:.6g}")

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.kind == FunctionKind.INVERSE:
            return 1.0 / z
        if self.kind == FunctionKind.INVERSE_SQRT:
            return 1.0 / np.sqrt(z)
        if self.kind == FunctionKind.LOG:
            return np.log(z)
        if self.kind == FunctionKind.EXP:
            return np.exp(z)
        if self.kind == FunctionKind.POLYNOMIAL:
            return np.polynomial.polynomial.polyval(z, np.array(self.coefficients))
        return np.asarray(self.fn(z), dtype=np.complex128)


# Dense matrix functions -----------------------------------------------------------

def _horner(H: np.ndarray, coefficients) -> np.ndarray:
    eye = np.eye(H.shape[0], dtype=np.complex128)
    out = coefficients[-1] * eye
    for c in reversed(coefficients[:-1]):
        out = out @ H + c * eye
    return out


def is_hermitian_dense(H: np.ndarray, tol: Optional[float] = None) -> bool:
    tol = settings.HERMITIAN_DENSE_TOL if tol is None else tol
    scale = max(np.linalg.norm(H), 1e-300)
    return np.linalg.norm(H - H.conj().T) <= tol * scale


def _parlett(T: np.ndarray, f: ScalarFunction) -> np.ndarray:
    n = T.shape[0]
    diag = np.diag(T)
    F = np.zeros_like(T)
    F[np.diag_indices(n)] = f(diag)
    scale = max(1.0, float(np.max(np.abs(diag))))
    for p in range(1, n):
        for i in range(n - p):
            j = i + p
            s = T[i, j] * (F[j, j] - F[i, i])
            if p > 1:
                s += T[i, i + 1:j] @ F[i + 1:j, j] - F[i, i + 1:j] @ T[i + 1:j, j]
            gap = T[j, j] - T[i, i]
            if abs(gap) <= settings.PARLETT_GAP_TOL * scale:
                raise IllConditionedError(
                    f"eigenvalues {T[i, i]:.6g} and {T[j, j]:.6g} too close for the Parlett recurrence"
                )
            F[i, j] = s / gap
    return F


def dense_function(H, f: ScalarFunction) -> np.ndarray:
    """Evaluate f(H) for a small dense square matrix.

    Polynomials use Horner, the inverse an LU factorization, Hermitian H an
    eigendecomposition, and everything else the complex Schur form followed by
    the Parlett recurrence.
    """
    H = H.toarray() if sp.issparse(H) else np.array(H, dtype=np.complex128)
    H = H.astype(np.complex128, copy=False)
    if H.ndim != 2:
        raise DimensionError(f"dense_function expects a matrix, got shape {H.shape}")
    s = require_square(H, "H")
    if s == 0:
        return np.zeros((0, 0), dtype=np.complex128)

    if f.kind == FunctionKind.POLYNOMIAL:
        return _horner(H, f.coefficients)

    if f.kind == FunctionKind.INVERSE:
        lu, piv = scipy.linalg.lu_factor(H, check_finite=True)
        pivots = np.abs(np.diag(lu))
        if np.min(pivots) <= 1e-14 * max(1.0, float(np.max(pivots))):
            raise DomainError("inverse of a (numerically) singular matrix")
        return scipy.linalg.lu_solve((lu, piv), np.eye(s, dtype=np.complex128))

    if is_hermitian_dense(H):
        w, V = scipy.linalg.eigh((H + H.conj().T) / 2)
        f.check_domain(w)
        return (V * f(w)) @ V.conj().T

    if f.kind == FunctionKind.USER_CALLABLE:
        raise ArgumentError("user_callable functions are only supported for Hermitian matrices")

    T, Z = scipy.linalg.schur(H, output="complex")
    f.check_domain(np.diag(T))
    upper = np.triu(T, 1)
    if np.linalg.norm(upper) <= settings.HERMITIAN_DENSE_TOL * max(np.linalg.norm(T), 1e-300):
        F = np.diag(f(np.diag(T)))
    else:
        try:
            F = _parlett(T, f)
        except IllConditionedError as e:
            logger.warning(f"Schur-Parlett evaluation refused: {e}")
            raise
    return Z @ F @ Z.conj().T
