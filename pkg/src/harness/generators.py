"""Test-matrix families: tridiagonal, shifted skew, 2D Laplacian, thresholded covariance, GMRF precision."""
import logging
import math
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from ..config import settings
from ..errors import ArgumentError
from ..models import MatrixSpec
from ..sparse import as_sparse, read_matrix_market

logger = logging.getLogger(__name__)


def tridiag(n: int, a: complex, b: complex, c: complex) -> sp.csr_matrix:
    """a on the sub-diagonal, b on the diagonal, c on the super-diagonal."""
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    if n == 1:
        return as_sparse([[b]])
    off = np.ones(n - 1, dtype=np.complex128)
    return as_sparse(sp.diags([a * off, b * np.ones(n, dtype=np.complex128), c * off], [-1, 0, 1]))


def laplace2d(N: int, shift: float = 4.0) -> sp.csr_matrix:
    """I (x) M + M (x) I with M = tridiag(-1, 2 + shift/2, -1); spectrum inside [shift, shift + 8]."""
    M = tridiag(N, -1, 2 + shift / 2, -1)
    eye = sp.identity(N, dtype=np.complex128, format="csr")
    return as_sparse(sp.kron(eye, M) + sp.kron(M, eye))


def grid_points(N: int) -> np.ndarray:
    """Integer points of an N x N grid, first coordinate fastest."""
    x, y = np.unravel_index(np.arange(N * N), (N, N), order="F")
    return np.stack([x, y], axis=1).astype(float)


def covariance(N: int, alpha: float, beta: float) -> sp.csr_matrix:
    """Thresholded covariance (1 - r/alpha)^beta for r <= alpha on an N x N integer grid."""
    n = N * N
    expected_nnz = n * (math.pi * alpha ** 2 + 4 * alpha + 1)
    if expected_nnz > settings.COVARIANCE_MAX_NNZ:
        raise ArgumentError(
            f"covariance(N={N}, alpha={alpha}) would store about {expected_nnz:.3g} entries, "
            f"above COVARIANCE_MAX_NNZ = {settings.COVARIANCE_MAX_NNZ}"
        )
    points = grid_points(N)
    pairs = cKDTree(points).query_pairs(r=alpha, output_type="ndarray")
    i, j = pairs[:, 0], pairs[:, 1]
    r = np.linalg.norm(points[i] - points[j], axis=1)
    values = (1.0 - r / alpha) ** beta
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    data = np.concatenate([values, values, np.ones(n)])
    return as_sparse(sp.coo_matrix((data, (rows, cols)), shape=(n, n)))


def gmrf_delta(n: int) -> float:
    """Connection radius scaled so the mean row count matches the reference size."""
    return settings.GMRF_REFERENCE_DELTA * settings.GMRF_REFERENCE_N / n


def gmrf_points(n: int, seed: Optional[int] = None) -> np.ndarray:
    rng = np.random.default_rng(settings.GMRF_SEED if seed is None else seed)
    return rng.uniform(0.0, 1.0, size=n)


def gmrf(n: int, phi: float, delta: Optional[float] = None, seed: Optional[int] = None) -> sp.csr_matrix:
    """Precision matrix I + phi (diag(deg) - chi) with chi_ij = 1 for |s_i - s_j| < delta."""
    delta = gmrf_delta(n) if delta is None else delta
    s = gmrf_points(n, seed)
    pairs = cKDTree(s[:, None]).query_pairs(r=delta, output_type="ndarray")
    if pairs.size:
        pairs = pairs[np.abs(s[pairs[:, 0]] - s[pairs[:, 1]]) < delta]
    i, j = pairs[:, 0], pairs[:, 1]
    chi = sp.coo_matrix((np.ones(2 * i.size), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
    degree = np.asarray(chi.sum(axis=1)).ravel()
    A = sp.identity(n, format="csr") + phi * (sp.diags(degree) - chi)
    logger.debug(f"GMRF n={n}, phi={phi}, delta={delta:.4g}: mean degree {degree.mean():.1f}")
    return as_sparse(A)


def gmrf_log_likelihood(A, x, logdet: float) -> float:
    """phi-dependent part log det A - x^T A x of the GMRF log-likelihood."""
    x = np.asarray(x, dtype=float)
    return float(logdet - np.real(np.vdot(x, A @ x)))


def generate_matrix(spec: MatrixSpec) -> sp.csr_matrix:
    fam = spec.family
    if fam == "tridiag":
        return tridiag(spec.n, spec.a, spec.b, spec.c)
    if fam == "shifted_skew":
        return tridiag(spec.n, -1, 2 + 1j, 1)
    if fam == "laplace2d":
        return laplace2d(spec.N, spec.shift)
    if fam == "covariance":
        return covariance(spec.N, spec.alpha, spec.beta)
    if fam == "gmrf":
        return gmrf(spec.n, spec.phi, spec.delta, spec.seed)
    if fam == "file":
        return read_matrix_market(spec.path)
    raise ArgumentError(f"unknown matrix family {fam!r}")
