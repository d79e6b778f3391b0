"""Arnoldi / Lanczos approximation of f(A)b and of v^H f(A) v."""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import settings
from .errors import ArgumentError, DimensionError
from .models import StepRule
from .sparse import ScalarFunction, dense_function

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArnoldiDecomposition:
    Q: np.ndarray
    H: np.ndarray
    beta0: float
    breakdown_at: Optional[int] = None
    exact: bool = False
    h_next: float = 0.0

    @property
    def steps(self) -> int:
        return self.H.shape[0]


def hermitian_probe(A, seed: Optional[int] = None) -> bool:
    """Randomized check of y^H A x == (A y)^H x."""
    n = A.shape[0]
    rng = np.random.default_rng(settings.HERMITIAN_PROBE_SEED if seed is None else seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    Ax, Ay = A @ x, A @ y
    lhs, rhs = np.vdot(y, Ax), np.vdot(Ay, x)
    scale = max(np.linalg.norm(Ax) * np.linalg.norm(y), np.linalg.norm(Ay) * np.linalg.norm(x), 1e-300)
    return abs(lhs - rhs) <= settings.HERMITIAN_PROBE_TOL * scale


def arnoldi(A, b, s: int, hermitian: bool = False, check_hermitian: bool = True) -> ArnoldiDecomposition:
    """s steps of Arnoldi with modified Gram-Schmidt and one reorthogonalization pass.

    A lucky breakdown at step k < s returns the k-step decomposition flagged exact.
    With ``hermitian`` the projected matrix is returned as an exactly Hermitian
    tridiagonal matrix.
    """
    n = A.shape[0]
    b = np.asarray(b, dtype=np.complex128).ravel()
    if b.shape[0] != n:
        raise DimensionError(f"start vector of length {b.shape[0]} for an operator of size {n}")
    if not 1 <= s <= n:
        raise ArgumentError(f"steps must lie in 1..{n}, got {s}")
    beta0 = float(np.linalg.norm(b))
    if beta0 == 0.0:
        raise ArgumentError("Arnoldi start vector is zero")
    if hermitian and check_hermitian and not hermitian_probe(A):
        raise ArgumentError("matrix was declared Hermitian but fails the symmetry probe")

    Q = np.zeros((n, s + 1), dtype=np.complex128)
    H = np.zeros((s + 1, s), dtype=np.complex128)
    Q[:, 0] = b / beta0
    k = s
    breakdown_at = None
    for j in range(s):
        w = np.asarray(A @ Q[:, j], dtype=np.complex128).ravel()
        scale = np.linalg.norm(w)
        for _ in range(2):
            for i in range(j + 1):
                h = np.vdot(Q[:, i], w)
                H[i, j] += h
                w -= h * Q[:, i]
        h_next = np.linalg.norm(w)
        H[j + 1, j] = h_next
        if h_next <= settings.BREAKDOWN_TOL * scale:
            k = j + 1
            breakdown_at = k
            logger.debug(f"Lucky breakdown at step {k} of {s}")
            break
        Q[:, j + 1] = w / h_next

    Hk = H[:k, :k].copy()
    if hermitian:
        Hk = (Hk + Hk.conj().T) / 2
        Hk[np.abs(np.subtract.outer(np.arange(k), np.arange(k))) > 1] = 0.0
        Hk[np.diag_indices(k)] = Hk.diagonal().real
    return ArnoldiDecomposition(
        Q=Q[:, :k].copy(),
        H=Hk,
        beta0=beta0,
        breakdown_at=breakdown_at,
        exact=breakdown_at is not None,
        h_next=float(abs(H[k, k - 1])),
    )


def krylov_fun_vec(A, b, f: ScalarFunction, s: int, hermitian: bool = False) -> np.ndarray:
    """f_s = ||b|| Q f(H) e_1."""
    dec = arnoldi(A, b, s, hermitian=hermitian)
    F = dense_function(dec.H, f)
    return dec.beta0 * (dec.Q @ F[:, 0])


def krylov_quadratic_form(A, v, f: ScalarFunction, s: int, hermitian: bool = False) -> complex:
    """alpha_s = ||v||^2 e_1^H f(H) e_1."""
    dec = arnoldi(A, v, s, hermitian=hermitian)
    F = dense_function(dec.H, f)
    return complex(dec.beta0 ** 2 * F[0, 0])


def recommended_steps(rule: StepRule) -> int:
    if rule.purpose == "sparse_approx":
        return rule.d + 1
    if rule.hermitian:
        return (rule.d + 2) // 2
    return rule.d
