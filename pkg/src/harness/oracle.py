"""Dense desk-scale oracles used to score probing estimates."""
import logging
from typing import Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..config import settings
from ..errors import OracleCapError
from ..sparse import ScalarFunction, as_sparse, dense_function, require_square

logger = logging.getLogger(__name__)


def oracle_feasible(n: int) -> bool:
    return n <= settings.DENSE_ORACLE_CAP


def dense_reference(A, f: ScalarFunction) -> np.ndarray:
    """Dense f(A); refuses matrices beyond DENSE_ORACLE_CAP."""
    n = require_square(A)
    if not oracle_feasible(n):
        raise OracleCapError(f"dense oracle refused: n = {n} exceeds DENSE_ORACLE_CAP = {settings.DENSE_ORACLE_CAP}")
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.complex128)
    logger.debug(f"Computing dense {f.name}(A) for n = {n}")
    return dense_function(dense, f)


def gershgorin_interval(A) -> Tuple[float, float]:
    """Real interval containing the spectrum of a Hermitian A."""
    A = as_sparse(A)
    diag = A.diagonal()
    radii = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag.real - radii)), float(np.max(diag.real + radii))


def spectral_interval(A) -> Tuple[float, float]:
    """Extreme eigenvalues of a Hermitian A; Gershgorin enclosure beyond the oracle cap."""
    A = as_sparse(A)
    if not oracle_feasible(A.shape[0]):
        logger.info(f"Using Gershgorin interval for n = {A.shape[0]}")
        return gershgorin_interval(A)
    w = scipy.linalg.eigvalsh(A.toarray())
    return float(w[0]), float(w[-1])
