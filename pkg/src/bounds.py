"""Decay models and the a-priori error bounds built on them.

A decay model (C, q, K) asserts |[f(A)]_ij| <= C q^d(i,j); with
eps = C q^d every bound below is a closed-form expression in eps, the
probing distance d and the size of the problem.
"""
import logging
import math
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import settings
from .errors import ArgumentError, DomainError, FitError

logger = logging.getLogger(__name__)

CROUZEIX_K = 1.0 + math.sqrt(2.0)


class BoundKind(str, Enum):
    TRACE_GENERIC = "trace_generic"
    TRACE_BANDED = "trace_banded"
    TRACE_LATTICE = "trace_lattice"
    TRACE_POLY = "trace_poly"
    SPARSE_FROBENIUS_POLY = "sparse_frobenius_poly"
    SPARSE_NORMS_GENERIC = "sparse_norms_generic"
    SPARSE_1NORM_BANDED = "sparse_1norm_banded"
    KRYLOV_COMBINED_FROBENIUS = "krylov_combined_frobenius"
    KRYLOV_TRACE = "krylov_trace"
    KRYLOV_VECTOR = "krylov_vector"
    KRYLOV_BILINEAR = "krylov_bilinear"


_REQUIRED = {
    BoundKind.TRACE_GENERIC: ("d", "class_sizes"),
    BoundKind.TRACE_BANDED: ("n", "d"),
    BoundKind.TRACE_LATTICE: ("n", "d", "D"),
    BoundKind.TRACE_POLY: ("n", "d"),
    BoundKind.SPARSE_FROBENIUS_POLY: ("n", "d"),
    BoundKind.SPARSE_NORMS_GENERIC: ("n", "d", "gamma"),
    BoundKind.SPARSE_1NORM_BANDED: ("d", "beta"),
    BoundKind.KRYLOV_COMBINED_FROBENIUS: ("n", "d", "s"),
    BoundKind.KRYLOV_TRACE: ("n", "d"),
    BoundKind.KRYLOV_VECTOR: ("s", "b_norm"),
    BoundKind.KRYLOV_BILINEAR: ("s", "b_norm", "hermitian"),
}

# kinds whose derivation needs the polynomial-approximation form of the decay
_POLYNOMIAL_KINDS = {BoundKind.TRACE_POLY, BoundKind.SPARSE_FROBENIUS_POLY}
_KRYLOV_KINDS = {
    BoundKind.KRYLOV_COMBINED_FROBENIUS,
    BoundKind.KRYLOV_TRACE,
    BoundKind.KRYLOV_VECTOR,
    BoundKind.KRYLOV_BILINEAR,
}


class DecayModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    C: float = Field(gt=0)
    q: float = Field(ge=0, lt=1)
    K: float = Field(default=1.0, ge=1)
    from_polynomial_property: bool = False
    fitted: bool = False
    source: str = ""

    @property
    def normal(self) -> bool:
        return self.K == 1.0

    def epsilon(self, d: int) -> float:
        return self.C * self.q ** d


class BoundRequest(BaseModel):
    kind: BoundKind
    n: Optional[int] = None
    d: Optional[int] = None
    s: Optional[int] = None
    beta: Optional[int] = None
    D: Optional[int] = None
    class_sizes: Optional[List[int]] = None
    gamma: Optional[int] = None
    b_norm: Optional[float] = None
    hermitian: Optional[bool] = None

    @model_validator(mode="after")
    def _required_params(self):
        if self.gamma is None and self.class_sizes:
            self.gamma = max(self.class_sizes)
        for name in _REQUIRED[self.kind]:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{self.kind.value} needs parameter {name}")
            if name == "class_sizes":
                if not value or min(value) < 1:
                    raise ValueError("class_sizes must be nonempty and positive")
            elif name != "hermitian" and value <= 0:
                raise ValueError(f"{self.kind.value}: parameter {name} must be positive, got {value}")
        return self


@lru_cache(maxsize=None)
def _eulerian_row(s: int) -> Tuple[int, ...]:
    if s == 0:
        return (1,)
    prev = _eulerian_row(s - 1)
    row = []
    for k in range(s):
        left = (k + 1) * prev[k] if k < len(prev) else 0
        right = (s - k) * prev[k - 1] if k >= 1 else 0
        row.append(left + right)
    return tuple(row)


def polylog_neg_int(s: int, z: float) -> float:
    """Li_{-s}(z) = sum_i i^s z^i for integer s >= 0 and 0 <= z < 1, in closed rational form."""
    if s < 0 or int(s) != s:
        raise ArgumentError(f"order must be a nonnegative integer, got {s}")
    if not 0 <= z < 1:
        raise DomainError(f"polylog argument must lie in [0, 1), got {z}")
    if s == 0:
        return z / (1.0 - z)
    numerator = 0.0
    for coeff in reversed(_eulerian_row(int(s))):
        numerator = numerator * z + coeff
    return z * numerator / (1.0 - z) ** (s + 1)


def evaluate_bound(model: DecayModel, req: BoundRequest) -> float:
    if req.kind in _POLYNOMIAL_KINDS and not model.from_polynomial_property:
        raise ArgumentError(f"{req.kind.value} needs a decay model from a polynomial approximation property")
    C, q, K = model.C, model.q, model.K
    if q == 0:
        logger.warning("Decay model has q = 0; zero bounds only guarantee exactness for polynomial f")

    kind = req.kind
    if kind in _KRYLOV_KINDS and kind not in (BoundKind.KRYLOV_COMBINED_FROBENIUS, BoundKind.KRYLOV_TRACE):
        s = req.s
        if kind == BoundKind.KRYLOV_VECTOR:
            return 2.0 * req.b_norm * K * C * q ** (s - 1)
        exponent = 2 * s - 1 if req.hermitian else s
        return 2.0 * req.b_norm ** 2 * K * C * q ** exponent

    d, n = req.d, req.n
    eps = model.epsilon(d)
    qd = q ** d
    if kind == BoundKind.TRACE_GENERIC:
        return float(sum(size * (size - 1) for size in req.class_sizes)) * eps
    if kind == BoundKind.TRACE_BANDED:
        return eps * 2.0 * n / (1.0 - qd)
    if kind == BoundKind.TRACE_LATTICE:
        return 2.0 * C * req.D * n * polylog_neg_int(req.D - 1, qd)
    if kind == BoundKind.TRACE_POLY:
        return 2.0 * K * n * eps
    if kind == BoundKind.SPARSE_FROBENIUS_POLY:
        return 2.0 * K * math.sqrt(n) * eps
    if kind == BoundKind.SPARSE_NORMS_GENERIC:
        return n * (req.gamma - 1) * eps
    if kind == BoundKind.SPARSE_1NORM_BANDED:
        beta = req.beta
        return 2.0 * beta * q * (2 + 2 * d * beta) / (1.0 - q) * eps
    if kind == BoundKind.KRYLOV_COMBINED_FROBENIUS:
        return 2.0 * K * C * math.sqrt(n) * (qd + q ** (req.s - 1))
    if kind == BoundKind.KRYLOV_TRACE:
        return 2.0 * K * C * n * qd
    raise ArgumentError(f"unknown bound kind {kind}")


def bound_label(model: DecayModel, kind: BoundKind) -> str:
    """``bound`` for rigorous values, ``estimate`` when the model is heuristic for this kind."""
    if model.fitted:
        return "estimate"
    if (kind in _POLYNOMIAL_KINDS or kind in _KRYLOV_KINDS) and not model.from_polynomial_property:
        return "estimate"
    return "bound"


def entrywise_bound(model: DecayModel, d: int, class_size, within):
    """Entrywise probing error: (|V_l| - 1) eps inside the kept pattern, eps outside."""
    eps = model.epsilon(d)
    return np.where(within, (np.asarray(class_size) - 1) * eps, eps)


def decay_model_inverse_hpd(a: float, b: float, C: Optional[float] = None) -> DecayModel:
    """Decay of A^{-1} for HPD A with spectrum in [a, b]; C defaults to 1/a."""
    if a <= 0:
        raise DomainError(f"spectrum lower bound must be positive, got {a}")
    if b < a:
        raise ArgumentError(f"empty spectral interval [{a}, {b}]")
    root = math.sqrt(b / a)
    q = (root - 1.0) / (root + 1.0)
    return DecayModel(C=1.0 / a if C is None else C, q=q, K=1.0, from_polynomial_property=True,
                      source=f"inverse_hpd[{a:g},{b:g}]")


def decay_model_inverse_sqrt(a: float, b: float, C: float = math.sqrt(2.0)) -> DecayModel:
    if a <= 0:
        raise DomainError(f"spectrum lower bound must be positive, got {a}")
    base = decay_model_inverse_hpd(a, b)
    return DecayModel(C=C, q=base.q, K=1.0, from_polynomial_property=False,
                      source=f"inverse_sqrt[{a:g},{b:g}]")


def fit_decay_model(column, distances, K: float = 1.0, mode: str = "lsq",
                    floor: Optional[float] = None) -> DecayModel:
    """Fit (C, q) to the magnitudes of one column against graph distance.

    ``lsq`` fits a line to log|entry| over distances >= 1; ``envelope`` returns the
    smallest C q^delta majorizing the per-distance maxima with q the largest ratio
    of consecutive maxima.
    """
    floor = settings.FIT_FLOOR if floor is None else floor
    mags = np.abs(np.asarray(column)).ravel()
    dist = np.asarray(distances).astype(np.int64).ravel()
    if mags.shape != dist.shape:
        raise ArgumentError(f"column and distances differ in length: {mags.shape} vs {dist.shape}")
    keep = (dist >= 1) & (mags > floor) & np.isfinite(mags)
    mags, dist = mags[keep], dist[keep]
    levels = np.unique(dist)
    if levels.size < 2:
        raise FitError("decay fit needs entries above the floor at two or more distinct distances")

    if mode == "lsq":
        slope, intercept = np.polyfit(dist.astype(float), np.log(mags), 1)
        q, C = math.exp(slope), math.exp(intercept)
    elif mode == "envelope":
        peaks = np.array([mags[dist == lvl].max() for lvl in levels])
        ratios = (peaks[1:] / peaks[:-1]) ** (1.0 / np.diff(levels))
        q = float(ratios.max())
        C = None
    else:
        raise ArgumentError(f"unknown fit mode {mode!r}")

    if q >= 1.0:
        logger.warning(f"Fitted q = {q:.6g} is not below 1; clamping to {settings.FIT_Q_MAX}")
        q = settings.FIT_Q_MAX
    if mode == "envelope":
        C = float(np.max(peaks / q ** levels.astype(float)))
    return DecayModel(C=C, q=q, K=K, from_polynomial_property=False, fitted=True, source=f"fit:{mode}")
