"""Probing estimators for tr(f(A)) and for the sparse approximation f(A)^[d]."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .bounds import BoundRequest, DecayModel, bound_label, evaluate_bound
from .coloring import Coloring
from .config import settings
from .errors import ArgumentError, DimensionError
from .graph import pattern_graph, within_distance
from .harness.oracle import dense_reference
from .krylov import hermitian_probe, krylov_fun_vec, krylov_quadratic_form, recommended_steps
from .models import ErrorReport, StepRule
from .sparse import ScalarFunction, as_sparse

logger = logging.getLogger(__name__)

Steps = Union[int, str]


@dataclass(frozen=True)
class ProbingVectors:
    # n x m indicator matrix, column l is v_l
    matrix: sp.csr_matrix
    coloring: Coloring

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    def vector(self, l: int) -> np.ndarray:
        return self.matrix[:, l].toarray().ravel()


@dataclass(frozen=True)
class TraceEstimate:
    value: complex
    m: int
    per_class_terms: np.ndarray
    krylov_steps: Steps
    coloring: Coloring
    attached_bound: Optional[float] = None
    bound_label: Optional[str] = None
    bound_kind: Optional[str] = None


@dataclass(frozen=True)
class SparseFunctionApprox:
    matrix: sp.csr_matrix
    d: int
    krylov_steps: Steps
    coloring: Coloring
    attached_bound: Optional[float] = None
    bound_label: Optional[str] = None
    bound_kind: Optional[str] = None


def probing_vectors(col: Coloring) -> ProbingVectors:
    n = col.n
    V = sp.csr_matrix((np.ones(n), (np.arange(n), col.class_of)), shape=(n, col.m))
    return ProbingVectors(matrix=V, coloring=col)


def _map(fn: Callable, items: Iterable) -> List:
    if settings.WORKERS > 1:
        with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _resolve_steps(steps: Steps, rule: StepRule, n: int) -> Optional[int]:
    if steps == "exact":
        return None
    if steps == "auto":
        s = recommended_steps(rule)
    elif isinstance(steps, (int, np.integer)) and steps >= 1:
        s = int(steps)
    else:
        raise ArgumentError(f"steps must be a positive integer, 'auto' or 'exact', got {steps!r}")
    return min(s, n)


def _attach(model: Optional[DecayModel], bound: Optional[BoundRequest]):
    if model is None or bound is None:
        return None, None, None
    return evaluate_bound(model, bound), bound_label(model, bound.kind), bound.kind.value


def estimate_trace(A, f: ScalarFunction, col: Coloring, steps: Steps = "exact",
                   hermitian: Optional[bool] = None, model: Optional[DecayModel] = None,
                   bound: Optional[BoundRequest] = None,
                   reference: Optional[np.ndarray] = None) -> TraceEstimate:
    """T = sum_l v_l^H f(A) v_l over the classes of a distance-d coloring of G(A).

    With ``steps="exact"`` the terms come from a dense f(A), taken from ``reference`` when given.
    """
    A = as_sparse(A)
    n = A.shape[0]
    if col.n != n:
        raise DimensionError(f"coloring covers {col.n} nodes, matrix has size {n}")
    if hermitian is None:
        hermitian = hermitian_probe(A)
    V = probing_vectors(col)
    s = _resolve_steps(steps, StepRule(purpose="trace", hermitian=hermitian, d=col.certified_distance), n)

    if s is None:
        F = dense_reference(A, f) if reference is None else reference
        W = F @ V.matrix.toarray()
        terms = np.array([W[cls, l].sum() for l, cls in enumerate(col.classes)])
    else:
        terms = np.array(_map(
            lambda l: krylov_quadratic_form(A, V.vector(l), f, s, hermitian=hermitian), range(V.m)
        ))
    value = complex(terms.sum())
    attached, label, kind = _attach(model, bound)
    logger.debug(f"Trace estimate with {V.m} probing vectors, steps={steps}: {value:.12g}")
    return TraceEstimate(value=value, m=V.m, per_class_terms=terms, krylov_steps=s if s is not None else "exact",
                         coloring=col, attached_bound=attached, bound_label=label, bound_kind=kind)


def kept_pattern(A, d: int) -> sp.coo_matrix:
    """{(i, j): undirected distance <= d}."""
    return within_distance(pattern_graph(A, directed=False), d).tocoo()


def sparse_approximation(A, f: ScalarFunction, d: int, col: Coloring, steps: Steps = "exact",
                         hermitian: Optional[bool] = None, model: Optional[DecayModel] = None,
                         bound: Optional[BoundRequest] = None,
                         reference: Optional[np.ndarray] = None) -> SparseFunctionApprox:
    """f(A)^[d] from one f(A) v_l per color class of a distance-2d coloring of |G(A)|."""
    A = as_sparse(A)
    n = A.shape[0]
    if d < 0:
        raise ArgumentError(f"distance must be nonnegative, got {d}")
    if col.n != n:
        raise DimensionError(f"coloring covers {col.n} nodes, matrix has size {n}")
    if not col.certifies(2 * d, directed=False):
        raise ArgumentError(
            f"sparse approximation at distance {d} needs an undirected distance-{2 * d} coloring, "
            f"got {'directed ' if col.directed else ''}distance-{col.certified_distance}"
        )
    if hermitian is None:
        hermitian = hermitian_probe(A)
    V = probing_vectors(col)
    s = _resolve_steps(steps, StepRule(purpose="sparse_approx", hermitian=hermitian, d=max(d, 1)), n)

    if s is None:
        F = dense_reference(A, f) if reference is None else reference
        W = F @ V.matrix.toarray()
    else:
        columns = _map(lambda l: krylov_fun_vec(A, V.vector(l), f, s, hermitian=hermitian), range(V.m))
        W = np.column_stack(columns)

    keep = kept_pattern(A, d)
    data = W[keep.row, col.class_of[keep.col]]
    M = sp.csr_matrix((data, (keep.row, keep.col)), shape=(n, n), dtype=np.complex128)
    M.sort_indices()
    attached, label, kind = _attach(model, bound)
    logger.debug(f"Sparse approximation at distance {d}: {M.nnz} entries from {V.m} probing vectors")
    return SparseFunctionApprox(matrix=M, d=d, krylov_steps=s if s is not None else "exact", coloring=col,
                                attached_bound=attached, bound_label=label, bound_kind=kind)


def probing_error_exact(A, f: ScalarFunction, result: Union[TraceEstimate, SparseFunctionApprox],
                        reference: Optional[np.ndarray] = None,
                        norms: Sequence[str] = ("fro", "1", "2", "max")) -> ErrorReport:
    """Compare a probing result against a dense f(A)."""
    F = dense_reference(as_sparse(A), f) if reference is None else reference
    if isinstance(result, TraceEstimate):
        return ErrorReport(trace=float(abs(np.trace(F) - result.value)))
    E = F - result.matrix.toarray()
    report = {}
    if "fro" in norms:
        report["fro"] = float(np.linalg.norm(E, "fro"))
    if "1" in norms:
        report["one"] = float(np.linalg.norm(E, 1))
    if "2" in norms:
        report["two"] = float(np.linalg.norm(E, 2))
    if "max" in norms:
        report["max"] = float(np.max(np.abs(E))) if E.size else 0.0
    return ErrorReport(**report)
