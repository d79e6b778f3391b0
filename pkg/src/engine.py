import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .bounds import (
    CROUZEIX_K,
    BoundKind,
    BoundRequest,
    DecayModel,
    bound_label,
    decay_model_inverse_hpd,
    decay_model_inverse_sqrt,
    evaluate_bound,
    fit_decay_model,
)
from .coloring import Coloring, banded_coloring, greedy_coloring, lattice_coloring
from .config import settings
from .errors import ArgumentError, FitError
from .graph import BEYOND_CAP, bandwidth, bfs_distances, cuthill_mckee, pattern_graph
from .harness.generators import generate_matrix
from .harness.oracle import dense_reference, oracle_feasible, spectral_interval
from .krylov import hermitian_probe, krylov_fun_vec
from .models import ExperimentConfig, ExperimentRecord, LatticeSpec, MatrixSpec
from .probing import SparseFunctionApprox, TraceEstimate, estimate_trace, probing_error_exact, sparse_approximation
from .sparse import FunctionKind, ScalarFunction

logger = logging.getLogger(__name__)

_AUTO_METHOD = {
    "tridiag": "banded",
    "shifted_skew": "banded",
    "laplace2d": "lattice",
    "covariance": "greedy",
    "gmrf": "rcm",
    "file": "greedy",
}


def choose_coloring(A, distance: int, method: str = "auto", spec: Optional[MatrixSpec] = None,
                    directed: bool = False, dims: Optional[LatticeSpec] = None) -> Tuple[Coloring, str]:
    """Distance-``distance`` coloring of A by the named method; returns (coloring, method used)."""
    if method == "auto":
        method = _AUTO_METHOD[spec.family] if spec is not None else "greedy"
    n = A.shape[0]
    if method == "banded":
        beta = max(bandwidth(A), 1)
        return banded_coloring(n, beta, distance), method
    if method == "rcm":
        reorder = cuthill_mckee(pattern_graph(A, directed=False))
        logger.info(f"RCM reduced bandwidth from {reorder.bandwidth_before} to {reorder.bandwidth}")
        return banded_coloring(n, max(reorder.bandwidth, 1), distance, order=reorder.permutation), method
    if method == "lattice":
        if dims is None:
            if spec is not None and spec.family == "laplace2d":
                dims = LatticeSpec(dims=(spec.N, spec.N))
            elif bandwidth(A) <= 1:
                dims = LatticeSpec(dims=(n,))
            else:
                raise ArgumentError("lattice coloring needs lattice extents for this matrix")
        if dims.n != n:
            raise ArgumentError(f"lattice {dims.dims} has {dims.n} nodes, matrix has size {n}")
        return lattice_coloring(dims, distance), method
    if method == "greedy":
        return greedy_coloring(pattern_graph(A, directed=directed), distance), method
    raise ArgumentError(f"unknown coloring method {method!r}")


def spectrum_of_family(spec: MatrixSpec) -> Optional[Tuple[float, float]]:
    """Closed-form spectral enclosure for the Hermitian structured families."""
    if spec.family == "tridiag" and spec.hermitian:
        b, a = spec.b.real, abs(spec.a)
        return b - 2 * a, b + 2 * a
    if spec.family == "laplace2d":
        return spec.shift, spec.shift + 8.0
    return None


def fit_column(A, f: ScalarFunction, j: int, F: Optional[np.ndarray] = None,
               hermitian: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Column j of f(A) with the directed distances d(i, j)."""
    if F is not None:
        column = F[:, j]
    else:
        e = np.zeros(A.shape[0])
        e[j] = 1.0
        column = krylov_fun_vec(A, e, f, min(settings.FIT_KRYLOV_STEPS, A.shape[0]), hermitian=hermitian)
    dist = bfs_distances(pattern_graph(A.T, directed=True), j)
    reached = dist < BEYOND_CAP
    return column[reached], dist[reached]


class ExperimentEngine:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.f = ScalarFunction.from_name(config.function)
        self._lock = threading.Lock()
        self._matrices: Dict[MatrixSpec, sp.csr_matrix] = {}
        self._oracles: Dict[MatrixSpec, Optional[np.ndarray]] = {}

    def matrix(self, spec: MatrixSpec) -> sp.csr_matrix:
        with self._lock:
            if spec not in self._matrices:
                self._matrices[spec] = generate_matrix(spec)
            return self._matrices[spec]

    def oracle(self, spec: MatrixSpec) -> Optional[np.ndarray]:
        A = self.matrix(spec)
        with self._lock:
            if spec not in self._oracles:
                if oracle_feasible(A.shape[0]):
                    self._oracles[spec] = dense_reference(A, self.f)
                else:
                    logger.info(f"Skipping dense oracle for n = {A.shape[0]}")
                    self._oracles[spec] = None
            return self._oracles[spec]

    def is_hermitian(self, spec: MatrixSpec, A) -> bool:
        if self.config.hermitian is not None:
            return self.config.hermitian
        if spec.family == "file":
            return hermitian_probe(A)
        return spec.hermitian

    def decay_model(self, spec: MatrixSpec, A) -> DecayModel:
        choice = self.config.model
        if isinstance(choice, DecayModel):
            return choice
        K = 1.0 if spec.normal else CROUZEIX_K
        interval = spectrum_of_family(spec)
        if interval is None and choice == "auto" and spec.family == "file" and self.is_hermitian(spec, A):
            interval = spectral_interval(A)
        if choice == "auto" and interval is not None and interval[0] > 0:
            if self.f.kind == FunctionKind.INVERSE:
                return decay_model_inverse_hpd(*interval)
            if self.f.kind == FunctionKind.INVERSE_SQRT:
                return decay_model_inverse_sqrt(*interval)
        if choice == "auto":
            mode = "lsq" if spec.family == "gmrf" else "envelope"
        else:
            mode = "lsq" if choice == "fit" else "envelope"
        j = A.shape[0] // 2
        column, dist = fit_column(A, self.f, j, F=self.oracle(spec), hermitian=self.is_hermitian(spec, A))
        model = fit_decay_model(column, dist, K=K, mode=mode)
        logger.info(f"Fitted decay model ({mode}) for {spec.family}: C = {model.C:.4g}, q = {model.q:.4g}")
        return model

    def default_bound(self, model: DecayModel, method: str, steps) -> BoundKind:
        if self.config.bound is not None:
            return self.config.bound
        if self.config.task == "trace":
            if method in ("banded", "rcm"):
                return BoundKind.TRACE_BANDED
            if method == "lattice":
                return BoundKind.TRACE_LATTICE
            return BoundKind.TRACE_GENERIC
        if model.from_polynomial_property and not model.fitted:
            if steps != "exact":
                return BoundKind.KRYLOV_COMBINED_FROBENIUS
            if self.config.norm == "fro":
                return BoundKind.SPARSE_FROBENIUS_POLY
        if self.config.norm == "1" and method in ("banded", "rcm"):
            return BoundKind.SPARSE_1NORM_BANDED
        return BoundKind.SPARSE_NORMS_GENERIC

    def run_point(self, value: int) -> ExperimentRecord:
        return self.evaluate_point(value)[0]

    def evaluate_point(self, value: int) -> Tuple[ExperimentRecord, Union[TraceEstimate, SparseFunctionApprox]]:
        cfg = self.config
        spec = cfg.family.with_size(value) if cfg.sweep.variable == "n" else cfg.family
        d = value if cfg.sweep.variable == "d" else cfg.distance
        steps = value if cfg.sweep.variable == "s" else cfg.steps

        A = self.matrix(spec)
        n = A.shape[0]
        hermitian = self.is_hermitian(spec, A)
        F = self.oracle(spec)
        if steps == "exact" and F is None:
            logger.info(f"No dense oracle at n = {n}; evaluating with recommended Krylov steps")
            steps = "auto"

        try:
            model = self.decay_model(spec, A)
        except FitError as e:
            logger.warning(f"No decay model for {spec.family}: {e}; reporting without a bound")
            model = None
        trace_task = cfg.task == "trace"
        distance = d if trace_task else 2 * d
        col, method = choose_coloring(A, distance, cfg.coloring, spec=spec, directed=trace_task)
        kind = self.default_bound(model, method, steps) if model is not None else None

        start = time.perf_counter()
        if trace_task:
            result = estimate_trace(A, self.f, col, steps=steps, hermitian=hermitian, reference=F)
        else:
            result = sparse_approximation(A, self.f, d, col, steps=steps, hermitian=hermitian, reference=F)
        seconds = time.perf_counter() - start

        s_used = result.krylov_steps
        bound_value, label = None, None
        if model is not None:
            request = BoundRequest(
                kind=kind, n=n, d=d, s=s_used if s_used != "exact" else None,
                beta=col.bandwidth, D=len(spec_dims(spec, method, n)), class_sizes=col.class_sizes.tolist(),
            )
            bound_value, label = evaluate_bound(model, request), bound_label(model, kind)

        exact, abs_error = None, None
        if F is not None:
            report = probing_error_exact(A, self.f, result, reference=F, norms=(cfg.norm,))
            if trace_task:
                exact, abs_error = complex(np.trace(F)), report.trace
            else:
                abs_error = report.get(cfg.norm)
        ratio = bound_value / abs_error if abs_error and bound_value is not None else None

        record = ExperimentRecord(
            family=spec.family, n=n, f=cfg.function, d=d, m_colors=col.m, s_steps=s_used,
            estimate=result.value if trace_task else None,
            nnz=None if trace_task else int(result.matrix.nnz),
            exact=exact, abs_error=abs_error, bound=bound_value, ratio=ratio, seconds=seconds,
            task=cfg.task, coloring=method, norm="trace" if trace_task else cfg.norm,
            bound_kind=kind.value if kind is not None else None, bound_label=label, oracle_skipped=F is None, sweep_value=value,
        )
        logger.info(f"{spec.family} n={n} d={d} s={s_used}: error={abs_error} {label or 'bound'}={bound_value}")
        return record, result

    def run(self) -> Iterator[ExperimentRecord]:
        values = sorted(self.config.sweep.values)
        if settings.WORKERS > 1:
            with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
                records: List[ExperimentRecord] = list(pool.map(self.run_point, values))
            yield from sorted(records, key=lambda r: r.sweep_value)
        else:
            for value in values:
                yield self.run_point(value)


def spec_dims(spec: MatrixSpec, method: str, n: int) -> Tuple[int, ...]:
    if method == "lattice" and spec.family == "laplace2d":
        return (spec.N, spec.N)
    return (n,)


def run_experiment(config: ExperimentConfig) -> Iterator[ExperimentRecord]:
    """One record per sweep point, in ascending sweep order."""
    yield from ExperimentEngine(config).run()
