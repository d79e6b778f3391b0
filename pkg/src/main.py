import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .bounds import BoundKind, DecayModel
from .coloring import banded_coloring, greedy_coloring
from .config import settings
from .engine import ExperimentEngine, choose_coloring
from .errors import ArgumentError, NumericalError
from .graph import cuthill_mckee, pattern_graph
from .harness.generators import generate_matrix
from .models import ExperimentConfig, LatticeSpec, MatrixSpec, SweepSpec
from .sparse import read_matrix_market, write_matrix_market
from .store import CSV_COLUMNS, ResultStore, record_row, render_csv

# Setup logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logging.getLogger("concurrent.futures").setLevel(logging.WARNING)

logger = logging.getLogger("main")

_TRACE_BOUNDS = {
    "banded": BoundKind.TRACE_BANDED,
    "lattice": BoundKind.TRACE_LATTICE,
    "poly": BoundKind.TRACE_POLY,
    "generic": BoundKind.TRACE_GENERIC,
    "krylov": BoundKind.KRYLOV_TRACE,
}
_SPARSE_BOUNDS = {
    "banded": BoundKind.SPARSE_1NORM_BANDED,
    "poly": BoundKind.SPARSE_FROBENIUS_POLY,
    "generic": BoundKind.SPARSE_NORMS_GENERIC,
    "krylov": BoundKind.KRYLOV_COMBINED_FROBENIUS,
}


def _steps(text: str):
    if text in ("auto", "exact"):
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be an integer, 'auto' or 'exact', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("steps must be >= 1")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _add_matrix_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="Matrix Market file")
    src.add_argument("--family", help="generated family, e.g. tridiag:n=1000,a=-1,b=4,c=-1")


def _add_probing_args(p: argparse.ArgumentParser):
    _add_matrix_source(p)
    p.add_argument("--function", choices=["inv", "invsqrt", "log", "exp"], default="inv")
    p.add_argument("--distance", type=_positive_int, required=True)
    p.add_argument("--steps", type=_steps, default="auto")
    p.add_argument("--coloring", choices=["auto", "greedy", "banded", "lattice", "rcm"], default="auto")
    p.add_argument("--bound", choices=sorted(_TRACE_BOUNDS))
    p.add_argument("--C", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--fit", choices=["fit", "envelope"], help="fit the decay model from one column")
    herm = p.add_mutually_exclusive_group()
    herm.add_argument("--hermitian", dest="hermitian", action="store_true", default=None)
    herm.add_argument("--non-hermitian", dest="hermitian", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probing",
        description="Probing-based trace estimation and sparse approximation of matrix functions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    color = sub.add_parser("color", help="distance-d coloring of a sparsity pattern")
    _add_matrix_source(color)
    color.add_argument("--distance", type=_positive_int, required=True)
    color.add_argument("--method", choices=["greedy", "banded", "lattice"], default="greedy")
    color.add_argument("--beta", type=_positive_int)
    color.add_argument("--dims", help="lattice extents N1xN2x...")
    color.add_argument("--order", choices=["natural", "rcm"], default="natural")
    color.add_argument("--directed", action="store_true", help="color the directed graph G(A)")

    trace = sub.add_parser("trace", help="probing estimate of tr(f(A))")
    _add_probing_args(trace)

    approx = sub.add_parser("sparse-approx", help="sparse approximation f(A)^[d]")
    _add_probing_args(approx)
    approx.add_argument("--norm", choices=["fro", "1", "2", "max"], default="fro")
    approx.add_argument("--out", help="write f(A)^[d] as Matrix Market")

    exp = sub.add_parser("experiment", help="run a sweep described by a JSON config")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", help="CSV path (default OUTPUT_DIR/<label>.csv)")
    return parser


def _load_matrix(args):
    if args.matrix:
        return read_matrix_market(args.matrix), MatrixSpec(family="file", path=args.matrix)
    spec = MatrixSpec.parse(args.family)
    return generate_matrix(spec), spec


def cmd_color(args) -> int:
    A, spec = _load_matrix(args)
    n = A.shape[0]
    order = None
    if args.order == "rcm":
        order = cuthill_mckee(pattern_graph(A, directed=False)).permutation
    if args.method == "banded":
        if args.beta is None:
            raise ArgumentError("--method banded needs --beta")
        col = banded_coloring(n, args.beta, args.distance, order=order)
    elif args.method == "lattice":
        dims = LatticeSpec.parse(args.dims) if args.dims else None
        col, _ = choose_coloring(A, args.distance, "lattice", spec=spec, dims=dims)
    else:
        col = greedy_coloring(pattern_graph(A, directed=args.directed), args.distance, order=order)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["node", "color"])
    for i, c in enumerate(col.color_of, start=1):
        writer.writerow([i, int(c)])
    logger.info(f"{col.m} colors ({col.source}, distance {col.certified_distance})")
    return 0


def _probing_config(args, task: str, spec: MatrixSpec) -> ExperimentConfig:
    model = args.fit or "auto"
    if args.C is not None or args.q is not None:
        if args.C is None or args.q is None:
            raise ArgumentError("--C and --q must be given together")
        model = DecayModel(C=args.C, q=args.q, K=args.K, from_polynomial_property=True, source="cli")
    bounds = _TRACE_BOUNDS if task == "trace" else _SPARSE_BOUNDS
    if args.bound is not None and args.bound not in bounds:
        raise ArgumentError(f"--bound {args.bound} does not apply to {task}")
    return ExperimentConfig(
        family=spec,
        function=args.function,
        task=task,
        sweep=SweepSpec(variable="d", values=[args.distance]),
        distance=args.distance,
        steps=args.steps,
        coloring=args.coloring,
        norm=getattr(args, "norm", "fro"),
        model=model,
        bound=bounds[args.bound] if args.bound else None,
        hermitian=args.hermitian,
    )


def cmd_probe(args, task: str) -> int:
    if args.matrix:
        spec = MatrixSpec(family="file", path=args.matrix)
    else:
        spec = MatrixSpec.parse(args.family)
    engine = ExperimentEngine(_probing_config(args, task, spec))
    record, result = engine.evaluate_point(args.distance)
    sys.stdout.write(render_csv([record]))
    if task == "sparse" and args.out:
        write_matrix_market(args.out, result.matrix, comment=f"{args.function}(A)^[{args.distance}]")
        logger.info(f"Wrote sparse approximation with {result.matrix.nnz} entries to {args.out}")
    return 0


def cmd_experiment(args) -> int:
    try:
        config = ExperimentConfig.model_validate_json(Path(args.config).read_text())
    except OSError as e:
        raise ArgumentError(f"cannot read config {args.config}: {e}")
    label = config.label or settings.RUN_LABEL or f"{config.family.family}_{config.function}_{config.task}"
    out = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / f"{label}.csv"

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    records = []
    for record in ExperimentEngine(config).run():
        writer.writerow(record_row(record))
        sys.stdout.flush()
        records.append(record)

    store = ResultStore(str(out))
    if store.write_records(records):
        store.write_manifest(config, len(records))
        logger.info(f"Wrote {len(records)} records to {out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "color":
            return cmd_color(args)
        if args.command == "trace":
            return cmd_probe(args, "trace")
        if args.command == "sparse-approx":
            return cmd_probe(args, "sparse")
        return cmd_experiment(args)
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return 3
    except (ArgumentError, ValidationError, ValueError) as e:
        logger.error(f"Invalid arguments: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
