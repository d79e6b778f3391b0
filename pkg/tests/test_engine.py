import csv
import io
import json
import os
import tempfile
import unittest

import numpy as np

from src.bounds import CROUZEIX_K, BoundKind, DecayModel
from src.coloring import validate_coloring
from src.config import settings
from src.engine import ExperimentEngine, choose_coloring, fit_column, run_experiment, spectrum_of_family
from src.errors import ArgumentError
from src.graph import pattern_graph
from src.harness.generators import generate_matrix, tridiag
from src.models import ExperimentConfig, ExperimentRecord, LatticeSpec, MatrixSpec
from src.sparse import ScalarFunction, write_matrix_market
from src.store import CSV_COLUMNS, ResultStore, format_value, record_row, render_csv


def config(**kwargs):
    base = {"family": "tridiag:n=100", "sweep": {"variable": "d", "values": [1, 3, 5]}}
    base.update(kwargs)
    return ExperimentConfig.model_validate(base)


class TestChooseColoring(unittest.TestCase):
    def test_auto_per_family(self):
        spec = MatrixSpec(family="gmrf", n=300, phi=20.0)
        A = generate_matrix(spec)
        col, method = choose_coloring(A, 2, spec=spec)
        self.assertEqual(method, "rcm")
        self.assertTrue(validate_coloring(pattern_graph(A, directed=False), col).passed)

    def test_auto_without_spec_is_greedy(self):
        _, method = choose_coloring(tridiag(10, -1, 4, -1), 1)
        self.assertEqual(method, "greedy")

    def test_lattice_for_banded_matrix(self):
        col, _ = choose_coloring(tridiag(12, -1, 4, -1), 2, "lattice")
        self.assertEqual(col.m, 3)

    def test_lattice_size_mismatch(self):
        spec = MatrixSpec(family="laplace2d", N=4)
        with self.assertRaises(ArgumentError):
            choose_coloring(generate_matrix(spec), 1, "lattice", dims=LatticeSpec(dims=(3, 3)))

    def test_unknown_method(self):
        with self.assertRaises(ArgumentError):
            choose_coloring(tridiag(5, -1, 4, -1), 1, "random")


class TestDecayModels(unittest.TestCase):
    def setUp(self):
        settings.DENSE_ORACLE_CAP = 4096
        settings.WORKERS = 1

    def test_spectrum_of_family(self):
        self.assertEqual(spectrum_of_family(MatrixSpec(family="tridiag", n=5)), (2.0, 6.0))
        self.assertEqual(spectrum_of_family(MatrixSpec(family="tridiag", n=5, a=-1j, c=1j)), (2.0, 6.0))
        self.assertIsNone(spectrum_of_family(MatrixSpec(family="tridiag", n=5, a=-1, c=-2)))
        self.assertEqual(spectrum_of_family(MatrixSpec(family="laplace2d", N=5, shift=1.0)), (1.0, 9.0))

    def test_fit_column_distances(self):
        A = tridiag(21, -1, 4, -1)
        F = np.linalg.inv(A.toarray())
        column, dist = fit_column(A, ScalarFunction.from_name("inv"), 10, F=F)
        np.testing.assert_array_equal(dist, np.abs(np.arange(21) - 10))
        np.testing.assert_allclose(column, F[:, 10])

    def test_fit_column_krylov(self):
        A = tridiag(30, -1, 4, -1)
        column, _ = fit_column(A, ScalarFunction.from_name("inv"), 15, hermitian=True)
        np.testing.assert_allclose(column, np.linalg.inv(A.toarray())[:, 15], atol=1e-10)

    def test_closed_form_model(self):
        engine = ExperimentEngine(config())
        spec = engine.config.family
        model = engine.decay_model(spec, engine.matrix(spec))
        self.assertTrue(model.from_polynomial_property)
        self.assertFalse(model.fitted)
        self.assertAlmostEqual(model.C, 0.5)

    def test_non_normal_fit_uses_crouzeix_constant(self):
        engine = ExperimentEngine(config(family="tridiag:n=60,a=-1,b=4,c=-2"))
        spec = engine.config.family
        model = engine.decay_model(spec, engine.matrix(spec))
        self.assertTrue(model.fitted)
        self.assertEqual(model.K, CROUZEIX_K)
        self.assertLess(model.q, 1.0)

    def test_hermitian_file_uses_spectral_interval(self):
        path = os.path.join(tempfile.mkdtemp(), "path.mtx")
        write_matrix_market(path, tridiag(20, -1, 4, -1))
        engine = ExperimentEngine(config(family=f"file:path={path}"))
        spec = engine.config.family
        model = engine.decay_model(spec, engine.matrix(spec))
        self.assertFalse(model.fitted)
        self.assertTrue(model.from_polynomial_property)
        lo = float(np.linalg.eigvalsh(tridiag(20, -1, 4, -1).toarray().real)[0])
        self.assertAlmostEqual(model.C, 1.0 / lo)

    def test_explicit_model(self):
        given = DecayModel(C=3.0, q=0.4, from_polynomial_property=True)
        engine = ExperimentEngine(config(model=given))
        spec = engine.config.family
        self.assertEqual(engine.decay_model(spec, engine.matrix(spec)), given)


class TestExperimentEngine(unittest.TestCase):
    def setUp(self):
        settings.DENSE_ORACLE_CAP = 4096
        settings.WORKERS = 1

    def tearDown(self):
        settings.DENSE_ORACLE_CAP = 4096
        settings.WORKERS = 1

    def test_trace_sweep_over_distance(self):
        records = list(run_experiment(config()))
        self.assertEqual([r.d for r in records], [1, 3, 5])
        for r in records:
            self.assertEqual(r.m_colors, r.d + 1)
            self.assertEqual(r.coloring, "banded")
            self.assertEqual(r.bound_kind, BoundKind.TRACE_BANDED.value)
            self.assertEqual(r.bound_label, "bound")
            self.assertLessEqual(r.abs_error, r.bound)
            self.assertGreaterEqual(r.ratio, 1.0)
            self.assertEqual(r.s_steps, "exact")
        errors = [r.abs_error for r in records]
        self.assertTrue(all(a > b for a, b in zip(errors, errors[1:])))

    def test_unsorted_sweep_is_sorted(self):
        records = list(run_experiment(config(sweep={"variable": "d", "values": [4, 2]})))
        self.assertEqual([r.sweep_value for r in records], [2, 4])

    def test_sparse_on_lattice(self):
        cfg = config(family="laplace2d:N=8", task="sparse", sweep={"variable": "d", "values": [1, 2]})
        records = list(run_experiment(cfg))
        self.assertEqual([r.m_colors for r in records], [9, 25])
        self.assertEqual(records[0].nnz, 288)
        self.assertIsNone(records[0].estimate)
        for r in records:
            self.assertEqual(r.coloring, "lattice")
            self.assertEqual(r.norm, "fro")
            self.assertEqual(r.bound_kind, BoundKind.SPARSE_FROBENIUS_POLY.value)
            self.assertLessEqual(r.abs_error, r.bound)

    def test_size_sweep(self):
        records = list(run_experiment(config(distance=2, sweep={"variable": "n", "values": [30, 60]})))
        self.assertEqual([r.n for r in records], [30, 60])
        self.assertTrue(all(r.d == 2 for r in records))

    def test_steps_sweep(self):
        records = list(run_experiment(config(distance=4, sweep={"variable": "s", "values": [1, 6]})))
        self.assertEqual([r.s_steps for r in records], [1, 6])
        self.assertLess(records[1].abs_error, records[0].abs_error)

    def test_oracle_skipped(self):
        settings.DENSE_ORACLE_CAP = 50
        record = list(run_experiment(config(distance=5, sweep={"variable": "d", "values": [5]})))[0]
        self.assertTrue(record.oracle_skipped)
        self.assertIsNone(record.exact)
        self.assertIsNone(record.abs_error)
        self.assertEqual(record.s_steps, 3)
        self.assertIsNotNone(record.bound)

    def test_gmrf_fit_is_estimate(self):
        cfg = config(family="gmrf:n=300,phi=20", sweep={"variable": "d", "values": [2]})
        record = list(run_experiment(cfg))[0]
        self.assertEqual(record.coloring, "rcm")
        self.assertEqual(record.bound_label, "estimate")
        self.assertIsNotNone(record.abs_error)

    def test_threaded_sweep_matches_serial(self):
        serial = list(run_experiment(config()))
        settings.WORKERS = 3
        threaded = list(run_experiment(config()))
        self.assertEqual([r.sweep_value for r in threaded], [1, 3, 5])
        for a, b in zip(serial, threaded):
            self.assertAlmostEqual(a.estimate, b.estimate, places=12)


def sample_record(**kwargs):
    base = dict(family="tridiag", n=10, f="inv", d=2, m_colors=3, s_steps="exact", estimate=complex(1.5, -2.0),
                exact=complex(1.25, 0), abs_error=0.1, bound=0.5, ratio=5.0, seconds=0.25)
    base.update(kwargs)
    return ExperimentRecord(**base)


class TestStore(unittest.TestCase):
    def setUp(self):
        settings.PERSIST_ENABLED = True
        settings.CSV_SCHEMA_VERSION = 1
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        settings.PERSIST_ENABLED = True

    def test_format_value(self):
        self.assertEqual(format_value(None), "")
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(complex(1.5, -2.0)), "1.5-2j")
        self.assertEqual(format_value(complex(288, 0)), "288")
        self.assertEqual(format_value(0.1), "0.10000000000000001")
        self.assertEqual(format_value("exact"), "exact")

    def test_record_row_follows_columns(self):
        row = record_row(sample_record())
        self.assertEqual(len(row), len(CSV_COLUMNS))
        values = dict(zip(CSV_COLUMNS, row))
        self.assertEqual(values["estimate"], "1.5-2j")
        self.assertEqual(values["s_steps"], "exact")
        self.assertEqual(values["schema"], "1")
        self.assertEqual(values["bound_kind"], "")

    def test_sparse_row_has_integer_nnz(self):
        values = dict(zip(CSV_COLUMNS, record_row(sample_record(task="sparse", estimate=None, nnz=288))))
        self.assertEqual(values["nnz"], "288")
        self.assertEqual(values["estimate"], "")

    def test_render_csv(self):
        text = render_csv([sample_record(), sample_record(d=3)])
        rows = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual([r["d"] for r in rows], ["2", "3"])

    def test_write_and_load(self):
        store = ResultStore(os.path.join(self.dir, "sub", "run.csv"))
        self.assertTrue(store.write_records([sample_record()]))
        rows = store.load_rows()
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["family"], "tridiag")
        self.assertFalse(os.path.exists(os.path.join(self.dir, "sub", "run.csv.tmp")))

    def test_manifest(self):
        store = ResultStore(os.path.join(self.dir, "run.csv"))
        self.assertTrue(store.write_manifest(config(label="demo"), 3, extra={"host": "test"}))
        with open(os.path.join(self.dir, "run.json")) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["records"], 3)
        self.assertEqual(manifest["label"], "demo")
        self.assertEqual(manifest["config"]["family"]["family"], "tridiag")
        self.assertEqual(manifest["host"], "test")

    def test_missing_file(self):
        self.assertEqual(ResultStore(os.path.join(self.dir, "none.csv")).load_rows(), [])

    def test_persistence_disabled(self):
        settings.PERSIST_ENABLED = False
        path = os.path.join(self.dir, "off.csv")
        self.assertFalse(ResultStore(path).write_records([sample_record()]))
        self.assertFalse(os.path.exists(path))

    def test_unwritable_target_goes_read_only(self):
        blocker = os.path.join(self.dir, "blocker")
        with open(blocker, "w") as f:
            f.write("x")
        store = ResultStore(os.path.join(blocker, "run.csv"))
        self.assertFalse(store.write_records([sample_record()]))
        self.assertTrue(store.read_only)


if __name__ == "__main__":
    unittest.main()
