"""Tests for the gridsolve command line."""

import io
import json

import numpy as np
import pytest

from gridsolve.cli import main
from gridsolve.cli.commands import Problem, RunSettings, run_distributed
from gridsolve.cli.models import CSV_COLUMNS, BenchRecord, read_records, write_records
from gridsolve.core import DenseMatrix, DenseVector
from gridsolve.matrix_io import load_matrix


def run_json(capsys, *argv):
    """Run the CLI and parse the single JSON line it prints."""
    status = main(list(argv))
    out = capsys.readouterr().out.strip()
    return status, (json.loads(out) if out else None)


class TestSolve:
    """Tests for ``gridsolve solve``."""

    def test_cholesky_on_spd(self, capsys):
        """A 2x2 mesh Cholesky solve succeeds with a tiny residual."""
        status, summary = run_json(
            capsys,
            "solve", "--matrix", "spd:n=32", "--method", "chol",
            "--ranks", "4", "--grid", "2x2", "--nb", "8",
        )  # fmt: skip
        assert status == 0
        assert summary["relres"] <= 1e-10
        assert summary["final_relres"] == summary["relres"]
        assert summary["grid"] == "2x2"
        assert summary["converged"]
        assert summary["flops"] > 0

    def test_lu_flops_near_two_thirds_n_cubed(self, capsys):
        """Factor plus solve costs about (2/3) n^3 flops."""
        n = 64
        status, summary = run_json(
            capsys, "solve", "--matrix", f"random_dense:n={n}", "--method", "lu", "--nb", "16"
        )
        assert status == 0
        assert 0.9 <= summary["flops"] / (2 / 3 * n**3) <= 1.3

    def test_singular_exit_code(self, capsys):
        """The 1x1 zero matrix fails LU with exit code 3."""
        status = main(["solve", "--matrix", "zeros:n=1", "--method", "lu"])
        assert status == 3

    def test_cg_on_identity(self, capsys):
        """CG on the identity takes one iteration."""
        status, summary = run_json(
            capsys, "solve", "--matrix", "identity:n=5", "--method", "cg", "--rhs", "random"
        )
        assert status == 0
        assert summary["iterations"] == 1
        assert len(summary["residual_history"]) == 1

    def test_staged_backend_same_answer(self, capsys):
        """Both backends report the same residual and flops."""
        argv = ["solve", "--matrix", "spd:n=20,seed=2", "--method", "gmres", "--ranks", "2"]
        _, direct = run_json(capsys, *argv, "--backend", "direct")
        _, staged = run_json(capsys, *argv, "--backend", "staged")
        assert staged["residual_history"] == direct["residual_history"]
        assert staged["flops"] == direct["flops"]
        assert staged["backend"] == "staged"

    def test_iteration_cap_prints_partial_report(self, capsys):
        """Hitting --maxit exits 4 after printing the partial report."""
        status, report = run_json(
            capsys,
            "solve", "--matrix", "spd:n=20", "--method", "cg", "--maxit", "1", "--tol", "1e-14",
        )  # fmt: skip
        assert status == 4
        assert report["iterations"] == 1
        assert not report["converged"]

    def test_grid_must_match_ranks(self, capsys):
        """A mesh that does not cover the ranks is exit code 2."""
        status = main(
            ["solve", "--matrix", "spd:n=4", "--method", "lu", "--ranks", "2", "--grid", "2x2"]
        )
        assert status == 2

    def test_bad_matrix_spec(self, capsys):
        """Invalid generator specs are argument errors."""
        assert main(["solve", "--matrix", "poisson2d:n=10", "--method", "cg"]) == 2

    def test_malformed_grid_rejected_by_parser(self, capsys):
        """argparse refuses a grid that is not PxQ."""
        with pytest.raises(SystemExit) as info:
            main(["solve", "--matrix", "spd:n=4", "--method", "lu", "--grid", "2by2"])
        assert info.value.code == 2
        assert "PxQ" in capsys.readouterr().err


class TestBench:
    """Tests for ``gridsolve bench``."""

    def test_rows_and_baseline(self, capsys):
        """A one-rank baseline row always comes first with speedup 1."""
        status = main(
            [
                "bench", "--matrix", "spd:n=16", "--method", "lu", "--nb", "4",
                "--ranks-list", "2,4", "--repeat", "1",
            ]
        )  # fmt: skip
        assert status == 0
        records = read_records(io.StringIO(capsys.readouterr().out))
        assert [r.ranks for r in records] == [1, 2, 4]
        assert [r.grid for r in records] == ["1x1", "1x2", "2x2"]
        assert records[0].speedup_vs_serial == 1.0
        assert all(r.iterations is None for r in records)
        assert all(r.final_relres <= 1e-10 for r in records)

    def test_backends_and_file_output(self, tmp_path, capsys):
        """Every backend gets its own rows and the CSV can go to a file."""
        out = tmp_path / "bench.csv"
        status = main(
            [
                "bench", "--matrix", "spd:n=12", "--method", "cg", "--ranks-list", "2",
                "--repeat", "1", "--backends", "direct,staged", "--out", str(out),
            ]
        )  # fmt: skip
        assert status == 0
        assert capsys.readouterr().out == ""
        with out.open() as fh:
            records = read_records(fh)
        assert [(r.backend, r.ranks) for r in records] == [
            ("direct", 1),
            ("direct", 2),
            ("staged", 1),
            ("staged", 2),
        ]
        assert all(r.iterations is not None and r.iterations > 0 for r in records)

    @pytest.mark.slow
    def test_lu_on_full_mesh(self, capsys):
        """LU up to a 2x4 mesh keeps the residual tiny and the flop count near (2/3) n^3."""
        n = 512
        status = main(
            [
                "bench", "--matrix", f"random_dense:n={n}", "--method", "lu", "--nb", "64",
                "--ranks-list", "2,4,8", "--grid", "2x4", "--repeat", "1",
            ]
        )  # fmt: skip
        assert status == 0
        records = read_records(io.StringIO(capsys.readouterr().out))
        assert [r.grid for r in records] == ["1x1", "1x2", "2x2", "2x4"]
        for record in records:
            assert record.final_relres <= 1e-10
            assert 0.95 <= record.flops / (2 / 3 * n**3) <= 1.05

    def test_local_footprint_shrinks(self):
        """The largest per-rank matrix share never grows with more ranks."""
        problem = Problem(DenseMatrix.from_array(np.eye(32)), DenseVector.from_array(np.ones(32)))
        footprints = [
            run_distributed(problem, RunSettings(method="lu", ranks=ranks, nb=4)).local_bytes
            for ranks in (1, 2, 4)
        ]
        assert footprints[0] == 32 * 32 * 8
        assert footprints[0] > footprints[1] > footprints[2]

    def test_unknown_backend(self, capsys):
        """--backends validates names."""
        with pytest.raises(SystemExit):
            main(["bench", "--matrix", "spd:n=4", "--method", "lu", "--backends", "gpu"])


class TestCsv:
    """Tests for the benchmark CSV format."""

    def test_round_trip(self):
        """Rows read back equal to what was written; local_bytes stays out."""
        record = BenchRecord(
            method="gmres",
            n=10,
            ranks=2,
            grid="1x2",
            nb=4,
            backend="direct",
            precision="f64",
            wall_time_s=0.1 + 0.2,
            flops=1234,
            iterations=7,
            final_relres=1e-9,
            speedup_vs_serial=1.5,
            local_bytes=800,
        )
        buffer = io.StringIO()
        write_records([record], buffer)
        header = buffer.getvalue().splitlines()[0]
        assert header.split(",") == list(CSV_COLUMNS)
        assert "local_bytes" not in header
        (back,) = read_records(io.StringIO(buffer.getvalue()))
        assert back.wall_time_s == record.wall_time_s
        assert back.model_dump(exclude={"local_bytes"}) == record.model_dump()

    def test_wrong_header(self):
        """Foreign CSV is rejected."""
        with pytest.raises(ValueError, match="Unexpected CSV header"):
            read_records(io.StringIO("a,b\n1,2\n"))


class TestGen:
    """Tests for ``gridsolve gen``."""

    @pytest.mark.parametrize("name", ["A.mtx", "A.bin"])
    def test_writes_loadable_matrix(self, tmp_path, name):
        """Generated files load back as the generated matrix."""
        path = tmp_path / name
        assert main(["gen", "--kind", "poisson2d", "--n", "16", "--out", str(path)]) == 0
        A = load_matrix(path).to_numpy()
        assert A.shape == (16, 16)
        np.testing.assert_array_equal(A, A.T)
        assert np.diag(A).tolist() == [4.0] * 16

    def test_then_solve_from_file(self, tmp_path, capsys):
        """A generated file feeds straight into solve."""
        path = tmp_path / "spd.mtx"
        main(["gen", "--kind", "spd", "--n", "10", "--seed", "4", "--out", str(path)])
        status, summary = run_json(
            capsys, "solve", "--matrix", f"file:path={path}", "--method", "cg"
        )
        assert status == 0
        assert summary["relres"] <= 1e-7

    def test_bad_suffix(self, tmp_path):
        """An unknown output suffix is an I/O failure."""
        status = main(["gen", "--kind", "identity", "--n", "2", "--out", str(tmp_path / "x.txt")])
        assert status == 7
