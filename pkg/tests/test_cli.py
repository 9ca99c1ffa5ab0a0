"""Command-line interface: verbs, exit codes, artifacts."""

import numpy as np
import pytest

from pmips import write_csv_vectors
from pmips.cli import main

from _support import gaussian_mixture


@pytest.fixture()
def dataset_csv(tmp_path):
    path = tmp_path / "data.csv"
    write_csv_vectors(path, gaussian_mixture(200, 10, seed=0))
    return str(path)


@pytest.fixture()
def queries_csv(tmp_path):
    path = tmp_path / "queries.csv"
    write_csv_vectors(path, gaussian_mixture(3, 10, seed=99))
    return str(path)


def test_build_and_query(tmp_path, dataset_csv, queries_csv, capsys):
    index_path = str(tmp_path / "data.idx")
    assert main(["build", "--input", dataset_csv, "--m", "4", "--seed", "3",
                 "--out", index_path]) == 0
    out = capsys.readouterr().out
    assert "built index" in out

    report = str(tmp_path / "res.csv")
    assert main(["query", "--index", index_path, "--queries", queries_csv,
                 "--k", "2", "--variant", "ii", "--report", report]) == 0
    lines = open(report).read().strip().splitlines()
    assert len(lines) == 4  # header + 3 queries
    assert lines[0].startswith("query,k,c,p,ids")


def test_oracle_prints_exact_answers(dataset_csv, queries_csv, capsys):
    assert main(["oracle", "--input", dataset_csv, "--queries", queries_csv, "--k", "1"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 4


def test_bench_verb(tmp_path, dataset_csv, capsys):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(f"input={dataset_csv}\nn_queries=4\nks=2\nm=4\nout={tmp_path / 'rep'}\n")
    assert main(["bench", "--config", str(cfg)]) == 0
    assert (tmp_path / "rep.json").exists()


def test_usage_error_exit_code_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["build", "--input"])  # missing value
    assert exc.value.code == 1


def test_invalid_value_exit_code_1(tmp_path, dataset_csv):
    # k=0 is an invalid argument, not a crash
    index_path = str(tmp_path / "x.idx")
    assert main(["build", "--input", dataset_csv, "--m", "0", "--out", index_path]) == 1


def test_format_error_exit_code_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["build", "--input", str(bad), "--out", str(tmp_path / "x.idx")]) == 2


def test_query_bad_index_file_exit_code_2(tmp_path, queries_csv):
    bogus = tmp_path / "bogus.idx"
    bogus.write_bytes(b"not an index")
    assert main(["query", "--index", str(bogus), "--queries", queries_csv]) == 2
