"""CLI contract: exit codes, output formats, subcommands."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from kpath.cli import main

PATH5 = "5 4\n0 1\n1 2\n2 3\n3 4\n"
TRIANGLES = "6 6\n0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n"


@pytest.fixture()
def path5_file(tmp_path):
    p = tmp_path / "path5.edges"
    p.write_text(PATH5)
    return str(p)


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_brute_yes(capsys, path5_file):
    code, out, _ = run_cli(capsys, ["solve", path5_file, "--k", "5", "--mode", "brute"])
    assert code == 0
    doc = json.loads(out)
    assert doc["answer"] == "yes"
    assert doc["path"] == [0, 1, 2, 3, 4]


def test_solve_baseline_no(capsys, tmp_path):
    p = tmp_path / "tri.edges"
    p.write_text(TRIANGLES)
    code, out, _ = run_cli(capsys, ["solve", str(p), "--k", "4", "--mode", "baseline"])
    assert code == 1
    assert json.loads(out)["answer"] == "no"


def test_solve_cut_infeasible_exit_2(capsys, path5_file):
    code, _, err = run_cli(
        capsys, ["solve", path5_file, "--k", "3", "--mode", "cut", "--m", "0"]
    )
    assert code == 2
    assert "infeasible parameterization" in err


def test_solve_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(PATH5))
    code, out, _ = run_cli(capsys, ["solve", "-", "--k", "4", "--mode", "brute"])
    assert code == 0
    assert json.loads(out)["path"] == [0, 1, 2, 3]


def test_solve_plain_format(capsys, path5_file):
    code, out, _ = run_cli(
        capsys, ["solve", path5_file, "--k", "5", "--mode", "brute", "--plain"]
    )
    assert code == 0
    assert out.splitlines() == ["yes", "0 1 2 3 4"]


def test_solve_parse_error_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.edges"
    p.write_text("2 1\n0 5\n")
    code, _, err = run_cli(capsys, ["solve", str(p), "--k", "2", "--mode", "brute"])
    assert code == 2
    assert "vertex id out of range at line 2" in err


def test_solve_budget_exit_2(capsys, tmp_path):
    p = tmp_path / "k8.edges"
    edges = [(u, v) for u in range(8) for v in range(8) if u != v]
    p.write_text("8 %d\n%s\n" % (len(edges), "\n".join(f"{u} {v}" for u, v in edges)))
    code, _, err = run_cli(
        capsys,
        ["solve", str(p), "--k", "6", "--mode", "cut", "--m", "1", "--psize", "1",
         "--budget", "10"],
    )
    assert code == 2
    assert "search space too large" in err


def test_solve_endpoints(capsys, path5_file):
    code, out, _ = run_cli(
        capsys,
        ["solve", path5_file, "--k", "3", "--mode", "brute", "--s", "1", "--t", "3"],
    )
    assert code == 0
    assert json.loads(out)["path"] == [1, 2, 3]


def test_solve_trace_written(capsys, path5_file, tmp_path):
    trace = tmp_path / "trace.csv"
    code, _, _ = run_cli(
        capsys,
        ["solve", path5_file, "--k", "5", "--mode", "cut", "--m", "1", "--psize", "1",
         "--zeta", "0.3", "--trace", str(trace)],
    )
    assert code == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["table", "key", "raw_size", "reduced_size"]
    assert len(rows) > 1


def test_threads_env_fallback(capsys, path5_file, monkeypatch):
    monkeypatch.setenv("KPATH_THREADS", "2")
    code, out, _ = run_cli(
        capsys,
        ["solve", path5_file, "--k", "5", "--mode", "cut", "--m", "1", "--psize", "1",
         "--zeta", "0.3"],
    )
    assert code == 0
    assert json.loads(out)["path"] == [0, 1, 2, 3, 4]


def test_verify_strict_exit_0(capsys):
    code, out, _ = run_cli(
        capsys,
        ["verify", "strict", "--n", "6", "--p", "2", "--q", "2", "--zeta", "0.5"],
    )
    assert code == 0


def test_verify_universal_cap_exit_3(capsys):
    code, _, err = run_cli(
        capsys,
        ["verify", "universal", "--n", "20", "--p", "6", "--q", "6", "--cap", "10"],
    )
    assert code == 3
    assert "too large" in err


def test_verify_rep_exit_0(capsys):
    code, out, _ = run_cli(
        capsys,
        ["verify", "rep", "--n", "8", "--budgets", "2,2", "--profile", "1,1",
         "--block-sizes", "4,4", "--count", "10", "--seed", "3"],
    )
    assert code == 0
    assert "reduced=" in out


def test_optimize_pinned_point(capsys):
    code, out, _ = run_cli(
        capsys,
        ["optimize", "--grid-cl", "1.136:1.136:1", "--grid-cr", "1.645:1.645:1",
         "--grid-zeta", "0.712:0.712:1"],
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["best_Y"] < 2.5537
    assert doc["cl"] == 1.136 and doc["cr"] == 1.645 and doc["zeta"] == 0.712


def test_optimize_plain_two_lines(capsys):
    code, out, _ = run_cli(
        capsys,
        ["optimize", "--plain", "--grid-cl", "1.136:1.136:1", "--grid-cr",
         "1.645:1.645:1", "--grid-zeta", "0.712:0.712:1"],
    )
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2
    assert float(lines[0]) < 2.5537
    assert lines[1].startswith("[1.136, 1.645, 0.712,")


def test_bench_bundled_corpus(capsys, tmp_path):
    corpus = Path(__file__).resolve().parent.parent / "corpus"
    out_file = tmp_path / "report.csv"
    code, _, _ = run_cli(capsys, ["bench", str(corpus), "--out", str(out_file)])
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert rows
    # brute and baseline answers agree cell by cell
    answers = {}
    for row in rows:
        key = (row["graph"], row["k"])
        answers.setdefault(key, {})[row["mode"]] = row["answer"]
    for key, got in answers.items():
        if "brute" in got and "baseline" in got:
            assert got["brute"] == got["baseline"], key
    assert all("wall_ms" in row for row in rows)


def test_bench_empty_manifest(capsys, tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "manifest.csv").write_text("file,k,mode\n")
    code, out, _ = run_cli(capsys, ["bench", str(corpus)])
    assert code == 0
    assert out.splitlines()[0].startswith("graph,k,mode,answer")
    assert len(out.splitlines()) == 1


def test_bench_missing_corpus(capsys, tmp_path):
    code, _, err = run_cli(capsys, ["bench", str(tmp_path / "nope")])
    assert code == 2
    assert "missing corpus" in err
