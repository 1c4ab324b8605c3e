"""Command-line surface: output formats, exit codes, and reproducibility."""

import json
import os
import subprocess
import sys

import pytest

from nbtree.bounds import bound_table
from nbtree.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_bounds_csv_matches_library(capsys):
    code, out = run_cli(capsys, "bounds", "--d", "3", "--k-max", "8", "--format", "csv")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "d,k,vertex_bound,hull_bound,edge_bound,bnorm_bound"
    assert len(lines) == 9
    rows = bound_table(3, 8)
    for line, row in zip(lines[1:], rows):
        d, k, vb, hb, eb, nb = line.split(",")
        assert (int(d), int(k)) == (row.d, row.k)
        assert float(vb) == row.vertex_bound  # 17 digits round-trip exactly
        assert float(nb) == row.bnorm_bound


def test_bounds_json_lines(capsys):
    code, out = run_cli(capsys, "bounds", "--d", "4", "--k-max", "2", "--format", "json")
    assert code == 0
    rows = [json.loads(line) for line in out.strip().split("\n")]
    assert rows[0]["d"] == 4 and rows[1]["k"] == 2
    assert set(rows[0]) == {"d", "k", "vertex_bound", "hull_bound",
                            "edge_bound", "bnorm_bound"}


def test_ball_info(capsys):
    code, out = run_cli(capsys, "ball-info", "--d", "3", "--radius", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["n_vertices"] == 10
    assert doc["n_directed_edges"] == 18
    assert doc["sphere_sizes"] == [1, 3, 6]


def test_nb_norm_pass_and_nonconverged_exit(capsys):
    code, out = run_cli(capsys, "nb-norm", "--d", "3", "--radius", "6", "--k", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] and doc["estimate"] <= doc["bound"]
    code, out = run_cli(capsys, "nb-norm", "--d", "3", "--radius", "6", "--k", "2",
                        "--tol", "1e-16", "--max-iter", "2")
    assert code == 1


def test_nb_certify(capsys):
    code, out = run_cli(capsys, "nb-certify", "--d", "3", "--radius", "8", "--k", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["max_s_inv"] < doc["bound"] == pytest.approx(5 * 2 ** 2.5, rel=1e-12)
    assert doc["max_s_fwd"] < doc["bound"]
    assert set(doc) >= {"d", "radius", "k", "max_s_inv", "max_s_fwd", "bound",
                        "interior_edge_count"}


def test_walk_count_command(capsys):
    code, out = run_cli(capsys, "walk-count", "--d", "3", "--radius", "6",
                        "--k", "3", "--edge", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] == 8 and doc["interior"]


def test_hull_distance_command(capsys):
    # hull of the two children of vertex 1 contains vertex 1 itself,
    # which is two steps from vertex 2 through the root
    code, out = run_cli(capsys, "hull-distance", "--d", "3", "--radius", "5",
                        "--set1", "4,5", "--set2", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["k"] == 2 and doc["witness1"] == 1 and doc["witness2"] == 2


def test_exact_corr_command(capsys):
    code, out = run_cli(capsys, "exact-corr", "--d", "3", "--k", "2",
                        "--rule", "sum", "--r", "1", "--format", "csv")
    assert code == 0
    header, row = out.strip().split("\n")
    assert header.startswith("d,k,rule,mode,value,stderr,bound,verdict")
    assert ",exact," in row and row.split(",")[7] == "PASS"


def test_exact_corr_symmetrizes_order_sensitive_rules(capsys):
    # the raw pair rule is order-sensitive and correlates perfectly at
    # k = 1; the command must test its orbit average instead and pass
    code, out = run_cli(capsys, "exact-corr", "--d", "3", "--k", "1",
                        "--rule", "xor-pair", "--format", "csv")
    assert code == 0
    row = out.strip().split("\n")[1]
    assert row.split(",")[2].startswith("sym(")
    assert row.split(",")[7] == "PASS"


def test_simulate_edge_command(capsys):
    code, out = run_cli(capsys, "simulate-edge", "--d", "3", "--k", "3",
                        "--samples", "5000", "--seed", "3", "--format", "csv")
    assert code == 0
    assert out.strip().split("\n")[1].split(",")[7] == "PASS"


def test_symmetrize_check_command(capsys):
    code, out = run_cli(capsys, "symmetrize-check", "--d", "3", "--k", "2",
                        "--rule", "first-child")
    assert code == 0
    doc = json.loads(out)
    assert doc["cross_moment_residual"] <= 1e-12


def test_universal_check_command(capsys):
    code, out = run_cli(capsys, "universal-check", "--d", "3", "--depth", "3",
                        "--trials", "40", "--seed", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc == {"trials": 40, "successes": 40, "collisions": 0}


def test_usage_errors_exit_two(capsys):
    assert main(["no-such-command"]) == 2
    assert main(["bounds", "--d", "3"]) == 2          # missing required flag
    assert main(["bounds", "--d", "2", "--k-max", "3"]) == 2  # precondition
    assert main(["exact-corr", "--d", "3", "--rule", "bogus"]) == 2
    assert main(["ball-info", "--d", "3", "--radius", "40"]) == 2  # size cap


def test_byte_identical_repeat_runs(capsys):
    args = ["simulate-vertex", "--d", "4", "--k", "7", "--rule", "linear",
            "--lambda", "0.5774", "--samples", "100000", "--seed", "7",
            "--format", "csv"]
    code1, out1 = run_cli(capsys, *args)
    code2, out2 = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_thread_count_does_not_change_output():
    env = dict(os.environ)
    outs = []
    for threads in ("1", "4"):
        env["NBTREE_THREADS"] = threads
        proc = subprocess.run(
            [sys.executable, "-m", "nbtree.cli", "simulate-vertex", "--d", "3",
             "--k", "2", "--samples", "20000", "--seed", "5", "--format", "csv"],
            capture_output=True, env=env, text=True, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
