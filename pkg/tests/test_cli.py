from __future__ import annotations

import csv
import json
import math

import pytest

from pctree import cli
from pctree.construct import build
from pctree.dataset import encode_rows, load_csv, random_ordering
from pctree.experiment import ExperimentConfig, derive_seed, run_pu_experiment, run_validation_experiment
from pctree.objective import level_score

TINY = "\n".join(["a,x,p", "a,x,q", "b,y,p", "b,y,q", "a,y,p", "b,x,q", "a,x,p", "b,y,q", "a,x,q", "b,y,p"]) + "\n"


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text(TINY)
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_build(capsys, tiny, tmp_path):
    out = tmp_path / "tree.json"
    code, _, err = run(capsys, "build", "--data", tiny, "--out", str(out))
    assert code == 0 and "first-level score" in err
    assert json.loads(out.read_text())["size"] == 10


@pytest.mark.parametrize("kind", ["random", "dissimilarity", "similarity"])
def test_order(capsys, tiny, kind):
    code, out, _ = run(capsys, "order", "--data", tiny, "--kind", kind, "--seed", "3")
    assert code == 0
    assert sorted(int(x) for x in out.split()) == list(range(10))


@pytest.mark.parametrize("strategy", ["reorder", "single", "hier"])
def test_optimize(capsys, tiny, strategy):
    code, out, _ = run(capsys, "optimize", "--data", tiny, "--strategy", strategy)
    rec = json.loads(out)
    assert code == 0 and rec["strategy"] == strategy
    assert rec["final_score"] >= rec["initial_score"] - 1e-12


@pytest.mark.parametrize("condition", ["optimized", "unoptimized"])
def test_validate_single_split(capsys, tiny, condition):
    code, out, _ = run(capsys, "validate", "--data", tiny, "--condition", condition)
    rec = json.loads(out)
    assert code == 0
    assert 0 <= rec["accuracy"]["validated"] <= 1
    assert rec["validated"]["leaves"] <= rec["unvalidated"]["leaves"]
    assert len(rec["frontier_sizes"]) == 3


def test_validate_trials_table(capsys, tiny):
    code, out, _ = run(capsys, "validate", "--data", tiny, "--trials", "2")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("trial,")
    assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "mean", "std", "cost"]


def test_evaluate_from_numbers(capsys):
    code, out, _ = run(capsys, "evaluate", "--leaves", "13.10", "--epl", "34.50")
    rec = json.loads(out)
    assert code == 0
    assert rec["table"] == {"depth": 2.63, "breadth": 2.66, "cost": 7.0}


def test_evaluate_from_tree(capsys, tiny, tmp_path):
    out = tmp_path / "tree.json"
    run(capsys, "build", "--data", tiny, "--height", "3", "--out", str(out))
    code, text, _ = run(capsys, "evaluate", "--tree", str(out))
    assert code == 0 and json.loads(text)["leaves"] == 10


def test_experiment_prints_table(capsys, tiny):
    code, out, _ = run(capsys, "experiment", "--data", tiny, "--trials", "2", "--strategies", "sort,hier")
    assert code == 0
    assert sum(1 for line in out.splitlines() if line.startswith("mean,")) == 2


@pytest.mark.parametrize("argv", [
    ["build", "--data", "no/such.csv"],
    ["experiment", "--data", "house", "--strategies", "bogus"],
    ["experiment", "--data", "house", "--trials", "0"],
    ["build", "--data", "house", "--height", "1"],
    ["evaluate"],
    ["evaluate", "--leaves", "0", "--epl", "1"],
])
def test_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_bad_csv_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\nc\n")
    code, _, err = run(capsys, "build", "--data", str(p))
    assert code == 2 and "error" in err


# -- reproducibility ---------------------------------------------------------------

def _experiment_files(capsys, tiny, tmp_path, name, workers):
    out = tmp_path / f"{name}.csv"
    code, _, _ = run(capsys, "experiment", "--data", tiny, "--trials", "3", "--seed", "5",
                     "--workers", str(workers), "--out", str(out))
    assert code == 0
    return out.read_bytes(), out.with_suffix(".manifest.json").read_bytes()


def test_same_seed_same_bytes(capsys, tiny, tmp_path):
    a = _experiment_files(capsys, tiny, tmp_path, "a", 1)
    b = _experiment_files(capsys, tiny, tmp_path, "b", 1)
    assert a == b


def test_workers_do_not_change_results(capsys, tiny, tmp_path):
    assert _experiment_files(capsys, tiny, tmp_path, "one", 1) == _experiment_files(capsys, tiny, tmp_path, "two", 2)


def test_timings_kept_apart(capsys, tiny, tmp_path):
    _experiment_files(capsys, tiny, tmp_path, "t", 1)
    table = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert "seconds" not in table[0]
    timings = list(csv.DictReader(open(tmp_path / "t.timings.csv")))
    assert len(timings) == 3 * 4 and "seconds" in timings[0]


def test_derived_seeds_are_independent():
    assert derive_seed(0, 1, "split") == derive_seed(0, 1, "split")
    assert len({derive_seed(0, t, tag) for t in range(5) for tag in ("split", "ordering")}) == 10


# -- experiment functions on fixtures --------------------------------------------------

def test_single_trial_sort_row(f1):
    cfg = ExperimentConfig(data="F1", strategies=("sort",), trials=1, seed=4)
    res = run_pu_experiment(cfg, f1)
    assert len(res.rows) == 1
    tree = build(f1, random_ordering(f1, derive_seed(4, 0, "ordering")), 2)
    assert res.rows[0]["score"] == level_score(tree, "pu")
    std = next(r for r in res.aggregate if r["trial"] == "std")
    assert math.isnan(std["score"])


def test_trivial_validation():
    d = encode_rows([["a", "x"]] * 10)
    res = run_validation_experiment(ExperimentConfig(trials=2), d)
    for row in res.rows:
        assert row["leaves_validated"] == 1
        assert row["accuracy_validated"] == 1.0
        assert row["accuracy_unvalidated"] == 1.0


def test_header_flag(tmp_path, capsys):
    p = tmp_path / "h.csv"
    p.write_text("colour,size\n" + "\n".join(["red,big", "blue,small"] * 3) + "\n")
    assert load_csv(p, has_header=True).schema[0].name == "colour"
    code, out, _ = run(capsys, "validate", "--data", str(p), "--header")
    assert code == 0 and "colour" in json.loads(out)["frontier_sizes"]
