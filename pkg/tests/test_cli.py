import io
import json
from dataclasses import replace
from fractions import Fraction

import pandas as pd
import pytest

from app import build_parser, main
from lagro.errors import (
    EXIT_CONDITION_VIOLATION,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_ROBUST_INFEASIBLE,
    LagroError,
)
from lagro.generators import gen_counterexample, gen_interdiction, gen_random_general
from lagro.instances import save_instance
from lagro.multiplier import polynomial_lambda_bound


def _fields(text):
    return dict(line.split("\t", 1) for line in text.strip().splitlines() if "\t" in line)


def _table(text):
    return pd.read_csv(io.StringIO(text), sep="\t", dtype=str, keep_default_na=False)


@pytest.fixture
def counterexample_path(instances_dir):
    return str(instances_dir / "counterexample" / "counterexample.json")


def test_solve_counterexample(counterexample_path, capsys):
    assert main(["solve", counterexample_path]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert fields["value"] == "0"
    assert fields["x"] == "(0)"
    assert fields["n_restarts"] == "0"
    assert fields["opt"] == "1"


def test_solve_writes_trace(counterexample_path, tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    assert main(["solve", counterexample_path, "--trace-out", str(trace)]) == EXIT_OK
    records = [json.loads(line) for line in trace.read_text(encoding="utf-8").splitlines()]
    assert records[-1]["event"] == "done"
    assert str(records[-1]["value"]) == "0"
    assert {"inner_iteration", "outer_iteration", "verify"} <= {r["event"] for r in records}


def test_solve_robust_infeasible_exit_code(tmp_path, capsys):
    inst = replace(gen_counterexample(), h0=(Fraction(-1, 2),), name="infeasible")
    path = save_instance(inst, str(tmp_path / "infeasible.json"))
    assert main(["solve", path]) == EXIT_ROBUST_INFEASIBLE
    fields = _fields(capsys.readouterr().out)
    assert fields["status"] == "infeasible"
    assert fields["witness"] == "(1)"


def test_solve_matches_oracle(tmp_path, capsys):
    path = save_instance(gen_random_general(seed=3), str(tmp_path / "random.json"))
    code = main(["solve", path])
    solved = _fields(capsys.readouterr().out)
    assert main(["oracle", path]) == code
    assert _fields(capsys.readouterr().out)["value"] == solved["value"]


def test_solve_input_errors(counterexample_path, tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["solve", counterexample_path, "--lambda0", "0"]) == EXIT_INPUT
    assert main(["solve", counterexample_path, "--method", "benders"]) == EXIT_INPUT
    assert main(["solve", counterexample_path, "--eps", "1.5"]) == EXIT_INPUT


def test_oracle_report(counterexample_path, capsys):
    assert main(["oracle", counterexample_path]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert fields["value"] == "0"
    assert fields["worst_case_xi"] == "(1)"
    assert fields["multiplier_interval"].endswith(", 2]")
    assert main(["oracle", counterexample_path, "--x", "0"]) == EXIT_OK
    assert main(["oracle", counterexample_path, "--x", "3"]) == EXIT_INPUT


def test_check(counterexample_path, tmp_path, capsys):
    assert main(["check", counterexample_path]) == EXIT_CONDITION_VIOLATION
    assert "FAIL" in capsys.readouterr().out
    path = save_instance(gen_interdiction(2, 0), str(tmp_path / "interdiction.json"))
    assert main(["check", path]) == EXIT_OK
    assert "overall: pass" in capsys.readouterr().out


def test_bound(counterexample_path, tmp_path, capsys):
    assert main(["bound", counterexample_path]) == EXIT_CONDITION_VIOLATION
    assert main(["bound", counterexample_path, "--lift"]) == EXIT_CONDITION_VIOLATION
    inst, expected = _bounded_homogeneous_instance()
    path = save_instance(inst, str(tmp_path / "homogeneous.json"))
    capsys.readouterr()
    assert main(["bound", path]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert fields["u_source"] == "bruteforce"
    assert Fraction(fields["lambda_bar"]) == expected.lambda_bar


def _bounded_homogeneous_instance():
    for seed in range(50):
        inst = gen_random_general({"homogeneous": True, "yc_bounded": False}, seed=seed)
        try:
            return inst, polynomial_lambda_bound(inst)
        except LagroError:
            continue
    pytest.fail("no homogeneous instance admits the multiplier bound")


def test_bench_counterexample_suite(instances_dir, capsys):
    assert main(["bench", str(instances_dir / "counterexample")]) == EXIT_OK
    table = _table(capsys.readouterr().out)
    assert list(table["instance"]) == ["counterexample", "total"]
    assert list(table["Opt"]) == ["1", "1/1"]
    assert table["n_restarts"][0] == "0"


def test_bench_restart_suite(instances_dir, capsys):
    assert main(["bench", str(instances_dir / "restart")]) == EXIT_OK
    table = _table(capsys.readouterr().out)
    rows = table[table["instance"] != "total"]
    assert list(rows["n_restarts"]).count("1") == 1
    assert list(rows["Opt"]) == ["0"]


def test_bench_empty_suite_is_header_only(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["bench", str(tmp_path / "empty")]) == EXIT_OK
    assert capsys.readouterr().out == "instance\tmethod\tstatus\tvalue\tOpt\t#It.\tt\tn_restarts\n"


def test_bench_missing_suite(tmp_path):
    assert main(["bench", str(tmp_path / "nowhere")]) == EXIT_INPUT


def test_figure1(capsys):
    assert main(["figure1"]) == EXIT_OK
    table = _table(capsys.readouterr().out)
    assert len(table) == 19
    values = dict(zip(table["lambda"], table["worst_case_L"]))
    assert values["0"] == "-1"
    assert values["1"] == "-1/2"
    assert values["2"] == "0"
    assert values["9/2"] == "0"
    assert list(table["worst_case_L"]) == list(table["closed_form"])


def test_figure1_scaled_to_file(tmp_path, capsys):
    out = tmp_path / "figure1.tsv"
    assert main(["figure1", "--gamma", "10", "--grid", "9", "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    table = _table(out.read_text(encoding="utf-8"))
    assert list(table["lambda"])[:3] == ["0", "1/2", "1"]
    assert table["worst_case_L"][0] == "-10"
    assert list(table["worst_case_L"]) == list(table["closed_form"])


def test_parser_rejects_unknown_method():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["solve", "x.json", "--method", "simplex"])
