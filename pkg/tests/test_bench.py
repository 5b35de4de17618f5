import json
import shutil

import pandas as pd
import pytest

from bench import bench_runner
from bench.bench_runner import TABLE_COLUMNS, find_instances, run_suite, solve_file, write_table
from lagro.errors import InputError
from lagro.generators import gen_random_indicator
from lagro.instances import dump_instance, save_instance
from lagro.utils import METHOD_BENDERS


@pytest.fixture
def mixed_suite(tmp_path, instances_dir):
    suite = tmp_path / "suite"
    shutil.copytree(instances_dir / "counterexample", suite / "general")
    shutil.copytree(instances_dir / "restart", suite / "indicator")
    save_instance(gen_random_indicator(seed=4), str(suite / "indicator" / "random.json"))
    (suite / "notes.txt").write_text("not an instance", encoding="utf-8")
    return suite


def test_find_instances_walks_subdirectories(mixed_suite):
    names = [p.rsplit("/", 1)[-1] for p in find_instances(str(mixed_suite))]
    assert names == ["counterexample.json", "random.json", "tiny_multiplier.json"]
    with pytest.raises(FileNotFoundError):
        find_instances(str(mixed_suite / "missing"))


def test_counterexample_suite(instances_dir):
    frame, summary = run_suite(str(instances_dir / "counterexample"))
    assert list(frame.columns) == TABLE_COLUMNS
    assert summary["requested"] == ["counterexample.json"]
    assert list(summary["solved"]) == ["counterexample.json"]
    assert not summary["skipped"] and not summary["errors"]
    first, total = frame.iloc[0], frame.iloc[-1]
    assert (first["status"], first["value"], first["Opt"], first["n_restarts"]) == ("optimal", "0", 1, 0)
    assert (total["instance"], total["Opt"]) == ("total", "1/1")


def test_restart_suite_counts_restarts(instances_dir):
    frame, _ = run_suite(str(instances_dir / "restart"))
    assert frame.iloc[0]["n_restarts"] == 1
    assert frame.iloc[-1]["Opt"] == "0/1"


def test_benders_skips_general_instances(mixed_suite):
    frame, summary = run_suite(str(mixed_suite), method=METHOD_BENDERS)
    assert list(summary["skipped"]) == ["counterexample.json"]
    assert sorted(summary["solved"]) == ["random.json", "tiny_multiplier.json"]
    assert frame.iloc[-1]["Opt"].endswith("/2")


def test_broken_files_are_reported(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    (suite / "broken.json").write_text("{", encoding="utf-8")
    frame, summary = run_suite(str(suite))
    assert list(summary["errors"]) == ["broken.json"]
    assert summary["errors"]["broken.json"].startswith("InstanceFormatError")
    assert frame.empty


def test_solve_file_never_raises(tmp_path):
    outcome, message = solve_file(str(tmp_path / "missing.json"), "ccg")
    assert outcome == "error"
    assert message.startswith("FileNotFoundError")


def test_parallel_run_matches_serial(mixed_suite):
    serial, _ = run_suite(str(mixed_suite), workers=1)
    parallel, _ = run_suite(str(mixed_suite), workers=2)
    keep = ["instance", "status", "value", "Opt", "#It.", "n_restarts"]
    pd.testing.assert_frame_equal(serial[keep], parallel[keep])


def test_run_suite_argument_checks(instances_dir):
    with pytest.raises(InputError):
        run_suite(str(instances_dir), method="simplex")
    with pytest.raises(InputError):
        run_suite(str(instances_dir), workers=-1)


def test_empty_suite_writes_header_only(tmp_path):
    frame, _ = run_suite(str(tmp_path))
    assert write_table(frame) == "\t".join(TABLE_COLUMNS) + "\n"


def test_write_table_to_files(instances_dir, tmp_path):
    frame, _ = run_suite(str(instances_dir / "counterexample"))
    tsv = tmp_path / "out" / "table.tsv"
    text = write_table(frame, str(tsv))
    assert tsv.read_text(encoding="utf-8") == text
    xlsx = tmp_path / "table.xlsx"
    write_table(frame, str(xlsx))
    sheet = pd.read_excel(xlsx, engine="openpyxl")
    assert list(sheet.columns) == TABLE_COLUMNS
    assert list(sheet["instance"]) == ["counterexample", "total"]


def test_malformed_instance_becomes_an_error_row(tmp_path, counterexample):
    doc = dump_instance(counterexample)
    doc["Y"] = [1]
    path = tmp_path / "shape.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    outcome, message = solve_file(str(path), "ccg")
    assert outcome == "error"
    assert message.startswith("InstanceFormatError")
    assert "field 'Y'" in message


def test_unexpected_failures_become_error_rows(tmp_path, monkeypatch):
    def explode(path):
        raise TypeError("unhashable type: 'list'")

    monkeypatch.setattr(bench_runner, "load_instance", explode)
    outcome, message = solve_file(str(tmp_path / "any.json"), "ccg")
    assert outcome == "error"
    assert message == "TypeError: unhashable type: 'list'"
