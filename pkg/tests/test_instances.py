import json

import pytest
import yaml

from lagro.errors import InstanceFormatError
from lagro.generators import gen_random_general, gen_random_indicator
from lagro.instances import dump_instance, dumps_instance, load_instance, parse_instance, save_instance


def test_shipped_counterexample_matches_generator(instances_dir, counterexample):
    assert load_instance(str(instances_dir / "counterexample" / "counterexample.json")) == counterexample


def test_shipped_restart_instance_matches_generator(instances_dir, restart_example):
    inst = load_instance(str(instances_dir / "restart" / "tiny_multiplier.json"))
    assert inst == restart_example
    assert inst.lambda0 == restart_example.lambda0


def test_shipped_files_are_canonical(instances_dir, counterexample, restart_example):
    text = (instances_dir / "counterexample" / "counterexample.json").read_text(encoding="utf-8")
    assert text == dumps_instance(counterexample)
    text = (instances_dir / "restart" / "tiny_multiplier.json").read_text(encoding="utf-8")
    assert text == dumps_instance(restart_example)


def test_saved_instances_load_back(tmp_path):
    for inst in (gen_random_general(seed=1), gen_random_indicator(seed=1)):
        path = save_instance(inst, str(tmp_path / "suite" / f"{inst.name}.json"))
        assert load_instance(path) == inst


def test_rationals_are_strings(counterexample):
    doc = dump_instance(counterexample)
    assert doc["h0"] == ["-3/2"]
    assert doc["Xi"] == {"points": [[0], [1]]}
    assert doc["dims"] == {"n1": 1, "nc2": 0, "nd2": 1, "np": 1, "m": 1}


def test_budget_sets_are_written_as_budgets():
    inst = gen_random_indicator({"budget": 1}, seed=0)
    assert dump_instance(inst)["Xi"] == {"budget": 1}


def test_yaml_instances(tmp_path, counterexample):
    path = tmp_path / "counterexample.yaml"
    path.write_text(yaml.safe_dump(dump_instance(counterexample)), encoding="utf-8")
    assert load_instance(str(path)) == counterexample


def _write(tmp_path, doc, name="bad.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_missing_field_names_the_file(tmp_path, counterexample):
    doc = dump_instance(counterexample)
    del doc["H"]
    path = _write(tmp_path, doc)
    with pytest.raises(InstanceFormatError, match="bad.json: missing field 'H'"):
        load_instance(path)


def test_row_length_errors_are_located(tmp_path, counterexample):
    doc = dump_instance(counterexample)
    doc["H"] = [["1", "0"]]
    with pytest.raises(InstanceFormatError, match="field 'H' row 0: expected 1 entries, got 2"):
        load_instance(_write(tmp_path, doc))


@pytest.mark.parametrize(
    "field, value",
    [
        ("h0", [-1.5]),
        ("kind", "robust"),
        ("dims", {"n1": 1}),
        ("Xi", {"points": [[2]]}),
        ("X", {"points": []}),
    ],
)
def test_schema_violations(field, value, counterexample):
    doc = dump_instance(counterexample)
    doc[field] = value
    with pytest.raises(InstanceFormatError):
        parse_instance(doc)


def test_unreadable_documents(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InstanceFormatError, match="not a valid document"):
        load_instance(str(path))
    with pytest.raises(InstanceFormatError, match="top level must be a record"):
        parse_instance([1, 2])
    with pytest.raises(FileNotFoundError):
        load_instance(str(tmp_path / "missing.json"))


@pytest.mark.parametrize(
    "field, value, named",
    [
        ("Y", [1], "field 'Y': expected a record"),
        ("Y", "none", "field 'Y': expected a record"),
        ("Y", {"yd_lower": 5}, "field 'Y.yd_lower': expected a list"),
        ("Y", {"yd_upper": {"0": 1}}, "field 'Y.yd_upper': expected a list"),
        ("Y", {"yc_upper": "1"}, "field 'Y.yc_upper': expected a list"),
        ("Xi", {"points": [0, 1]}, r"field 'Xi.points\[0\]': expected a list"),
        ("X", {"points": ["1"]}, r"field 'X.points\[0\]': expected a list"),
    ],
)
def test_malformed_containers_name_the_field(field, value, named, counterexample):
    doc = dump_instance(counterexample)
    doc[field] = value
    with pytest.raises(InstanceFormatError, match=named):
        parse_instance(doc)


def test_malformed_containers_are_reported_with_the_path(tmp_path, counterexample):
    doc = dump_instance(counterexample)
    doc["Y"] = [1]
    with pytest.raises(InstanceFormatError, match="bad.json: field 'Y'"):
        load_instance(_write(tmp_path, doc))
