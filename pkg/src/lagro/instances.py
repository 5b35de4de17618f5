"""Instance files: JSON (or YAML with the same schema) with exact rational literals.

Top level::

    kind      "general" | "indicator"
    name      optional label
    dims      {n1, nc2, nd2, np, m}
    c0 C d0 D_c D_d T W_c W_d h0 [H]     rationals as "p/q" strings or integers
    X         {"points": [[...], ...]}
    Xi        {"points": [[0, 1], ...]} or {"budget": k}
    Y         {"yc_upper": [u | null, ...], "yd_lower": [...], "yd_upper": [...]}
    I0 I1     indicator kind only: one row-index list per uncertain parameter
    bounds    optional {x_lower, x_upper, y_lower, y_upper}
    lambda0   optional engine starting multiplier
"""
import json
import logging
import os
from typing import Any, Dict, List, Sequence

import yaml

from lagro.errors import InputError, InstanceFormatError
from lagro.kernel import to_scalar
from lagro.model import BoundBox, GeneralInstance, IndicatorInstance, Instance, UncertaintySet
from lagro.utils import format_scalar

logger = logging.getLogger(__name__)

KINDS = ("general", "indicator")
MATRIX_FIELDS = ("C", "D_c", "D_d", "T", "W_c", "W_d")
VECTOR_FIELDS = ("c0", "d0", "h0")
YAML_SUFFIXES = (".yaml", ".yml")


def _require(doc: Dict[str, Any], key: str, where: str = "") -> Any:
    if key not in doc:
        raise InstanceFormatError(f"missing field '{where}{key}'")
    return doc[key]


def _scalar(value: Any, where: str):
    try:
        return to_scalar(value)
    except InputError as error:
        raise InstanceFormatError(f"field '{where}': {error}") from error


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"field '{where}': expected an integer, got {value!r}")
    return value


def _vector(values: Any, where: str) -> tuple:
    if not isinstance(values, list):
        raise InstanceFormatError(f"field '{where}': expected a list, got {type(values).__name__}")
    return tuple(_scalar(v, f"{where}[{j}]") for j, v in enumerate(values))


def _list(values: Any, where: str) -> list:
    if not isinstance(values, list):
        raise InstanceFormatError(f"field '{where}': expected a list, got {type(values).__name__}")
    return values


def _matrix(rows: Any, where: str) -> tuple:
    if not isinstance(rows, list):
        raise InstanceFormatError(f"field '{where}': expected a list of rows, got {type(rows).__name__}")
    return tuple(_vector(row, f"{where}[{i}]") for i, row in enumerate(rows))


def _index_sets(sets: Any, where: str) -> tuple:
    if not isinstance(sets, list):
        raise InstanceFormatError(f"field '{where}': expected a list of row-index lists")
    parsed = []
    for j, rows in enumerate(sets):
        if not isinstance(rows, list):
            raise InstanceFormatError(f"field '{where}[{j}]': expected a list of row indices")
        parsed.append(tuple(sorted({_integer(i, f"{where}[{j}]") for i in rows})))
    return tuple(parsed)


def _uncertainty(doc: Any, n_p: int) -> UncertaintySet:
    if not isinstance(doc, dict):
        raise InstanceFormatError("field 'Xi': expected {'points': [...]} or {'budget': k}")
    if "budget" in doc:
        return UncertaintySet(n_p, budget=_integer(doc["budget"], "Xi.budget"))
    points = _require(doc, "points", "Xi.")
    if not isinstance(points, list):
        raise InstanceFormatError("field 'Xi.points': expected a list of binary vectors")
    return UncertaintySet(
        n_p,
        explicit=tuple(
            tuple(_integer(v, f"Xi.points[{i}]") for v in _list(p, f"Xi.points[{i}]")) for i, p in enumerate(points)
        ),
    )


def _bounds(doc: Any) -> BoundBox:
    if not isinstance(doc, dict):
        raise InstanceFormatError("field 'bounds': expected a record")
    return BoundBox(**{key: _vector(_require(doc, key, "bounds."), f"bounds.{key}")
                       for key in ("x_lower", "x_upper", "y_lower", "y_upper")})


def parse_instance(doc: Any) -> Instance:
    """Build a validated instance from a decoded document."""
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be a record")
    kind = _require(doc, "kind")
    if kind not in KINDS:
        raise InstanceFormatError(f"field 'kind': expected one of {', '.join(KINDS)}, got {kind!r}")
    dims = _require(doc, "dims")
    if not isinstance(dims, dict):
        raise InstanceFormatError("field 'dims': expected a record")
    n1, nc2, nd2, n_p, m = (_integer(_require(dims, key, "dims."), f"dims.{key}") for key in ("n1", "nc2", "nd2", "np", "m"))

    fields: Dict[str, Any] = dict(name=str(doc.get("name", "instance")), n1=n1, nc2=nc2, nd2=nd2, n_p=n_p, m=m)
    for key in VECTOR_FIELDS:
        fields[key] = _vector(_require(doc, key), key)
    for key in MATRIX_FIELDS:
        fields[key] = _matrix(_require(doc, key), key)

    X = _require(doc, "X")
    if not isinstance(X, dict) or not isinstance(X.get("points"), list):
        raise InstanceFormatError("field 'X': expected {'points': [...]}")
    if not X["points"]:
        raise InstanceFormatError("X: point list is empty")
    fields["X"] = tuple(_vector(p, f"X.points[{i}]") for i, p in enumerate(X["points"]))
    fields["Xi"] = _uncertainty(_require(doc, "Xi"), n_p)

    Y = doc.get("Y")
    if Y is None:
        Y = {}
    if not isinstance(Y, dict):
        raise InstanceFormatError("field 'Y': expected a record")
    fields["yc_upper"] = tuple(
        None if v is None else _scalar(v, f"Y.yc_upper[{j}]")
        for j, v in enumerate(_list(Y.get("yc_upper", [None] * nc2), "Y.yc_upper"))
    )
    fields["yd_lower"] = tuple(_integer(v, "Y.yd_lower") for v in _list(Y.get("yd_lower", [0] * nd2), "Y.yd_lower"))
    fields["yd_upper"] = tuple(_integer(v, "Y.yd_upper") for v in _list(Y.get("yd_upper", []), "Y.yd_upper"))
    if doc.get("bounds") is not None:
        fields["bounds"] = _bounds(doc["bounds"])
    if doc.get("lambda0") is not None:
        fields["lambda0"] = _scalar(doc["lambda0"], "lambda0")

    if kind == "general":
        return GeneralInstance(H=_matrix(_require(doc, "H"), "H"), **fields)
    return IndicatorInstance(I0=_index_sets(_require(doc, "I0"), "I0"), I1=_index_sets(_require(doc, "I1"), "I1"), **fields)


def load_instance(path: str) -> Instance:
    """Read and validate an instance file; every format problem is reported with the file path."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Instance file not found at: {path}")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        if path.lower().endswith(YAML_SUFFIXES):
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as error:
        raise InstanceFormatError(f"{path}: not a valid document: {error}") from error
    try:
        inst = parse_instance(doc)
    except InstanceFormatError as error:
        raise InstanceFormatError(f"{path}: {error}") from error
    logger.debug("Loaded %s instance %s from %s", inst.kind, inst.name, path)
    return inst


def _strings(values: Sequence) -> List[str]:
    return [format_scalar(v) for v in values]


def dump_instance(inst: Instance) -> Dict[str, Any]:
    """Canonical document for ``inst`` (rationals as lowest-terms strings)."""
    doc: Dict[str, Any] = {
        "kind": inst.kind,
        "name": inst.name,
        "dims": {"n1": inst.n1, "nc2": inst.nc2, "nd2": inst.nd2, "np": inst.n_p, "m": inst.m},
        "X": {"points": [_strings(p) for p in inst.X]},
        "Y": {
            "yc_upper": [None if v is None else format_scalar(v) for v in inst.yc_upper],
            "yd_lower": [int(v) for v in inst.yd_lower],
            "yd_upper": [int(v) for v in inst.yd_upper],
        },
    }
    for key in VECTOR_FIELDS:
        doc[key] = _strings(getattr(inst, key))
    for key in MATRIX_FIELDS:
        doc[key] = [_strings(row) for row in getattr(inst, key)]
    if inst.Xi.budget is not None:
        doc["Xi"] = {"budget": inst.Xi.budget}
    else:
        doc["Xi"] = {"points": [list(p) for p in inst.Xi.explicit]}
    if isinstance(inst, GeneralInstance):
        doc["H"] = [_strings(row) for row in inst.H]
    else:
        doc["I0"] = [list(rows) for rows in inst.I0]
        doc["I1"] = [list(rows) for rows in inst.I1]
    if inst.bounds is not None:
        doc["bounds"] = {key: _strings(getattr(inst.bounds, key)) for key in ("x_lower", "x_upper", "y_lower", "y_upper")}
    if inst.lambda0 is not None:
        doc["lambda0"] = format_scalar(inst.lambda0)
    return doc


def dumps_instance(inst: Instance) -> str:
    return json.dumps(dump_instance(inst), sort_keys=True, indent=2) + "\n"


def save_instance(inst: Instance, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_instance(inst))
    logger.debug("Saved instance %s to %s", inst.name, path)
    return path
