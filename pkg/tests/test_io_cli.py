import json
import math
import re
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from entroscope.cli import main
from entroscope.errors import DomainError
from entroscope.state_spaces import MeanFieldWeights
from entroscope.utils.io import (
    dumps,
    load_graph,
    load_hypergraph,
    load_matrix,
    load_mean_field,
)

TRIANGLE = {"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0], [0, 2, 1.0]]}
STAR4 = {"n": 4, "edges": [[0, 1, 1.0], [0, 2, 1.0], [0, 3, 1.0]]}
SHUFFLE3 = {"n": 3, "blocks": [{"set": [0, 1, 2], "weight": 1.0}]}
MEAN_FIELD3 = {"n": 3, "w": {"2": 1.0, "3": 0.5}}
SCHEMA = Path(__file__).parents[1] / "entroscope" / "schemas" / "run_report.schema.json"
JSON_TYPES = {
    "string": str,
    "object": dict,
    "array": list,
    "boolean": bool,
    "number": (int, float),
    "integer": int,
}


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


# =============================================================================
# Input files
# =============================================================================


def test_load_graph_from_edges_and_weights(write_json):
    g = load_graph(write_json("triangle.json", TRIANGLE))
    assert g.n == 3
    assert g.degree(0) == 2.0
    dense = load_graph(write_json("dense.json", {"weights": g.weights.tolist()}))
    assert np.array_equal(dense.weights, g.weights)


def test_graph_file_needs_one_layout(write_json):
    with pytest.raises(ValidationError):
        load_graph(write_json("empty.json", {"n": 3}))
    with pytest.raises(ValidationError):
        load_graph(write_json("edges.json", {"edges": [[0, 1, 1.0]]}))


def test_graph_file_is_read_as_pair_hypergraph(write_json):
    h = load_hypergraph(write_json("triangle.json", TRIANGLE))
    assert dict(h.items())[(0, 1)] == pytest.approx(2.0)


def test_load_hypergraph_blocks(write_json):
    data = {"n": 4, "blocks": [{"vertices": [0, 1, 2], "weight": 1.0}, {"vertices": [2, 3], "weight": 0.5}]}
    h = load_hypergraph(write_json("h.json", data))
    assert h.n == 4
    assert len(h.items()) == 2
    with pytest.raises(ValidationError):
        load_hypergraph(write_json("bad.json", {"n": 4, "blocks": [{"vertices": [0], "weight": 1.0}]}))


def test_load_hypergraph_set_key(write_json):
    h = load_hypergraph(write_json("shuffle.json", SHUFFLE3))
    assert dict(h.items()) == {(0, 1, 2): 1.0}


def test_load_mean_field_file(write_json):
    path = write_json("mf.json", MEAN_FIELD3)
    assert load_mean_field(path) == MeanFieldWeights(n=3, w=(1.0, 0.5))
    blocks = dict(load_hypergraph(path).items())
    assert blocks[(0, 1)] == pytest.approx(1.0)
    assert blocks[(0, 1, 2)] == pytest.approx(0.5)
    assert len(blocks) == 4
    with pytest.raises(DomainError):
        load_mean_field(write_json("big.json", {"n": 3, "w": {"5": 1.0}}))
    with pytest.raises(ValidationError):
        load_mean_field(write_json("empty.json", {"n": 3, "w": {}}))


def test_load_matrix(tmp_path, write_json):
    csv = tmp_path / "m.csv"
    csv.write_text("1,2\n3,4\n")
    assert load_matrix(csv).tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert load_matrix(write_json("m.json", {"matrix": [[1, 2], [3, 4]]})).shape == (2, 2)
    with pytest.raises(DomainError):
        load_matrix(write_json("ragged.json", {"matrix": [[1, 2, 3], [3, 4, 5]]}))
    wide = tmp_path / "wide.csv"
    wide.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(DomainError):
        load_matrix(wide)


def test_dumps_keeps_seventeen_digits():
    text = dumps({"x": 0.1, "big": math.inf, "flag": True, "items": [1, 2.5]})
    assert text == '{"x": 0.10000000000000001, "big": "inf", "flag": true, "items": [1, 2.5]}'


# =============================================================================
# Command line
# =============================================================================


def test_verify_command(capsys):
    code, report = run(capsys, "verify", "kappa-kn", "--n", "3", "--restarts", "2")
    assert code == 0
    assert report["passed"] is True
    assert report["command"] == "verify"
    assert report["results"][0]["log_type"] == "verification"


def test_unknown_verify_name_is_a_usage_error(capsys):
    code, error = run(capsys, "verify", "kappa-bogus", "--n", "3")
    assert code == 2
    assert error["error"] == "usage"


def test_malformed_graph_is_a_validation_error(capsys, write_json):
    path = write_json("bad.json", {"n": 3})
    code, error = run(capsys, "gap", "--graph", path)
    assert code == 2
    assert error["error"] == "validation"


def test_missing_matrix_is_an_io_error(capsys, tmp_path):
    code, error = run(capsys, "permanent", "--matrix", str(tmp_path / "missing.csv"))
    assert code == 2
    assert error["error"] == "io"


def test_permanent_command(capsys, tmp_path):
    csv = tmp_path / "m.csv"
    csv.write_text("1,2\n3,4\n")
    code, report = run(capsys, "permanent", "--matrix", str(csv), "--p", "1")
    assert code == 0
    assert report["results"][0]["permanent"] == pytest.approx(10.0)


def test_gap_command(capsys, write_json):
    code, report = run(capsys, "gap", "--graph", write_json("star.json", STAR4))
    assert code == 0
    assert report["results"][0]["value"] == pytest.approx(1.0)


def test_gap_command_reads_set_blocks(capsys, write_json):
    path = write_json("shuffle.json", SHUFFLE3)
    code, report = run(capsys, "gap", "--hypergraph", path, "--space", "perm")
    assert code == 0
    assert report["results"][0]["value"] == pytest.approx(1.0)


def test_mean_field_file_matches_inline_weights(capsys, write_json):
    path = write_json("mf.json", MEAN_FIELD3)
    code, from_file = run(capsys, "gap", "--mean-field-file", path, "--space", "perm")
    assert code == 0
    argv = ["gap", "--mean-field", "2:1.0,3:0.5", "--n", "3", "--space", "perm"]
    _, inline = run(capsys, *argv)
    assert from_file["results"][0]["value"] == pytest.approx(
        inline["results"][0]["value"], rel=1e-12
    )


def test_decay_command_reports_a_failed_envelope(capsys, write_json):
    path = write_json("triangle.json", TRIANGLE)
    code, report = run(capsys, "decay", "--graph", path, "--space", "perm", "--kappa", "7")
    assert code == 1
    assert report["passed"] is False
    assert report["results"][0]["holds"] is False


def test_reduce_command(capsys, write_json):
    code, report = run(capsys, "reduce", "--graph", write_json("star.json", STAR4), "--node", "0")
    assert code == 0
    assert report["results"][0]["mapping"] == [1, 2, 3]


def test_multislice_command(capsys):
    code, report = run(capsys, "conjecture", "multislice", "--colors", "2,1,1")
    assert code == 0
    assert report["results"][0]["log_type"] == "multislice"


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert "properties" in schema
    assert "results" in schema["properties"]


def test_repeated_runs_are_byte_identical(capsys, write_json):
    argv = ["kappa", "--graph", write_json("triangle.json", TRIANGLE)]
    argv += ["--space", "perm", "--restarts", "3", "--seed", "7"]
    outputs = []
    for _ in range(2):
        assert main(argv) == 0
        text = capsys.readouterr().out
        outputs.append(re.sub(r'"wall_time_ms": [^,}]+', "", text))
    assert outputs[0] == outputs[1]


def test_emitted_report_matches_shipped_schema(capsys, write_json):
    schema = json.loads(SCHEMA.read_text())
    code, report = run(capsys, "gap", "--graph", write_json("star.json", STAR4))
    assert code == 0
    assert set(schema["required"]) <= set(report)
    assert set(report) <= set(schema["properties"])
    for key, rule in schema["properties"].items():
        if "type" in rule:
            assert isinstance(report[key], JSON_TYPES[rule["type"]]), key
    assert report["log_type"] == schema["properties"]["log_type"]["const"]
    allowed = schema["properties"]["results"]["items"]["properties"]["log_type"]["enum"]
    assert [result["log_type"] for result in report["results"]] == ["constant"]
    assert all(result["log_type"] in allowed for result in report["results"])
