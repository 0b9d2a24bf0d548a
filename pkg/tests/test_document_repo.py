import json
from dataclasses import replace

import numpy as np
import pytest

from qcat.diagram import Diagram, evaluate, from_spec, identity_diagram, scalar_diagram, tensor_diagrams, validate
from qcat.document_repo import (
    DocumentRepositoryError,
    load_diagram,
    parse_document,
    save_diagram,
    serialize_document,
)
from qcat.generators import Kind, box, gate, scalar_node, spec
from qcat.protocols import ghz_circuit, teleport_branch, zx_nadd_circuit
from qcat.rewriting.hosts import random_unitary
from qcat.tensor_core import equal_within, from_matrix


def _corpus() -> list[Diagram]:
    rng = np.random.default_rng(90)
    matrix = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    tensor = from_matrix(matrix, (2,), (3,))
    color = random_unitary(3, rng)
    return [
        from_spec(spec(Kind.H, 3)),
        from_spec(spec(Kind.NEG, 4)),
        from_spec(spec(Kind.ZPOW, 5, (2,))),
        from_spec(spec(Kind.XPOW, 3, (1,))),
        from_spec(spec(Kind.ADD, 3)),
        from_spec(spec(Kind.NADD, 3, (1,))),
        from_spec(spec(Kind.SWAP, 2, (2, 3))),
        from_spec(spec(Kind.BASIS_STATE, 3, (2,))),
        from_spec(spec(Kind.PLUS_STATE, 2)),
        from_spec(spec(Kind.BELL_STATE, 3, (1, 2), adjoint=True)),
        from_spec(spec(Kind.CUP, 2)),
        from_spec(spec(Kind.CAP, 3)),
        from_spec(spec(Kind.NORMALIZED_CUP, 4)),
        from_spec(spec(Kind.NORMALIZED_CAP, 2)),
        from_spec(spec(Kind.COPY_DOT, 3, (1, 2))),
        from_spec(spec(Kind.PLUS_DOT, 3, (2, 1), color=color)),
        from_spec(spec(Kind.COPY_DOT, 3, (0, 0))),
        from_spec(box(tensor, label="U")),
        from_spec(replace(box(tensor, label="V"), adjoint=True)),
        from_spec(scalar_node(2 - 1j)),
        ghz_circuit(3),
        teleport_branch(3, 1, 2, correction=(1, 1)),
        zx_nadd_circuit(3, 1, 2, 0, 1),
        identity_diagram((2, 3)),
        scalar_diagram(0.5 + 0.25j),
        tensor_diagrams(from_spec(spec(Kind.H, 2)), from_spec(spec(Kind.H, 3))),
    ]


def test_round_trip_preserves_every_corpus_diagram() -> None:
    corpus = _corpus()
    assert len(corpus) >= 20
    covered = {node.spec.kind for diagram in corpus for node in diagram.nodes}
    assert covered == set(Kind)
    for diagram in corpus:
        text = serialize_document(diagram)
        restored = parse_document(text)
        assert restored == diagram, diagram.describe()
        assert serialize_document(restored) == text


def test_document_fields_follow_the_schema() -> None:
    payload = json.loads(serialize_document(from_spec(spec(Kind.PLUS_DOT, 3, (1, 1)))))
    assert payload["version"] == 1
    assert payload["dim"] == 3
    assert payload["scalar"] == [1.0, 0.0]
    node = payload["nodes"][0]
    assert node["kind"] == "PlusDot"
    assert node["params"] == [1, 1]
    assert "dim" not in node
    assert "color" not in node
    assert payload["wires"][0]["source"] == {"node": 0, "port": 0}


def test_box_documents_carry_legs_and_amplitudes() -> None:
    tensor = from_matrix(np.array([[1, 2j], [0, 1]]), (2,), (2,))
    payload = json.loads(serialize_document(from_spec(box(tensor, label="B"))))
    node = payload["nodes"][0]
    assert node["legs"] == {"out": [2], "in": [2]}
    assert node["amplitudes"][1] == [0.0, 2.0]
    assert node["label"] == "B"


def test_hand_written_document_evaluates_to_cnot() -> None:
    text = json.dumps(
        {
            "version": 1,
            "dim": 2,
            "inputs": [2, 2],
            "outputs": [2, 2],
            "nodes": [{"id": 0, "kind": "NADD"}],
            "wires": [
                {"id": 0, "dim": 2, "source": {"boundary": "in", "slot": 0}, "target": {"node": 0, "port": 2}},
                {"id": 1, "dim": 2, "source": {"boundary": "in", "slot": 1}, "target": {"node": 0, "port": 3}},
                {"id": 2, "dim": 2, "source": {"node": 0, "port": 0}, "target": {"boundary": "out", "slot": 0}},
                {"id": 3, "dim": 2, "source": {"node": 0, "port": 1}, "target": {"boundary": "out", "slot": 1}},
            ],
        }
    )
    assert equal_within(evaluate(parse_document(text)), gate(Kind.NADD, 2))


def test_unit_wires_are_elided_and_re_paired() -> None:
    diagrams = [
        from_spec(spec(Kind.SWAP, 2, (1, 2))),
        from_spec(box(from_matrix(np.array([[1.0, 2.0]]), (1,), (2,)), label="row")),
    ]
    for diagram in diagrams:
        text = serialize_document(diagram)
        assert all(wire["dim"] != 1 for wire in json.loads(text)["wires"])
        restored = parse_document(text)
        assert validate(restored) == []
        assert len(restored.wires) == len(diagram.wires)
        assert equal_within(evaluate(restored), evaluate(diagram))


def test_unpaired_unit_legs_are_rejected() -> None:
    text = json.dumps({"version": 1, "inputs": [1], "outputs": []})
    with pytest.raises(DocumentRepositoryError, match="re-pair"):
        parse_document(text)


def test_malformed_documents_are_rejected() -> None:
    with pytest.raises(DocumentRepositoryError):
        parse_document("{not json")
    with pytest.raises(DocumentRepositoryError):
        parse_document(json.dumps({"version": 2}))
    with pytest.raises(DocumentRepositoryError, match="unknown kind"):
        parse_document(json.dumps({"version": 1, "nodes": [{"id": 0, "kind": "Toffoli"}]}))
    with pytest.raises(DocumentRepositoryError, match="Duplicate node id"):
        parse_document(
            json.dumps({"version": 1, "nodes": [{"id": 0, "kind": "H"}, {"id": 0, "kind": "NEG"}]})
        )
    with pytest.raises(DocumentRepositoryError):
        parse_document(json.dumps({"version": 1, "nodes": [{"id": 0, "kind": "Zpow", "params": [1, 2]}]}))
    endpoint = {"node": 0, "port": 0, "boundary": "out", "slot": 0}
    wire = {"id": 0, "dim": 2, "source": endpoint, "target": {"boundary": "out", "slot": 0}}
    with pytest.raises(DocumentRepositoryError):
        parse_document(json.dumps({"version": 1, "outputs": [2], "wires": [wire]}))


def test_save_and_load_round_trip(tmp_path) -> None:
    diagram = ghz_circuit(2)
    target = save_diagram(tmp_path / "nested" / "ghz.qcat.json", diagram)
    assert target.exists()
    assert load_diagram(target) == diagram
    with pytest.raises(DocumentRepositoryError, match="Failed to read"):
        load_diagram(tmp_path / "missing.qcat.json")
