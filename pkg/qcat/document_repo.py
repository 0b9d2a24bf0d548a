"""JSON documents for diagrams (``.qcat.json``).

Wires of dimension 1 are not written; on load the unwired dim-1 sources and
sinks are paired again in sorted order.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from qcat.diagram import BoundaryPort, Diagram, DiagramError, Endpoint, Node, NodePort, Wire
from qcat.generators import GeneratorError, GeneratorSpec, Kind, box, scalar_node
from qcat.schemas import DiagramDocument, EndpointDoc, LegsDoc, NodeDoc, WireDoc
from qcat.tensor_core import TensorError, as_matrix, from_matrix

logger = logging.getLogger(__name__)

DOCUMENT_SUFFIX = ".qcat.json"


class DocumentRepositoryError(ValueError):
    pass


def _pair(value: complex) -> tuple[float, float]:
    value = complex(value)
    return (float(value.real), float(value.imag))


def _complex(pair: tuple[float, float]) -> complex:
    return complex(pair[0], pair[1])


# -- serialize ------------------------------------------------------------------


def _node_doc(node: Node, default_dim: int) -> NodeDoc:
    spec = node.spec
    dim = None if spec.dim == default_dim and spec.kind not in (Kind.BOX, Kind.SCALAR_NODE) else spec.dim
    doc = NodeDoc(id=node.id, kind=spec.kind.value, dim=dim, adjoint=spec.adjoint, label=spec.label)
    if spec.kind is Kind.BOX:
        assert spec.tensor is not None
        doc.legs = LegsDoc(out=list(spec.tensor.out_dims), in_=list(spec.tensor.in_dims))
        doc.amplitudes = [_pair(v) for v in spec.tensor.amplitudes]
    elif spec.kind is Kind.SCALAR_NODE:
        doc.value = _pair(spec.value)
    else:
        doc.params = list(spec.params)
    if spec.color is not None:
        doc.color = [[_pair(v) for v in row] for row in as_matrix(spec.color)]
    return doc


def _endpoint_doc(end: Endpoint) -> EndpointDoc:
    if isinstance(end, NodePort):
        return EndpointDoc(node=end.node, port=end.port)
    return EndpointDoc(boundary=end.side, slot=end.slot)


def to_document(diagram: Diagram) -> DiagramDocument:
    dims = Counter(node.spec.dim for node in diagram.nodes if node.spec.kind not in (Kind.BOX, Kind.SCALAR_NODE))
    default_dim = dims.most_common(1)[0][0] if dims else 2
    return DiagramDocument(
        dim=default_dim,
        inputs=list(diagram.inputs),
        outputs=list(diagram.outputs),
        scalar=_pair(diagram.scalar),
        nodes=[_node_doc(node, default_dim) for node in diagram.nodes],
        wires=[
            WireDoc(id=w.id, dim=w.dim, source=_endpoint_doc(w.source), target=_endpoint_doc(w.target))
            for w in diagram.wires
            if w.dim != 1
        ],
    )


def serialize_document(diagram: Diagram) -> str:
    payload = to_document(diagram).model_dump(by_alias=True, exclude_none=True)
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


# -- parse ----------------------------------------------------------------------


def _spec_from_doc(doc: NodeDoc, default_dim: int) -> GeneratorSpec:
    try:
        kind = Kind(doc.kind)
    except ValueError as exc:
        raise DocumentRepositoryError(f"Node {doc.id}: unknown kind {doc.kind!r}.") from exc

    try:
        if kind is Kind.BOX:
            if doc.legs is None or doc.amplitudes is None:
                raise DocumentRepositoryError(f"Node {doc.id}: Box needs legs and amplitudes.")
            data = np.array([_complex(p) for p in doc.amplitudes], dtype=complex)
            tensor = from_matrix(data, doc.legs.out, doc.legs.in_)
            return replace(box(tensor, label=doc.label), adjoint=doc.adjoint)
        if kind is Kind.SCALAR_NODE:
            return scalar_node(_complex(doc.value or (1.0, 0.0)))
        dim = doc.dim if doc.dim is not None else default_dim
        color = None
        if doc.color is not None:
            matrix = np.array([[_complex(p) for p in row] for row in doc.color], dtype=complex)
            color = from_matrix(matrix, (dim,), (dim,))
        return GeneratorSpec(
            kind=kind,
            dim=dim,
            params=tuple(doc.params),
            adjoint=doc.adjoint,
            color=color,
            label=doc.label,
        )
    except (GeneratorError, TensorError) as exc:
        raise DocumentRepositoryError(f"Node {doc.id}: {exc}") from exc


def _endpoint(doc: EndpointDoc) -> Endpoint:
    if doc.node is not None and doc.port is not None:
        return NodePort(doc.node, doc.port)
    assert doc.boundary is not None and doc.slot is not None
    return BoundaryPort(doc.boundary, doc.slot)


def _end_order(end: Endpoint) -> tuple:
    if isinstance(end, NodePort):
        return (0, end.node, end.port, "")
    return (1, 0, end.slot, end.side)


def _restore_unit_wires(
    specs: dict[int, GeneratorSpec], inputs: list[int], outputs: list[int], wires: list[Wire]
) -> list[Wire]:
    used = {end for wire in wires for end in (wire.source, wire.target)}
    sources: list[Endpoint] = [BoundaryPort("in", k) for k, d in enumerate(inputs) if d == 1]
    sinks: list[Endpoint] = [BoundaryPort("out", k) for k, d in enumerate(outputs) if d == 1]
    for node_id, spec in specs.items():
        for port in range(spec.n_ports):
            if spec.port_dim(port) != 1:
                continue
            end = NodePort(node_id, port)
            (sources if spec.is_output_port(port) else sinks).append(end)
    sources = sorted((e for e in sources if e not in used), key=_end_order)
    sinks = sorted((e for e in sinks if e not in used), key=_end_order)
    if len(sources) != len(sinks):
        raise DocumentRepositoryError(
            f"Cannot re-pair dim-1 legs: {len(sources)} sources against {len(sinks)} sinks."
        )
    next_id = max((w.id for w in wires), default=-1) + 1
    restored = []
    for offset, (source, target) in enumerate(zip(sources, sinks)):
        restored.append(Wire(id=next_id + offset, dim=1, source=source, target=target))
    return restored


def from_document(doc: DiagramDocument) -> Diagram:
    specs: dict[int, GeneratorSpec] = {}
    for node_doc in doc.nodes:
        if node_doc.id in specs:
            raise DocumentRepositoryError(f"Duplicate node id {node_doc.id}.")
        specs[node_doc.id] = _spec_from_doc(node_doc, doc.dim)

    wire_ids: set[int] = set()
    wires: list[Wire] = []
    for wire_doc in doc.wires:
        if wire_doc.id in wire_ids:
            raise DocumentRepositoryError(f"Duplicate wire id {wire_doc.id}.")
        wire_ids.add(wire_doc.id)
        wires.append(
            Wire(id=wire_doc.id, dim=wire_doc.dim, source=_endpoint(wire_doc.source), target=_endpoint(wire_doc.target))
        )
    wires.extend(_restore_unit_wires(specs, doc.inputs, doc.outputs, wires))

    try:
        return Diagram(
            nodes=tuple(Node(id=k, spec=v) for k, v in specs.items()),
            wires=tuple(wires),
            inputs=tuple(doc.inputs),
            outputs=tuple(doc.outputs),
            scalar=_complex(doc.scalar),
        )
    except DiagramError as exc:
        raise DocumentRepositoryError(str(exc)) from exc


def parse_document(text: str) -> Diagram:
    try:
        doc = DiagramDocument.model_validate_json(text)
    except ValidationError as exc:
        raise DocumentRepositoryError(f"Invalid diagram document: {exc}") from exc
    return from_document(doc)


def load_diagram(path: str | Path) -> Diagram:
    target = Path(path)
    try:
        text = target.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentRepositoryError(f"Failed to read {target}: {exc}") from exc
    diagram = parse_document(text)
    logger.debug("loaded %s: %s", target, diagram.describe())
    return diagram


def save_diagram(path: str | Path, diagram: Diagram) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(serialize_document(diagram), encoding="utf-8")
    except OSError as exc:
        raise DocumentRepositoryError(f"Failed to write {target}: {exc}") from exc
    return target
