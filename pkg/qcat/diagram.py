"""Open-graph diagrams over generator nodes.

A node's ports follow its tensor's leg order: outputs ``0..n_out-1`` then
inputs. Every wire runs from a source (a node output or a boundary input
slot) to a sink (a node input or a boundary output slot).
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Literal, Sequence, Union

from qcat.generators import GeneratorSpec, box
from qcat.tensor_core import ComplexTensor, TensorError, contract, identity, scale

logger = logging.getLogger(__name__)


class DiagramError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class NodePort:
    node: int
    port: int


@dataclass(frozen=True, order=True)
class BoundaryPort:
    side: Literal["in", "out"]
    slot: int


Endpoint = Union[NodePort, BoundaryPort]


@dataclass(frozen=True)
class Wire:
    id: int
    dim: int
    source: Endpoint
    target: Endpoint

    def other(self, end: Endpoint) -> Endpoint:
        if end == self.source:
            return self.target
        if end == self.target:
            return self.source
        raise DiagramError(f"{end} is not an endpoint of wire {self.id}.")


@dataclass(frozen=True)
class Node:
    id: int
    spec: GeneratorSpec


class DefectKind(str, Enum):
    DIM_MISMATCH = "DimMismatch"
    PORT_REUSE = "PortReuse"
    DANGLING_PORT = "DanglingPort"
    DIRECTION_MISMATCH = "DirectionMismatch"
    UNKNOWN_NODE = "UnknownNode"
    SLOT_REUSE = "SlotReuse"
    BAD_SIGNATURE = "BadSignature"


@dataclass(frozen=True)
class Defect:
    kind: DefectKind
    message: str
    node_ids: tuple[int, ...] = ()
    wire_ids: tuple[int, ...] = ()


@dataclass(frozen=True)
class Diagram:
    nodes: tuple[Node, ...] = ()
    wires: tuple[Wire, ...] = ()
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    scalar: complex = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "wires", tuple(sorted(self.wires, key=lambda w: w.id)))
        object.__setattr__(self, "inputs", tuple(int(d) for d in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(d) for d in self.outputs))
        value = complex(self.scalar)
        if not cmath.isfinite(value):
            raise DiagramError(f"Diagram scalar must be finite, got {value!r}.")
        object.__setattr__(self, "scalar", value)

    @cached_property
    def _node_index(self) -> dict[int, Node]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def _wire_index(self) -> dict[Endpoint, Wire]:
        index: dict[Endpoint, Wire] = {}
        for wire in self.wires:
            index.setdefault(wire.source, wire)
            index.setdefault(wire.target, wire)
        return index

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.outputs, self.inputs

    @property
    def node_ids(self) -> list[int]:
        return [node.id for node in self.nodes]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._node_index

    def node(self, node_id: int) -> Node:
        try:
            return self._node_index[node_id]
        except KeyError as exc:
            raise DiagramError(f"Unknown node {node_id}.") from exc

    def spec(self, node_id: int) -> GeneratorSpec:
        return self.node(node_id).spec

    def wire_at(self, end: Endpoint) -> Wire | None:
        return self._wire_index.get(end)

    def peer(self, end: Endpoint) -> Endpoint | None:
        wire = self.wire_at(end)
        return None if wire is None else wire.other(end)

    def ports(self, node_id: int) -> list[NodePort]:
        return [NodePort(node_id, k) for k in range(self.spec(node_id).n_ports)]

    def output_peers(self, node_id: int) -> list[Endpoint | None]:
        spec = self.spec(node_id)
        return [self.peer(NodePort(node_id, k)) for k in range(len(spec.out_dims))]

    def input_peers(self, node_id: int) -> list[Endpoint | None]:
        spec = self.spec(node_id)
        offset = len(spec.out_dims)
        return [self.peer(NodePort(node_id, offset + k)) for k in range(len(spec.in_dims))]

    def wires_between(self, a: int, b: int) -> list[Wire]:
        found = []
        for wire in self.wires:
            ends = (wire.source, wire.target)
            if all(isinstance(e, NodePort) for e in ends):
                nodes = {e.node for e in ends}  # type: ignore[union-attr]
                if nodes == {a, b} and a != b:
                    found.append(wire)
        return found

    def describe(self) -> str:
        return (
            f"Diagram(nodes={len(self.nodes)}, wires={len(self.wires)}, "
            f"in={self.inputs}, out={self.outputs}, scalar={self.scalar:.6g})"
        )


def is_source(end: Endpoint, diagram_or_builder: Diagram | DiagramBuilder) -> bool:
    if isinstance(end, BoundaryPort):
        return end.side == "in"
    return diagram_or_builder.spec(end.node).is_output_port(end.port)


def endpoint_dim(end: Endpoint, diagram_or_builder: Diagram | DiagramBuilder) -> int:
    if isinstance(end, BoundaryPort):
        dims = diagram_or_builder.inputs if end.side == "in" else diagram_or_builder.outputs
        return dims[end.slot]
    return diagram_or_builder.spec(end.node).port_dim(end.port)


@dataclass
class DiagramBuilder:
    """Mutable workspace for building and rewriting diagrams.

    Node ids are never reused, so ids of untouched nodes survive a rewrite.
    """

    inputs: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)
    scalar: complex = 1.0
    _nodes: dict[int, GeneratorSpec] = field(default_factory=dict)
    _wires: dict[int, Wire] = field(default_factory=dict)
    _ends: dict[Endpoint, int] = field(default_factory=dict)
    _next_node: int = 0
    _next_wire: int = 0

    @classmethod
    def from_diagram(cls, diagram: Diagram) -> DiagramBuilder:
        builder = cls(inputs=list(diagram.inputs), outputs=list(diagram.outputs), scalar=diagram.scalar)
        for node in diagram.nodes:
            builder._nodes[node.id] = node.spec
        for wire in diagram.wires:
            builder._add_wire(wire)
        builder._next_node = max(diagram.node_ids, default=-1) + 1
        builder._next_wire = max((w.id for w in diagram.wires), default=-1) + 1
        return builder

    def spec(self, node_id: int) -> GeneratorSpec:
        try:
            return self._nodes[node_id]
        except KeyError as exc:
            raise DiagramError(f"Unknown node {node_id}.") from exc

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def add_node(self, spec: GeneratorSpec) -> int:
        node_id = self._next_node
        self._next_node += 1
        self._nodes[node_id] = spec
        return node_id

    def set_spec(self, node_id: int, spec: GeneratorSpec) -> None:
        old = self.spec(node_id)
        if old.out_dims != spec.out_dims or old.in_dims != spec.in_dims:
            raise DiagramError(f"set_spec on node {node_id} would change its signature.")
        self._nodes[node_id] = spec

    def add_input(self, dim: int) -> BoundaryPort:
        self.inputs.append(dim)
        return BoundaryPort("in", len(self.inputs) - 1)

    def add_output(self, dim: int) -> BoundaryPort:
        self.outputs.append(dim)
        return BoundaryPort("out", len(self.outputs) - 1)

    def _add_wire(self, wire: Wire) -> None:
        for end in (wire.source, wire.target):
            if end in self._ends:
                raise DiagramError(f"{end} is already wired.")
        self._wires[wire.id] = wire
        self._ends[wire.source] = wire.id
        self._ends[wire.target] = wire.id

    def connect(self, source: Endpoint, target: Endpoint) -> int:
        if not is_source(source, self):
            source, target = target, source
        if not is_source(source, self) or is_source(target, self):
            raise DiagramError(f"Cannot wire {source} to {target}: directions do not match.")
        dim = endpoint_dim(source, self)
        if endpoint_dim(target, self) != dim:
            raise DiagramError(
                f"Cannot wire {source} to {target}: dims {dim} and {endpoint_dim(target, self)}."
            )
        wire_id = self._next_wire
        self._next_wire += 1
        self._add_wire(Wire(id=wire_id, dim=dim, source=source, target=target))
        return wire_id

    def wire_at(self, end: Endpoint) -> Wire | None:
        wire_id = self._ends.get(end)
        return None if wire_id is None else self._wires[wire_id]

    def peer(self, end: Endpoint) -> Endpoint:
        wire = self.wire_at(end)
        if wire is None:
            raise DiagramError(f"{end} is not wired.")
        return wire.other(end)

    def remove_wire(self, wire_id: int) -> Wire:
        wire = self._wires.pop(wire_id)
        self._ends.pop(wire.source, None)
        self._ends.pop(wire.target, None)
        return wire

    def detach(self, end: Endpoint) -> Endpoint:
        """Unwire ``end`` and return whatever it was connected to."""
        wire = self.wire_at(end)
        if wire is None:
            raise DiagramError(f"{end} is not wired.")
        self.remove_wire(wire.id)
        return wire.other(end)

    def remove_node(self, node_id: int) -> dict[int, Endpoint]:
        """Delete a node; returns port -> former peer for ports wired elsewhere."""
        spec = self.spec(node_id)
        peers: dict[int, Endpoint] = {}
        for port in range(spec.n_ports):
            end = NodePort(node_id, port)
            wire = self.wire_at(end)
            if wire is None:
                continue
            self.remove_wire(wire.id)
            other = wire.other(end)
            if not (isinstance(other, NodePort) and other.node == node_id):
                peers[port] = other
        del self._nodes[node_id]
        return peers

    def splice(self, source: Endpoint, target: Endpoint, specs: Sequence[GeneratorSpec]) -> list[int]:
        """Wire ``source`` to ``target`` through a chain of one-in one-out nodes."""
        created = []
        current = source
        for spec in specs:
            node_id = self.add_node(spec)
            self.connect(current, NodePort(node_id, 1))
            current = NodePort(node_id, 0)
            created.append(node_id)
        self.connect(current, target)
        return created

    def multiply_scalar(self, factor: complex) -> None:
        self.scalar *= factor

    def build(self) -> Diagram:
        return Diagram(
            nodes=tuple(Node(id=k, spec=v) for k, v in self._nodes.items()),
            wires=tuple(self._wires.values()),
            inputs=tuple(self.inputs),
            outputs=tuple(self.outputs),
            scalar=self.scalar,
        )


# -- constructors ---------------------------------------------------------------


def identity_diagram(dims: Sequence[int]) -> Diagram:
    builder = DiagramBuilder()
    for d in dims:
        builder.connect(builder.add_input(d), builder.add_output(d))
    return builder.build()


def scalar_diagram(value: complex) -> Diagram:
    return Diagram(scalar=value)


def from_spec(spec: GeneratorSpec) -> Diagram:
    builder = DiagramBuilder()
    node_id = builder.add_node(spec)
    for k, d in enumerate(spec.out_dims):
        builder.connect(NodePort(node_id, k), builder.add_output(d))
    offset = len(spec.out_dims)
    for k, d in enumerate(spec.in_dims):
        builder.connect(builder.add_input(d), NodePort(node_id, offset + k))
    return builder.build()


def from_tensor(tensor: ComplexTensor, label: str = "") -> Diagram:
    return from_spec(box(tensor, label=label))


def chain(specs: Iterable[GeneratorSpec]) -> Diagram:
    """Sequential composition of one-in one-out generators, first spec applied first."""
    result: Diagram | None = None
    for spec in specs:
        step = from_spec(spec)
        result = step if result is None else compose_diagrams(step, result)
    if result is None:
        raise DiagramError("chain() needs at least one generator.")
    return result


def permute_outputs(diagram: Diagram, order: Sequence[int]) -> Diagram:
    """New output slot k carries old output ``order[k]``."""
    if sorted(order) != list(range(len(diagram.outputs))):
        raise DiagramError(f"{list(order)} is not a permutation of the outputs.")
    new_slot = {old: new for new, old in enumerate(order)}
    wires = []
    for wire in diagram.wires:
        target = wire.target
        if isinstance(target, BoundaryPort) and target.side == "out":
            target = BoundaryPort("out", new_slot[target.slot])
        wires.append(replace(wire, target=target))
    outputs = tuple(diagram.outputs[old] for old in order)
    return replace(diagram, wires=tuple(wires), outputs=outputs)


def node_count(diagram: Diagram) -> int:
    return len(diagram.nodes)


def total_boundary_dim(diagram: Diagram) -> int:
    return math.prod(diagram.outputs) * math.prod(diagram.inputs)


# -- categorical operations -----------------------------------------------------


def _shifted(
    diagram: Diagram, node_offset: int, wire_offset: int, in_offset: int, out_offset: int
) -> tuple[list[Node], list[Wire]]:
    def move(end: Endpoint) -> Endpoint:
        if isinstance(end, NodePort):
            return NodePort(end.node + node_offset, end.port)
        offset = in_offset if end.side == "in" else out_offset
        return BoundaryPort(end.side, end.slot + offset)

    nodes = [Node(node.id + node_offset, node.spec) for node in diagram.nodes]
    wires = [
        Wire(wire.id + wire_offset, wire.dim, move(wire.source), move(wire.target))
        for wire in diagram.wires
    ]
    return nodes, wires


def _offsets(diagram: Diagram) -> tuple[int, int]:
    return (
        max(diagram.node_ids, default=-1) + 1,
        max((w.id for w in diagram.wires), default=-1) + 1,
    )


def compose_diagrams(g: Diagram, f: Diagram) -> Diagram:
    """g∘f: f's outputs are glued to g's inputs slot by slot."""
    if f.outputs != g.inputs:
        raise DiagramError(f"Boundary mismatch: f outputs {f.outputs} vs g inputs {g.inputs}.")
    node_offset, wire_offset = _offsets(f)
    g_nodes, g_wires = _shifted(g, node_offset, wire_offset, 0, 0)

    f_into_slot: dict[int, Wire] = {}
    wires: list[Wire] = []
    for wire in f.wires:
        if isinstance(wire.target, BoundaryPort):
            f_into_slot[wire.target.slot] = wire
        else:
            wires.append(wire)

    for wire in g_wires:
        if isinstance(wire.source, BoundaryPort):
            upstream = f_into_slot.pop(wire.source.slot)
            wires.append(Wire(upstream.id, wire.dim, upstream.source, wire.target))
        else:
            wires.append(wire)
    return Diagram(
        nodes=f.nodes + tuple(g_nodes),
        wires=tuple(wires),
        inputs=f.inputs,
        outputs=g.outputs,
        scalar=f.scalar * g.scalar,
    )


def tensor_diagrams(a: Diagram, b: Diagram) -> Diagram:
    node_offset, wire_offset = _offsets(a)
    b_nodes, b_wires = _shifted(b, node_offset, wire_offset, len(a.inputs), len(a.outputs))
    return Diagram(
        nodes=a.nodes + tuple(b_nodes),
        wires=a.wires + tuple(b_wires),
        inputs=a.inputs + b.inputs,
        outputs=a.outputs + b.outputs,
        scalar=a.scalar * b.scalar,
    )


def dagger_diagram(diagram: Diagram) -> Diagram:
    def mirror(end: Endpoint) -> Endpoint:
        if isinstance(end, BoundaryPort):
            return BoundaryPort("out" if end.side == "in" else "in", end.slot)
        spec = diagram.spec(end.node)
        n_out = len(spec.out_dims)
        n_in = len(spec.in_dims)
        if end.port < n_out:
            return NodePort(end.node, n_in + end.port)
        return NodePort(end.node, end.port - n_out)

    nodes = tuple(Node(node.id, node.spec.dagger()) for node in diagram.nodes)
    wires = tuple(
        Wire(wire.id, wire.dim, mirror(wire.target), mirror(wire.source)) for wire in diagram.wires
    )
    return Diagram(
        nodes=nodes,
        wires=wires,
        inputs=diagram.outputs,
        outputs=diagram.inputs,
        scalar=diagram.scalar.conjugate(),
    )


# -- semantics ------------------------------------------------------------------


def validate(diagram: Diagram) -> list[Defect]:
    defects: list[Defect] = []
    used: dict[Endpoint, list[int]] = {}

    for wire in diagram.wires:
        for role, end in (("source", wire.source), ("target", wire.target)):
            if isinstance(end, NodePort):
                if not diagram.has_node(end.node):
                    defects.append(
                        Defect(
                            DefectKind.UNKNOWN_NODE,
                            f"wire {wire.id} {role} names node {end.node}",
                            (end.node,),
                            (wire.id,),
                        )
                    )
                    continue
                spec = diagram.spec(end.node)
                if not 0 <= end.port < spec.n_ports:
                    defects.append(
                        Defect(
                            DefectKind.BAD_SIGNATURE,
                            f"wire {wire.id} uses port {end.port} of node {end.node}, which has {spec.n_ports}",
                            (end.node,),
                            (wire.id,),
                        )
                    )
                    continue
            else:
                dims = diagram.inputs if end.side == "in" else diagram.outputs
                if not 0 <= end.slot < len(dims):
                    defects.append(
                        Defect(DefectKind.BAD_SIGNATURE, f"wire {wire.id} uses missing slot {end}", (), (wire.id,))
                    )
                    continue
            used.setdefault(end, []).append(wire.id)
            wants_source = role == "source"
            if is_source(end, diagram) != wants_source:
                defects.append(
                    Defect(
                        DefectKind.DIRECTION_MISMATCH,
                        f"wire {wire.id} has {end} as its {role}",
                        (end.node,) if isinstance(end, NodePort) else (),
                        (wire.id,),
                    )
                )
            if endpoint_dim(end, diagram) != wire.dim:
                defects.append(
                    Defect(
                        DefectKind.DIM_MISMATCH,
                        f"wire {wire.id} has dim {wire.dim} but {end} has dim {endpoint_dim(end, diagram)}",
                        (end.node,) if isinstance(end, NodePort) else (),
                        (wire.id,),
                    )
                )

    for end, wire_ids in sorted(used.items(), key=lambda item: _end_key(item[0])):
        if len(wire_ids) > 1:
            if isinstance(end, NodePort):
                defects.append(
                    Defect(DefectKind.PORT_REUSE, f"{end} is used by wires {wire_ids}", (end.node,), tuple(wire_ids))
                )
            else:
                defects.append(Defect(DefectKind.SLOT_REUSE, f"{end} is used by wires {wire_ids}", (), tuple(wire_ids)))

    for node in diagram.nodes:
        for port in range(node.spec.n_ports):
            if NodePort(node.id, port) not in used:
                defects.append(
                    Defect(DefectKind.DANGLING_PORT, f"port {port} of node {node.id} is not wired", (node.id,))
                )
    for side, dims in (("in", diagram.inputs), ("out", diagram.outputs)):
        for slot in range(len(dims)):
            if BoundaryPort(side, slot) not in used:  # type: ignore[arg-type]
                defects.append(Defect(DefectKind.DANGLING_PORT, f"boundary {side} slot {slot} is not wired"))
    return defects


def _end_key(end: Endpoint) -> tuple:
    if isinstance(end, NodePort):
        return (0, end.node, end.port, "")
    return (1, end.slot, 0, end.side)


def evaluate(diagram: Diagram) -> ComplexTensor:
    defects = validate(diagram)
    if defects:
        raise DiagramError(f"Cannot evaluate an invalid diagram: {defects[0].kind.value}: {defects[0].message}")

    tensors: list[ComplexTensor] = []
    position: dict[int, int] = {}
    for node in diagram.nodes:
        position[node.id] = len(tensors)
        tensors.append(node.spec.to_tensor())

    edges: list[tuple[int, int, int, int]] = []
    open_legs: dict[BoundaryPort, tuple[int, int]] = {}
    for wire in diagram.wires:
        source, target = wire.source, wire.target
        if isinstance(source, NodePort) and isinstance(target, NodePort):
            edges.append((position[source.node], source.port, position[target.node], target.port))
        elif isinstance(source, NodePort):
            open_legs[target] = (position[source.node], source.port)  # type: ignore[index]
        elif isinstance(target, NodePort):
            open_legs[source] = (position[target.node], target.port)
        else:
            # boundary-to-boundary wire: evaluate through an explicit identity
            tensors.append(identity((wire.dim,)))
            open_legs[target] = (len(tensors) - 1, 0)  # type: ignore[index]
            open_legs[source] = (len(tensors) - 1, 1)

    boundary = [open_legs[BoundaryPort("out", k)] for k in range(len(diagram.outputs))]
    boundary += [open_legs[BoundaryPort("in", k)] for k in range(len(diagram.inputs))]
    try:
        result = contract(tensors, edges, boundary)
    except TensorError as exc:
        raise DiagramError(f"Contraction failed: {exc}") from exc
    return scale(result, diagram.scalar)
