"""Graphviz text for diagrams.

Output is a pure function of the diagram: nodes in id order, wires in id
order, inputs ranked on the left and outputs on the right.
"""
from __future__ import annotations

from qcat.diagram import BoundaryPort, Diagram, Endpoint, Node, NodePort
from qcat.generators import COMPACT_KINDS, STATE_KINDS, Kind

_NODE_DEFAULTS = {"fontname": "Helvetica", "fontsize": "11"}


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attrs(attrs: dict[str, str]) -> str:
    return ", ".join(f"{name}={_quote(value)}" for name, value in attrs.items())


def _node_name(end: Endpoint) -> str:
    if isinstance(end, NodePort):
        return f"n{end.node}"
    return f"{end.side}{end.slot}"


def node_attrs(node: Node) -> dict[str, str]:
    spec = node.spec
    kind = spec.kind
    if kind is Kind.COPY_DOT:
        attrs = {"shape": "circle", "label": "•", "width": "0.3", "fixedsize": "true"}
    elif kind is Kind.PLUS_DOT:
        attrs = {"shape": "circle", "label": "⊕", "width": "0.3", "fixedsize": "true"}
    elif kind in COMPACT_KINDS:
        is_cup = kind in (Kind.CUP, Kind.NORMALIZED_CUP)
        attrs = {"shape": "plaintext", "label": "∪" if is_cup else "∩"}
    elif kind in STATE_KINDS:
        attrs = {"shape": "invtriangle" if spec.adjoint else "triangle", "label": spec.describe()}
    elif kind is Kind.SCALAR_NODE:
        attrs = {"shape": "diamond", "label": spec.describe()}
    else:
        attrs = {"shape": "box", "label": spec.describe()}
    if spec.color is not None:
        attrs["style"] = "dashed"
    return attrs


def to_dot(diagram: Diagram, name: str = "qcat") -> str:
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;", f"  node [{_attrs(_NODE_DEFAULTS)}];"]

    if diagram.inputs:
        inputs = " ".join(
            f"in{k} [{_attrs({'shape': 'plaintext', 'label': f'in{k}:{d}'})}];" for k, d in enumerate(diagram.inputs)
        )
        lines.append(f"  {{ rank=source; {inputs} }}")
    if diagram.outputs:
        outputs = " ".join(
            f"out{k} [{_attrs({'shape': 'plaintext', 'label': f'out{k}:{d}'})}];"
            for k, d in enumerate(diagram.outputs)
        )
        lines.append(f"  {{ rank=sink; {outputs} }}")
    if diagram.scalar != 1:
        lines.append(f"  scalar [{_attrs({'shape': 'plaintext', 'label': f'× {diagram.scalar:.6g}'})}];")

    for node in diagram.nodes:
        lines.append(f"  n{node.id} [{_attrs(node_attrs(node))}];")

    for wire in diagram.wires:
        attrs = {"label": str(wire.dim)}
        if isinstance(wire.source, NodePort):
            attrs["taillabel"] = str(wire.source.port)
        if isinstance(wire.target, NodePort):
            attrs["headlabel"] = str(wire.target.port)
        if isinstance(wire.source, BoundaryPort) and isinstance(wire.target, BoundaryPort):
            attrs["style"] = "bold"
        lines.append(f"  {_node_name(wire.source)} -> {_node_name(wire.target)} [{_attrs(attrs)}];")

    lines.append("}")
    return "\n".join(lines) + "\n"
