import numpy as np
import pytest

from qcat.diagram import (
    BoundaryPort,
    DefectKind,
    Diagram,
    DiagramBuilder,
    DiagramError,
    Node,
    NodePort,
    Wire,
    chain,
    compose_diagrams,
    dagger_diagram,
    evaluate,
    from_spec,
    from_tensor,
    identity_diagram,
    permute_outputs,
    scalar_diagram,
    tensor_diagrams,
    validate,
)
from qcat.generators import Kind, box, gate, spec
from qcat.tensor_core import compose, dagger, equal_within, from_matrix, identity, kron


def _random_box(rng: np.random.Generator, out_dims: tuple[int, ...], in_dims: tuple[int, ...]):
    rows = int(np.prod(out_dims))
    cols = int(np.prod(in_dims))
    matrix = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    return from_matrix(matrix, out_dims, in_dims)


def test_identity_diagram_evaluates_to_identity() -> None:
    assert equal_within(evaluate(identity_diagram((2, 3))), identity((2, 3)))


def test_scalar_diagram_evaluates_to_scalar() -> None:
    assert evaluate(scalar_diagram(2.0)).scalar_value() == 2.0


def test_chain_applies_first_spec_first() -> None:
    d = 3
    diagram = chain([spec(Kind.XPOW, d, (1,)), spec(Kind.H, d)])
    expected = compose(gate(Kind.H, d), gate(Kind.XPOW, d, (1,)))
    assert equal_within(evaluate(diagram), expected)


def test_composition_is_functorial() -> None:
    rng = np.random.default_rng(21)
    f = _random_box(rng, (2, 3), (3,))
    g = _random_box(rng, (2,), (2, 3))
    composed = compose_diagrams(from_tensor(g), from_tensor(f))
    assert composed.signature == ((2,), (3,))
    assert equal_within(evaluate(composed), compose(g, f))


def test_tensor_product_is_functorial() -> None:
    rng = np.random.default_rng(22)
    a = _random_box(rng, (2,), (3,))
    b = _random_box(rng, (3, 2), (2,))
    product = tensor_diagrams(from_tensor(a), from_tensor(b))
    assert equal_within(evaluate(product), kron(a, b))


def test_dagger_is_functorial() -> None:
    rng = np.random.default_rng(23)
    f = _random_box(rng, (3,), (2,))
    g = _random_box(rng, (2,), (3,))
    diagram = compose_diagrams(from_tensor(g), from_tensor(f))
    diagram = Diagram(diagram.nodes, diagram.wires, diagram.inputs, diagram.outputs, scalar=1 + 2j)
    assert equal_within(evaluate(dagger_diagram(diagram)), dagger(evaluate(diagram)))


def test_composition_rejects_boundary_mismatch() -> None:
    with pytest.raises(DiagramError, match="Boundary mismatch"):
        compose_diagrams(identity_diagram((2,)), identity_diagram((3,)))


def test_builder_connect_orients_wires_and_checks_dims() -> None:
    builder = DiagramBuilder()
    node = builder.add_node(spec(Kind.H, 3))
    out_slot = builder.add_output(3)
    builder.connect(out_slot, NodePort(node, 0))
    wire = builder.wire_at(out_slot)
    assert wire is not None
    assert wire.source == NodePort(node, 0)
    with pytest.raises(DiagramError):
        builder.connect(builder.add_input(2), NodePort(node, 1))


def test_builder_splice_inserts_chain() -> None:
    d = 3
    builder = DiagramBuilder()
    created = builder.splice(builder.add_input(d), builder.add_output(d), [spec(Kind.XPOW, d, (1,)), spec(Kind.NEG, d)])
    assert len(created) == 2
    expected = compose(gate(Kind.NEG, d), gate(Kind.XPOW, d, (1,)))
    assert equal_within(evaluate(builder.build()), expected)


def test_permute_outputs_reorders_slots() -> None:
    diagram = from_spec(spec(Kind.SWAP, 2, (2, 3)))
    assert diagram.outputs == (3, 2)
    swapped_back = permute_outputs(diagram, [1, 0])
    assert swapped_back.outputs == (2, 3)
    assert equal_within(evaluate(swapped_back), identity((2, 3)))


def test_boundary_to_boundary_wire_evaluates() -> None:
    builder = DiagramBuilder()
    builder.connect(builder.add_input(2), builder.add_output(2))
    builder.add_node(spec(Kind.SCALAR_NODE, 1, value=3.0))
    assert equal_within(evaluate(builder.build()), from_matrix(3 * np.eye(2), (2,), (2,)))


def test_validate_reports_dangling_ports() -> None:
    diagram = Diagram(nodes=(Node(0, spec(Kind.H, 2)),))
    kinds = [defect.kind for defect in validate(diagram)]
    assert kinds == [DefectKind.DANGLING_PORT, DefectKind.DANGLING_PORT]
    with pytest.raises(DiagramError):
        evaluate(diagram)


def test_validate_reports_direction_and_dim_mismatches() -> None:
    diagram = Diagram(
        nodes=(Node(0, spec(Kind.H, 2)),),
        wires=(
            Wire(0, 3, BoundaryPort("in", 0), NodePort(0, 1)),
            Wire(1, 2, BoundaryPort("out", 0), NodePort(0, 0)),
        ),
        inputs=(2,),
        outputs=(2,),
    )
    kinds = {defect.kind for defect in validate(diagram)}
    assert DefectKind.DIM_MISMATCH in kinds
    assert DefectKind.DIRECTION_MISMATCH in kinds


def test_validate_reports_unknown_nodes_and_reuse() -> None:
    diagram = Diagram(
        nodes=(Node(0, spec(Kind.H, 2)),),
        wires=(
            Wire(0, 2, BoundaryPort("in", 0), NodePort(0, 1)),
            Wire(1, 2, BoundaryPort("in", 0), NodePort(7, 1)),
            Wire(2, 2, NodePort(0, 0), BoundaryPort("out", 0)),
        ),
        inputs=(2,),
        outputs=(2,),
    )
    kinds = {defect.kind for defect in validate(diagram)}
    assert DefectKind.UNKNOWN_NODE in kinds
    assert DefectKind.SLOT_REUSE in kinds


def test_valid_diagram_has_no_defects() -> None:
    rng = np.random.default_rng(24)
    diagram = tensor_diagrams(from_spec(box(_random_box(rng, (2,), (2, 2)))), from_spec(spec(Kind.CUP, 3)))
    assert validate(diagram) == []
