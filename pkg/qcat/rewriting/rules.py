"""The rule catalog.

Each law is a ``match_*`` function returning every occurrence in a diagram
and a ``rewrite_*`` function performing the surgery on a builder. The
factor a rule deposits into the scalar accumulator is the inverse of the
factor its replacement picks up, so a rewrite never changes the value of
the diagram.
"""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import Iterable

from qcat.diagram import Diagram, DiagramBuilder, Endpoint, NodePort, Wire
from qcat.generators import (
    DOT_KINDS,
    SINGLE_QUDIT_KINDS,
    GeneratorSpec,
    Kind,
    box,
    colors_match,
    is_real_color,
)
from qcat.generators import spec as make_spec
from qcat.rewriting.core import Match, RewriteRule, ScalarFactor
from qcat.tensor_core import as_matrix, dagger, equal_within, from_matrix

logger = logging.getLogger(__name__)

CUPS = frozenset({Kind.CUP, Kind.NORMALIZED_CUP})
CAPS = frozenset({Kind.CAP, Kind.NORMALIZED_CAP})


# -- predicates -----------------------------------------------------------------


def _is(spec: GeneratorSpec, kind: Kind) -> bool:
    return spec.kind is kind and not spec.adjoint


def _in(spec: GeneratorSpec, kinds: Iterable[Kind]) -> bool:
    return spec.kind in kinds and not spec.adjoint


def _is_dot(spec: GeneratorSpec, kind: Kind, uncolored: bool = False) -> bool:
    if spec.kind is not kind or spec.adjoint:
        return False
    return spec.color is None or not uncolored


def _is_square_op(spec: GeneratorSpec) -> bool:
    if spec.kind in SINGLE_QUDIT_KINDS:
        return True
    return spec.kind is Kind.BOX and len(spec.out_dims) == 1 and spec.out_dims == spec.in_dims


def _node_at(end: Endpoint | None) -> int | None:
    return end.node if isinstance(end, NodePort) else None


def _outside(ends: Iterable[Endpoint | None], group: Iterable[int]) -> bool:
    members = set(group)
    for end in ends:
        if end is None:
            return False
        if isinstance(end, NodePort) and end.node in members:
            return False
    return True


def _between(wire: Wire, a: int, b: int) -> bool:
    ends = (wire.source, wire.target)
    if not all(isinstance(e, NodePort) for e in ends):
        return False
    nodes = sorted(e.node for e in ends)  # type: ignore[union-attr]
    return nodes == sorted((a, b))


def _in_port(spec: GeneratorSpec, index: int) -> int:
    return len(spec.out_dims) + index


def _nodes_of(diagram: Diagram, predicate) -> list[int]:
    return [node.id for node in diagram.nodes if predicate(node.spec)]


# -- surgery helpers ------------------------------------------------------------


def _bypass(builder: DiagramBuilder, node_id: int) -> None:
    """Remove a one-in one-out node and join its neighbours."""
    peers = builder.remove_node(node_id)
    builder.connect(peers[1], peers[0])


def _insert_after(builder: DiagramBuilder, end: NodePort, specs: list[GeneratorSpec]) -> None:
    target = builder.detach(end)
    builder.splice(end, target, specs)


def _insert_before(builder: DiagramBuilder, end: NodePort, specs: list[GeneratorSpec]) -> None:
    source = builder.detach(end)
    builder.splice(source, end, specs)


def _fuse(
    builder: DiagramBuilder,
    diagram: Diagram,
    group: tuple[int, ...],
    skip: set[NodePort],
    remove: tuple[int, ...] = (),
    extra_outs: tuple[Endpoint, ...] = (),
    extra_ins: tuple[Endpoint, ...] = (),
) -> int:
    """Replace the dots in ``group`` by one dot carrying all their unskipped legs.

    Outputs keep group order, then ``extra_outs``; likewise for inputs. Legs
    wired among the group are rewired onto the new dot.
    """
    template = diagram.spec(group[0])
    free_outs: list[NodePort] = []
    free_ins: list[NodePort] = []
    for node_id in group:
        spec = diagram.spec(node_id)
        n_out = len(spec.out_dims)
        free_outs += [NodePort(node_id, k) for k in range(n_out) if NodePort(node_id, k) not in skip]
        free_ins += [
            NodePort(node_id, n_out + k)
            for k in range(len(spec.in_dims))
            if NodePort(node_id, n_out + k) not in skip
        ]
    peers = {port: diagram.peer(port) for port in free_outs + free_ins}
    for node_id in group + remove:
        builder.remove_node(node_id)

    n_out = len(free_outs) + len(extra_outs)
    n_in = len(free_ins) + len(extra_ins)
    fused = builder.add_node(replace(template, params=(n_in, n_out), adjoint=False))
    moved = {old: NodePort(fused, k) for k, old in enumerate(free_outs)}
    moved.update({old: NodePort(fused, n_out + k) for k, old in enumerate(free_ins)})

    done: set[NodePort] = set()
    for old in free_outs + free_ins:
        if old in done:
            continue
        peer = peers[old]
        assert peer is not None
        if isinstance(peer, NodePort) and peer in moved:
            done.add(peer)
            peer = moved[peer]
        builder.connect(moved[old], peer)
    for k, end in enumerate(extra_outs):
        builder.connect(NodePort(fused, len(free_outs) + k), end)
    for k, end in enumerate(extra_ins):
        builder.connect(end, NodePort(fused, n_out + len(free_ins) + k))
    return fused


def _half_power(k: int):
    def factor(match: Match) -> ScalarFactor:
        return ScalarFactor.sqrt_dim(match.dim, k)

    return factor


# -- spider laws ----------------------------------------------------------------


def match_spider_copy(diagram: Diagram) -> list[Match]:
    dots = _nodes_of(diagram, lambda s: _is_dot(s, Kind.COPY_DOT))
    matches = []
    for i, a in enumerate(dots):
        spec_a = diagram.spec(a)
        loops = tuple(w.id for w in diagram.wires if _between(w, a, a))
        if loops:
            matches.append(Match("spider-copy", (a,), loops, (spec_a.dim,)))
        for b in dots[i + 1:]:
            spec_b = diagram.spec(b)
            if spec_b.dim != spec_a.dim or not colors_match(spec_a, spec_b):
                continue
            joined = tuple(w.id for w in diagram.wires if _between(w, a, b))
            if joined:
                matches.append(Match("spider-copy", (a, b), joined, (spec_a.dim,)))
    return matches


def rewrite_spider_copy(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    members = set(match.nodes)
    skip: set[NodePort] = set()
    for node_id in match.nodes:
        for port in diagram.ports(node_id):
            peer = diagram.peer(port)
            if isinstance(peer, NodePort) and peer.node in members:
                skip.add(port)
    _fuse(builder, diagram, match.nodes, skip)


def _plus_glue_ok(glue: GeneratorSpec, dot: GeneratorSpec) -> bool:
    if dot.color is None:
        return _is(glue, Kind.NEG)
    if glue.kind is not Kind.BOX or glue.tensor is None:
        return False
    u = as_matrix(dot.color)
    neg = as_matrix(make_spec(Kind.NEG, dot.dim).to_tensor())
    expected = from_matrix(u @ neg @ u.conj().T, (dot.dim,), (dot.dim,))
    return glue.tensor.signature == expected.signature and equal_within(glue.tensor, expected)


def match_spider_plus(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        glue = node.spec
        if not _is_square_op(glue):
            continue
        src = diagram.peer(NodePort(node.id, 1))
        dst = diagram.peer(NodePort(node.id, 0))
        a, b = _node_at(src), _node_at(dst)
        if a is None or b is None or a == node.id or b == node.id:
            continue
        spec_a, spec_b = diagram.spec(a), diagram.spec(b)
        if not (_is_dot(spec_a, Kind.PLUS_DOT) and _is_dot(spec_b, Kind.PLUS_DOT)):
            continue
        if spec_a.dim != spec_b.dim or not colors_match(spec_a, spec_b):
            continue
        if not spec_a.is_output_port(src.port) or spec_b.is_output_port(dst.port):  # type: ignore[union-attr]
            continue
        if not _plus_glue_ok(glue, spec_a):
            continue
        nodes = (a, node.id) if a == b else (a, node.id, b)
        matches.append(Match("spider-plus", nodes, (), (spec_a.dim,), (src.port, dst.port)))  # type: ignore[union-attr]
    return matches


def rewrite_spider_plus(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    out_port, in_port = match.data
    if len(match.nodes) == 2:
        a, glue = match.nodes
        b = a
        group: tuple[int, ...] = (a,)
    else:
        a, glue, b = match.nodes
        group = (a, b)
    _fuse(builder, diagram, group, {NodePort(a, out_port), NodePort(b, in_port)}, remove=(glue,))


# -- pruning --------------------------------------------------------------------


def _match_prune(diagram: Diagram, rule: str, dot_kind: Kind, state_kind: Kind) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        spec = node.spec
        if spec.kind is not state_kind:
            continue
        if state_kind is Kind.BASIS_STATE and spec.params != (0,):
            continue
        peer = diagram.peer(NodePort(node.id, 0))
        x = _node_at(peer)
        if x is None or x == node.id:
            continue
        dot = diagram.spec(x)
        if not _is_dot(dot, dot_kind, uncolored=True):
            continue
        wants_output = spec.adjoint
        if dot.is_output_port(peer.port) != wants_output:  # type: ignore[union-attr]
            continue
        matches.append(Match(rule, (node.id, x), (), (dot.dim,), (peer.port,)))  # type: ignore[union-attr]
    return matches


def match_prune_plus(diagram: Diagram) -> list[Match]:
    return _match_prune(diagram, "prune-plus", Kind.PLUS_DOT, Kind.BASIS_STATE)


def match_prune_copy(diagram: Diagram) -> list[Match]:
    return _match_prune(diagram, "prune-copy", Kind.COPY_DOT, Kind.PLUS_STATE)


def rewrite_prune(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    state_id, dot_id = match.nodes
    _fuse(builder, diagram, (dot_id,), {NodePort(dot_id, match.data[0])}, remove=(state_id,))


# -- compact structure ----------------------------------------------------------


def match_snake(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _in(node.spec, CUPS):
            continue
        u = node.id
        for i in (0, 1):
            peer = diagram.peer(NodePort(u, i))
            c = _node_at(peer)
            if c is None or not _in(diagram.spec(c), CAPS):
                continue
            j = peer.port  # type: ignore[union-attr]
            closed = diagram.peer(NodePort(u, 1 - i)) == NodePort(c, 1 - j)
            if closed and i == 1:
                continue
            normalized = int(node.spec.kind is Kind.NORMALIZED_CUP)
            normalized += int(diagram.spec(c).kind is Kind.NORMALIZED_CAP)
            matches.append(
                Match("snake", (u, c), (), (node.spec.dim,), (i, j, int(closed), normalized))
            )
    return matches


def rewrite_snake(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    u, c = match.nodes
    i, j, closed, _ = match.data
    if closed:
        builder.remove_node(u)
        builder.remove_node(c)
        return
    sink = diagram.peer(NodePort(u, 1 - i))
    source = diagram.peer(NodePort(c, 1 - j))
    builder.remove_node(u)
    builder.remove_node(c)
    builder.connect(source, sink)  # type: ignore[arg-type]


def snake_factor(match: Match) -> ScalarFactor:
    _, _, closed, normalized = match.data
    return ScalarFactor.sqrt_dim(match.dim, (2 if closed else 0) - normalized)


def match_slide(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if _in(node.spec, CUPS):
            peer = diagram.peer(NodePort(node.id, 0))
            f = _node_at(peer)
            if f is not None and f != node.id and _is_square_op(diagram.spec(f)) and peer.port == 1:  # type: ignore[union-attr]
                matches.append(Match("slide", (node.id, f), (), (node.spec.dim,), (0,)))
        elif _in(node.spec, CAPS):
            peer = diagram.peer(NodePort(node.id, 0))
            f = _node_at(peer)
            if f is not None and f != node.id and _is_square_op(diagram.spec(f)) and peer.port == 0:  # type: ignore[union-attr]
                matches.append(Match("slide", (node.id, f), (), (node.spec.dim,), (1,)))
    return matches


def rewrite_slide(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    bend, f = match.nodes
    moved = diagram.spec(f).transpose()
    peers = builder.remove_node(f)
    if match.data == (0,):
        builder.connect(NodePort(bend, 0), peers[0])
        _insert_after(builder, NodePort(bend, 1), [moved])
    else:
        builder.connect(peers[1], NodePort(bend, 0))
        _insert_before(builder, NodePort(bend, 1), [moved])


def match_cup_symmetry(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is(node.spec, Kind.SWAP) or node.spec.params[0] != node.spec.params[1]:
            continue
        feeds = [_node_at(diagram.peer(NodePort(node.id, p))) for p in (2, 3)]
        if feeds[0] is not None and feeds[0] == feeds[1] and _in(diagram.spec(feeds[0]), CUPS):
            matches.append(Match("cup-symmetry", (node.id, feeds[0]), (), (node.spec.dim,), (0,)))
        takes = [_node_at(diagram.peer(NodePort(node.id, p))) for p in (0, 1)]
        if takes[0] is not None and takes[0] == takes[1] and _in(diagram.spec(takes[0]), CAPS):
            matches.append(Match("cup-symmetry", (node.id, takes[0]), (), (node.spec.dim,), (1,)))
    return matches


def rewrite_cup_symmetry(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    swap, bend = match.nodes
    peers = builder.remove_node(swap)
    if match.data == (0,):
        builder.connect(NodePort(bend, 0), peers[0])
        builder.connect(NodePort(bend, 1), peers[1])
    else:
        builder.connect(peers[2], NodePort(bend, 0))
        builder.connect(peers[3], NodePort(bend, 1))


def _is_effect(spec: GeneratorSpec) -> bool:
    if spec.out_dims or len(spec.in_dims) != 1:
        return False
    return spec.kind in (Kind.BASIS_STATE, Kind.PLUS_STATE, Kind.BOX)


def _is_state(spec: GeneratorSpec) -> bool:
    if spec.in_dims or len(spec.out_dims) != 1:
        return False
    return spec.kind in (Kind.BASIS_STATE, Kind.PLUS_STATE, Kind.BOX)


def match_conjugate_state(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if _is(node.spec, Kind.CUP):
            test = _is_effect
        elif _is(node.spec, Kind.CAP):
            test = _is_state
        else:
            continue
        for leg in (0, 1):
            other = _node_at(diagram.peer(NodePort(node.id, leg)))
            if other is not None and other != node.id and test(diagram.spec(other)):
                matches.append(Match("conjugate-state", (node.id, other), (), (node.spec.dim,), (leg,)))
    return matches


def rewrite_conjugate_state(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    bend, end = match.nodes
    (leg,) = match.data
    far = diagram.peer(NodePort(bend, 1 - leg))
    flipped = diagram.spec(end).transpose()
    builder.remove_node(bend)
    builder.remove_node(end)
    new = builder.add_node(flipped)
    builder.connect(NodePort(new, 0), far)  # type: ignore[arg-type]


# -- symmetric dot properties -----------------------------------------------------


def match_dot_bend(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        kind = node.spec.kind
        if not _in(node.spec, (Kind.CUP, Kind.CAP)):
            continue
        for leg in (0, 1):
            peer = diagram.peer(NodePort(node.id, leg))
            x = _node_at(peer)
            if x is None or x == node.id:
                continue
            dot = diagram.spec(x)
            if dot.kind not in DOT_KINDS or dot.adjoint:
                continue
            if dot.is_output_port(peer.port) != (kind is Kind.CAP):  # type: ignore[union-attr]
                continue
            if not is_real_color(dot):
                logger.debug("dot-bend rejected on node %s: color is not real", x)
                continue
            far = diagram.peer(NodePort(node.id, 1 - leg))
            if _node_at(far) == x:
                continue
            matches.append(Match("dot-bend", (node.id, x), (), (dot.dim,), (leg, peer.port)))  # type: ignore[union-attr]
    return matches


def rewrite_dot_bend(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    bend, x = match.nodes
    leg, port = match.data
    far = diagram.peer(NodePort(bend, 1 - leg))
    assert far is not None
    if diagram.spec(bend).kind is Kind.CUP:
        _fuse(builder, diagram, (x,), {NodePort(x, port)}, remove=(bend,), extra_outs=(far,))
    else:
        _fuse(builder, diagram, (x,), {NodePort(x, port)}, remove=(bend,), extra_ins=(far,))


def match_dot_dagger(diagram: Diagram) -> list[Match]:
    return [
        Match("dot-dagger", (node.id,), (), (node.spec.dim,))
        for node in diagram.nodes
        if node.spec.kind in DOT_KINDS and node.spec.adjoint
    ]


def rewrite_dot_dagger(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (x,) = match.nodes
    spec = diagram.spec(x)
    m, n = spec.params
    builder.set_spec(x, replace(spec, params=(n, m), adjoint=False))


def _port_wire_ids(diagram: Diagram, x: int) -> tuple[list[int], list[int]] | None:
    spec = diagram.spec(x)
    outs, ins = [], []
    for port in range(spec.n_ports):
        wire = diagram.wire_at(NodePort(x, port))
        if wire is None or _node_at(wire.other(NodePort(x, port))) == x:
            return None
        (outs if spec.is_output_port(port) else ins).append(wire.id)
    return outs, ins


def match_dot_permute(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if node.spec.kind not in DOT_KINDS or node.spec.adjoint:
            continue
        wire_ids = _port_wire_ids(diagram, node.id)
        if wire_ids is None:
            continue
        outs, ins = wire_ids
        if outs != sorted(outs) or ins != sorted(ins):
            matches.append(Match("dot-permute", (node.id,), tuple(outs + ins), (node.spec.dim,)))
    return matches


def rewrite_dot_permute(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (x,) = match.nodes
    spec = diagram.spec(x)
    n_out = len(spec.out_dims)
    wires = [diagram.wire_at(NodePort(x, p)) for p in range(spec.n_ports)]
    outs = sorted(wires[:n_out], key=lambda w: w.id)  # type: ignore[union-attr]
    ins = sorted(wires[n_out:], key=lambda w: w.id)  # type: ignore[union-attr]
    for wire in outs + ins:
        builder.remove_wire(wire.id)  # type: ignore[union-attr]
    for k, wire in enumerate(outs):
        builder.connect(NodePort(x, k), wire.target)  # type: ignore[union-attr]
    for k, wire in enumerate(ins):
        builder.connect(wire.source, NodePort(x, n_out + k))  # type: ignore[union-attr]


def match_recolor(diagram: Diagram) -> list[Match]:
    return [
        Match("recolor", (node.id,), (), (node.spec.dim,))
        for node in diagram.nodes
        if node.spec.kind in DOT_KINDS and not node.spec.adjoint and node.spec.color is not None
    ]


def rewrite_recolor(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (x,) = match.nodes
    spec = diagram.spec(x)
    assert spec.color is not None
    u = spec.color
    builder.set_spec(x, replace(spec, color=None))
    n_out = len(spec.out_dims)
    for k in range(n_out):
        _insert_after(builder, NodePort(x, k), [box(u, label="U")])
    for k in range(len(spec.in_dims)):
        _insert_before(builder, NodePort(x, n_out + k), [box(dagger(u), label="U†")])


# -- commutation ----------------------------------------------------------------


def _pauli_neighbours(diagram: Diagram, kind: Kind, dot_kind: Kind):
    """Yield (gate, dot, dot port, gate feeds dot) for Pauli gates touching an uncolored dot."""
    for node in diagram.nodes:
        if not _is(node.spec, kind):
            continue
        feeds = diagram.peer(NodePort(node.id, 0))
        takes = diagram.peer(NodePort(node.id, 1))
        for end, into in ((feeds, True), (takes, False)):
            x = _node_at(end)
            if x is None or x == node.id:
                continue
            dot = diagram.spec(x)
            if not _is_dot(dot, dot_kind, uncolored=True):
                continue
            other = takes if into else feeds
            if _node_at(other) == x:
                continue
            yield node.id, x, end.port, into  # type: ignore[union-attr]


def match_commute_z_copy(diagram: Diagram) -> list[Match]:
    matches = []
    for z, x, port, into in _pauli_neighbours(diagram, Kind.ZPOW, Kind.COPY_DOT):
        # the canonical leg is port 0 for any arity
        if port == 0:
            continue
        matches.append(Match("commute-z-copy", (z, x), (), (diagram.spec(x).dim,), (port, int(into))))
    return matches


def rewrite_commute_z_copy(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    z, x = match.nodes
    gate = diagram.spec(z)
    _bypass(builder, z)
    if diagram.spec(x).out_dims:
        _insert_after(builder, NodePort(x, 0), [gate])
    else:
        _insert_before(builder, NodePort(x, 0), [gate])


def match_commute_x_copy(diagram: Diagram) -> list[Match]:
    matches = []
    for g, x, port, into in _pauli_neighbours(diagram, Kind.XPOW, Kind.COPY_DOT):
        dot = diagram.spec(x)
        if into and dot.params[0] == 1:
            matches.append(Match("commute-x-copy", (g, x), (), (dot.dim,), (port,)))
    return matches


def rewrite_commute_x_copy(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    g, x = match.nodes
    gate = diagram.spec(g)
    _bypass(builder, g)
    for k in range(len(diagram.spec(x).out_dims)):
        _insert_after(builder, NodePort(x, k), [gate])


def match_commute_x_plus(diagram: Diagram) -> list[Match]:
    matches = []
    for g, x, port, into in _pauli_neighbours(diagram, Kind.XPOW, Kind.PLUS_DOT):
        dot = diagram.spec(x)
        n_out = len(dot.out_dims)
        if into:
            if n_out == 0 and port == 0:
                continue
        elif port == 0:
            continue
        matches.append(Match("commute-x-plus", (g, x), (), (dot.dim,), (port, int(into))))
    return matches


def rewrite_commute_x_plus(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    g, x = match.nodes
    _, into = match.data
    gate = diagram.spec(g)
    dot = diagram.spec(x)
    _bypass(builder, g)
    if not dot.out_dims:
        _insert_before(builder, NodePort(x, 0), [gate])
    elif into:
        _insert_after(builder, NodePort(x, 0), [replace(gate, params=(-gate.params[0],))])
    else:
        _insert_after(builder, NodePort(x, 0), [gate])


def match_commute_z_plus(diagram: Diagram) -> list[Match]:
    matches = []
    for z, x, port, into in _pauli_neighbours(diagram, Kind.ZPOW, Kind.PLUS_DOT):
        if into:
            matches.append(Match("commute-z-plus", (z, x), (), (diagram.spec(x).dim,), (port,)))
    return matches


def rewrite_commute_z_plus(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    z, x = match.nodes
    (port,) = match.data
    gate = diagram.spec(z)
    inverse = replace(gate, params=(-gate.params[0],))
    dot = diagram.spec(x)
    _bypass(builder, z)
    for k in range(len(dot.out_dims)):
        _insert_after(builder, NodePort(x, k), [inverse])
    for k in range(len(dot.in_dims)):
        other = _in_port(dot, k)
        if other != port:
            _insert_before(builder, NodePort(x, other), [inverse])


# -- dot interactions -------------------------------------------------------------


def _is_nadd(spec: GeneratorSpec, orientation: int | None = None) -> bool:
    return _is(spec, Kind.NADD) and (orientation is None or spec.params == (orientation,))


def match_bialgebra(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is_nadd(node.spec, 0):
            continue
        n1 = node.id
        s = _node_at(diagram.peer(NodePort(n1, 0)))
        if s is None or not _is(diagram.spec(s), Kind.SWAP):
            continue
        if diagram.peer(NodePort(n1, 0)) != NodePort(s, 2) or diagram.peer(NodePort(n1, 1)) != NodePort(s, 3):
            continue
        n2 = _node_at(diagram.peer(NodePort(s, 0)))
        if n2 is None or n2 == n1 or not _is_nadd(diagram.spec(n2), 0):
            continue
        if diagram.peer(NodePort(s, 0)) != NodePort(n2, 2) or diagram.peer(NodePort(s, 1)) != NodePort(n2, 3):
            continue
        group = (n1, s, n2)
        ends = [diagram.peer(NodePort(n1, p)) for p in (2, 3)] + [diagram.peer(NodePort(n2, p)) for p in (0, 1)]
        if _outside(ends, group):
            matches.append(Match("bialgebra", group, (), (node.spec.dim,)))
    return matches


def rewrite_bialgebra(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    n1, s, n2 = match.nodes
    inputs = [diagram.peer(NodePort(n1, p)) for p in (2, 3)]
    outputs = [diagram.peer(NodePort(n2, p)) for p in (0, 1)]
    for node_id in match.nodes:
        builder.remove_node(node_id)
    merged = builder.add_node(make_spec(Kind.NADD, match.dim, (1,)))
    builder.connect(NodePort(merged, 0), outputs[0])  # type: ignore[arg-type]
    builder.connect(NodePort(merged, 1), outputs[1])  # type: ignore[arg-type]
    builder.connect(inputs[0], NodePort(merged, 2))  # type: ignore[arg-type]
    builder.connect(inputs[1], NodePort(merged, 3))  # type: ignore[arg-type]


def _is_copy_12(spec: GeneratorSpec) -> bool:
    return _is_dot(spec, Kind.COPY_DOT, uncolored=True) and spec.params == (1, 2)


def _is_plus_21(spec: GeneratorSpec) -> bool:
    return _is_dot(spec, Kind.PLUS_DOT, uncolored=True) and spec.params == (2, 1)


def match_dot_bialgebra(diagram: Diagram) -> list[Match]:
    copies = _nodes_of(diagram, _is_copy_12)
    matches = []
    for i, c1 in enumerate(copies):
        for c2 in copies[i + 1:]:
            if diagram.spec(c1).dim != diagram.spec(c2).dim:
                continue
            targets = []
            for c in (c1, c2):
                hit = [_node_at(diagram.peer(NodePort(c, k))) for k in (0, 1)]
                targets.append(hit)
            pluses = set(targets[0])
            if None in pluses or len(pluses) != 2 or set(targets[1]) != pluses:
                continue
            if not all(_is_plus_21(diagram.spec(p)) for p in pluses):  # type: ignore[arg-type]
                continue
            p1, p2 = sorted(pluses)  # type: ignore[type-var]
            group = (c1, c2, p1, p2)
            ends = [diagram.peer(NodePort(c, 2)) for c in (c1, c2)] + [diagram.peer(NodePort(p, 0)) for p in (p1, p2)]
            if _outside(ends, group):
                matches.append(Match("dot-bialgebra", group, (), (diagram.spec(c1).dim,)))
    return matches


def rewrite_dot_bialgebra(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    c1, c2, p1, p2 = match.nodes
    sources = [diagram.peer(NodePort(c, 2)) for c in (c1, c2)]
    sinks = [diagram.peer(NodePort(p, 0)) for p in (p1, p2)]
    for node_id in match.nodes:
        builder.remove_node(node_id)
    plus = builder.add_node(make_spec(Kind.PLUS_DOT, match.dim, (2, 1)))
    copy = builder.add_node(make_spec(Kind.COPY_DOT, match.dim, (1, 2)))
    builder.connect(sources[0], NodePort(plus, 1))  # type: ignore[arg-type]
    builder.connect(sources[1], NodePort(plus, 2))  # type: ignore[arg-type]
    builder.connect(NodePort(plus, 0), NodePort(copy, 2))
    builder.connect(NodePort(copy, 0), sinks[0])  # type: ignore[arg-type]
    builder.connect(NodePort(copy, 1), sinks[1])  # type: ignore[arg-type]


def match_hopf(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is(node.spec, Kind.NEG):
            continue
        src = diagram.peer(NodePort(node.id, 1))
        dst = diagram.peer(NodePort(node.id, 0))
        c, p = _node_at(src), _node_at(dst)
        if c is None or p is None or c == p:
            continue
        if not (_is_copy_12(diagram.spec(c)) and _is_plus_21(diagram.spec(p))):
            continue
        if src.port not in (0, 1):  # type: ignore[union-attr]
            continue
        other_in = 3 - dst.port  # type: ignore[union-attr]
        if diagram.peer(NodePort(c, 1 - src.port)) != NodePort(p, other_in):  # type: ignore[union-attr]
            continue
        group = (c, node.id, p)
        if _outside([diagram.peer(NodePort(c, 2)), diagram.peer(NodePort(p, 0))], group):
            matches.append(Match("hopf", group, (), (node.spec.dim,)))
    return matches


def rewrite_hopf(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    c, _, p = match.nodes
    source = diagram.peer(NodePort(c, 2))
    sink = diagram.peer(NodePort(p, 0))
    for node_id in match.nodes:
        builder.remove_node(node_id)
    effect = builder.add_node(make_spec(Kind.PLUS_STATE, match.dim, adjoint=True))
    zero = builder.add_node(make_spec(Kind.BASIS_STATE, match.dim, (0,)))
    builder.connect(source, NodePort(effect, 0))  # type: ignore[arg-type]
    builder.connect(NodePort(zero, 0), sink)  # type: ignore[arg-type]


def match_nadd_split(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is_nadd(node.spec):
            continue
        ends = [diagram.peer(NodePort(node.id, p)) for p in range(4)]
        if _outside(ends, (node.id,)):
            matches.append(Match("nadd-split", (node.id,), (), (node.spec.dim,), node.spec.params))
    return matches


def rewrite_nadd_split(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (n,) = match.nodes
    (orientation,) = match.data
    peers = builder.remove_node(n)
    control, target = (0, 1) if orientation == 0 else (1, 0)
    copy = builder.add_node(make_spec(Kind.COPY_DOT, match.dim, (1, 2)))
    plus = builder.add_node(make_spec(Kind.PLUS_DOT, match.dim, (2, 1)))
    builder.connect(peers[2 + control], NodePort(copy, 2))
    builder.connect(NodePort(copy, 0), peers[control])
    builder.connect(NodePort(copy, 1), NodePort(plus, 1))
    builder.connect(peers[2 + target], NodePort(plus, 2))
    builder.connect(NodePort(plus, 0), peers[target])


def match_nadd_fuse(diagram: Diagram) -> list[Match]:
    copies = _nodes_of(diagram, _is_copy_12)
    pluses = _nodes_of(diagram, _is_plus_21)
    matches = []
    for c in copies:
        for p in pluses:
            if diagram.spec(c).dim != diagram.spec(p).dim:
                continue
            joined = [w for w in diagram.wires if _between(w, c, p)]
            if len(joined) != 1:
                continue
            wire = joined[0]
            if _node_at(wire.source) != c:
                continue
            group = (c, p)
            ends = [diagram.peer(NodePort(c, k)) for k in range(3)] + [diagram.peer(NodePort(p, k)) for k in range(3)]
            ends = [e for e in ends if e not in (wire.source, wire.target)]
            if _outside(ends, group):
                ports = (wire.source.port, wire.target.port)  # type: ignore[union-attr]
                matches.append(Match("nadd-fuse", group, (wire.id,), (diagram.spec(c).dim,), ports))
    return matches


def rewrite_nadd_fuse(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    c, p = match.nodes
    copy_port, plus_port = match.data
    control_in = diagram.peer(NodePort(c, 2))
    control_out = diagram.peer(NodePort(c, 1 - copy_port))
    target_in = diagram.peer(NodePort(p, 3 - plus_port))
    target_out = diagram.peer(NodePort(p, 0))
    builder.remove_node(c)
    builder.remove_node(p)
    nadd = builder.add_node(make_spec(Kind.NADD, match.dim, (0,)))
    builder.connect(control_in, NodePort(nadd, 2))  # type: ignore[arg-type]
    builder.connect(target_in, NodePort(nadd, 3))  # type: ignore[arg-type]
    builder.connect(NodePort(nadd, 0), control_out)  # type: ignore[arg-type]
    builder.connect(NodePort(nadd, 1), target_out)  # type: ignore[arg-type]


def match_nadd_elim(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is_nadd(node.spec):
            continue
        n2 = _node_at(diagram.peer(NodePort(node.id, 0)))
        if n2 is None or n2 == node.id or diagram.spec(n2) != node.spec:
            continue
        if (
            diagram.peer(NodePort(node.id, 0)) != NodePort(n2, 2)
            or diagram.peer(NodePort(node.id, 1)) != NodePort(n2, 3)
        ):
            continue
        group = (node.id, n2)
        ends = [diagram.peer(NodePort(node.id, p)) for p in (2, 3)] + [diagram.peer(NodePort(n2, p)) for p in (0, 1)]
        if _outside(ends, group):
            matches.append(Match("nadd-elim", group, (), (node.spec.dim,)))
    return matches


def rewrite_nadd_elim(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    n1, n2 = match.nodes
    sources = [diagram.peer(NodePort(n1, p)) for p in (2, 3)]
    sinks = [diagram.peer(NodePort(n2, p)) for p in (0, 1)]
    builder.remove_node(n1)
    builder.remove_node(n2)
    for source, sink in zip(sources, sinks):
        builder.connect(source, sink)  # type: ignore[arg-type]


# -- gate identities --------------------------------------------------------------


def match_add_to_nadd(diagram: Diagram) -> list[Match]:
    return [
        Match("add-to-nadd", (node.id,), (), (node.spec.dim,), node.spec.params)
        for node in diagram.nodes
        if _is(node.spec, Kind.ADD)
    ]


def rewrite_add_to_nadd(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (n,) = match.nodes
    (orientation,) = match.data
    builder.set_spec(n, make_spec(Kind.NADD, match.dim, (orientation,)))
    target = 1 if orientation == 0 else 0
    _insert_after(builder, NodePort(n, target), [make_spec(Kind.NEG, match.dim)])


def match_neg_as_h2(diagram: Diagram) -> list[Match]:
    return [
        Match("neg-as-h2", (node.id,), (), (node.spec.dim,))
        for node in diagram.nodes
        if _is(node.spec, Kind.NEG)
    ]


def rewrite_neg_as_h2(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (g,) = match.nodes
    h = make_spec(Kind.H, match.dim)
    builder.set_spec(g, h)
    _insert_after(builder, NodePort(g, 0), [h])


def _chains(diagram: Diagram, rule: str, predicate, length: int) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not predicate(node.spec):
            continue
        chain = [node.id]
        while len(chain) < length:
            nxt_end = diagram.peer(NodePort(chain[-1], 0))
            nxt = _node_at(nxt_end)
            if nxt is None or nxt in chain or not predicate(diagram.spec(nxt)) or nxt_end.port != 1:  # type: ignore[union-attr]
                break
            chain.append(nxt)
        if len(chain) != length:
            continue
        ends = [diagram.peer(NodePort(chain[0], 1)), diagram.peer(NodePort(chain[-1], 0))]
        if _outside(ends, chain):
            matches.append(Match(rule, tuple(chain), (), (node.spec.dim,)))
    return matches


def match_h4_elim(diagram: Diagram) -> list[Match]:
    return _chains(diagram, "h4-elim", lambda s: _is(s, Kind.H), 4)


def match_neg_elim(diagram: Diagram) -> list[Match]:
    return _chains(diagram, "neg-elim", lambda s: _is(s, Kind.NEG), 2)


def rewrite_chain_to_wire(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    source = diagram.peer(NodePort(match.nodes[0], 1))
    sink = diagram.peer(NodePort(match.nodes[-1], 0))
    for node_id in match.nodes:
        builder.remove_node(node_id)
    builder.connect(source, sink)  # type: ignore[arg-type]


def match_dot_identity(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        spec = node.spec
        if spec.kind not in DOT_KINDS or spec.adjoint or spec.params != (1, 1):
            continue
        if spec.kind is Kind.PLUS_DOT and spec.color is not None:
            continue
        ends = [diagram.peer(NodePort(node.id, p)) for p in (0, 1)]
        if _outside(ends, (node.id,)):
            matches.append(Match("dot-identity", (node.id,), (), (spec.dim,)))
    return matches


def rewrite_dot_identity(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (x,) = match.nodes
    if diagram.spec(x).kind is Kind.COPY_DOT:
        _bypass(builder, x)
    else:
        builder.set_spec(x, make_spec(Kind.NEG, match.dim))


def match_plus_to_copy(diagram: Diagram) -> list[Match]:
    return [
        Match("plus-to-copy", (node.id,), (), (node.spec.dim,))
        for node in diagram.nodes
        if _is_dot(node.spec, Kind.PLUS_DOT, uncolored=True)
    ]


def rewrite_plus_to_copy(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    (x,) = match.nodes
    spec = diagram.spec(x)
    builder.set_spec(x, replace(spec, kind=Kind.COPY_DOT))
    h = make_spec(Kind.H, match.dim)
    n_out = len(spec.out_dims)
    for k in range(n_out):
        _insert_after(builder, NodePort(x, k), [h])
    for k in range(len(spec.in_dims)):
        _insert_before(builder, NodePort(x, n_out + k), [h])


def match_h_zero_to_plus(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        if not _is(node.spec, Kind.BASIS_STATE) or node.spec.params != (0,):
            continue
        peer = diagram.peer(NodePort(node.id, 0))
        h = _node_at(peer)
        if h is None or not _is(diagram.spec(h), Kind.H):
            continue
        if _outside([diagram.peer(NodePort(h, 0))], (node.id, h)):
            matches.append(Match("h-zero-to-plus", (node.id, h), (), (node.spec.dim,)))
    return matches


def rewrite_h_zero_to_plus(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    s, h = match.nodes
    sink = diagram.peer(NodePort(h, 0))
    builder.remove_node(s)
    builder.remove_node(h)
    plus = builder.add_node(make_spec(Kind.PLUS_STATE, match.dim))
    builder.connect(NodePort(plus, 0), sink)  # type: ignore[arg-type]


def _pauli_exponent(spec: GeneratorSpec) -> int:
    (power,) = spec.params
    return (-power if spec.adjoint else power) % spec.dim


def match_pauli_fuse(diagram: Diagram) -> list[Match]:
    matches = []
    for node in diagram.nodes:
        spec = node.spec
        if spec.kind not in (Kind.ZPOW, Kind.XPOW):
            continue
        ends = [diagram.peer(NodePort(node.id, p)) for p in (0, 1)]
        if _pauli_exponent(spec) == 0:
            if _outside(ends, (node.id,)):
                matches.append(Match("pauli-fuse", (node.id,), (), (spec.dim,), (1,)))
            continue
        nxt = _node_at(ends[0])
        if nxt is None or nxt == node.id or diagram.spec(nxt).kind is not spec.kind:
            continue
        if _pauli_exponent(diagram.spec(nxt)) == 0:
            continue
        tail = diagram.peer(NodePort(nxt, 0))
        if _outside([ends[1], tail], (node.id, nxt)):
            matches.append(Match("pauli-fuse", (node.id, nxt), (), (spec.dim,), (0,)))
    return matches


def rewrite_pauli_fuse(builder: DiagramBuilder, diagram: Diagram, match: Match) -> None:
    if match.data == (1,):
        _bypass(builder, match.nodes[0])
        return
    first, second = match.nodes
    spec = diagram.spec(first)
    exponent = (_pauli_exponent(spec) + _pauli_exponent(diagram.spec(second))) % spec.dim
    if exponent == 0:
        rewrite_chain_to_wire(builder, diagram, match)
        return
    builder.set_spec(first, replace(spec, params=(exponent,), adjoint=False))
    sink = diagram.peer(NodePort(second, 0))
    builder.remove_node(second)
    builder.connect(NodePort(first, 0), sink)  # type: ignore[arg-type]


# -- catalog ----------------------------------------------------------------------


def builtin_rules() -> list[RewriteRule]:
    return [
        RewriteRule("spider-copy", "connected copy dots of one color fuse", match_spider_copy, rewrite_spider_copy),
        RewriteRule("spider-plus", "plus dots glued through NEG fuse", match_spider_plus, rewrite_spider_plus),
        RewriteRule("prune-plus", "|0> deletes a plus-dot leg", match_prune_plus, rewrite_prune, _half_power(-1)),
        RewriteRule("prune-copy", "|+> deletes a copy-dot leg", match_prune_copy, rewrite_prune, _half_power(-1)),
        RewriteRule("snake", "cup and cap cancel", match_snake, rewrite_snake, snake_factor),
        RewriteRule("slide", "an operator slides around a bend as its transpose", match_slide, rewrite_slide),
        RewriteRule(
            "cup-symmetry", "swapping the legs of a cup or cap is trivial", match_cup_symmetry, rewrite_cup_symmetry
        ),
        RewriteRule(
            "conjugate-state", "a bent effect is the transposed state", match_conjugate_state, rewrite_conjugate_state
        ),
        RewriteRule("dot-bend", "cups and caps turn dot inputs into outputs", match_dot_bend, rewrite_dot_bend),
        RewriteRule("dot-dagger", "the dagger of a dot swaps its arity", match_dot_dagger, rewrite_dot_dagger),
        RewriteRule("dot-permute", "dots are invariant under leg permutations", match_dot_permute, rewrite_dot_permute),
        RewriteRule("recolor", "a colored dot is a conjugated plain dot", match_recolor, rewrite_recolor),
        RewriteRule("commute-z-copy", "Z commutes through a copy dot", match_commute_z_copy, rewrite_commute_z_copy),
        RewriteRule("commute-x-copy", "X is copied by a copy dot", match_commute_x_copy, rewrite_commute_x_copy),
        RewriteRule("commute-x-plus", "X commutes through a plus dot", match_commute_x_plus, rewrite_commute_x_plus),
        RewriteRule("commute-z-plus", "Z is copied by a plus dot", match_commute_z_plus, rewrite_commute_z_plus),
        RewriteRule("bialgebra", "NADD SWAP NADD is an inverted NADD", match_bialgebra, rewrite_bialgebra),
        RewriteRule(
            "dot-bialgebra",
            "copy and plus dots pass through each other",
            match_dot_bialgebra,
            rewrite_dot_bialgebra,
            _half_power(-1),
        ),
        RewriteRule("hopf", "NEG is the antipode of copy and plus", match_hopf, rewrite_hopf),
        RewriteRule(
            "nadd-split", "NADD is a copy dot feeding a plus dot", match_nadd_split, rewrite_nadd_split, _half_power(1)
        ),
        RewriteRule(
            "nadd-fuse", "a copy dot feeding a plus dot is NADD", match_nadd_fuse, rewrite_nadd_fuse, _half_power(-1)
        ),
        RewriteRule("nadd-elim", "NADD is self-inverse", match_nadd_elim, rewrite_nadd_elim),
        RewriteRule("add-to-nadd", "ADD is NADD followed by NEG on the target", match_add_to_nadd, rewrite_add_to_nadd),
        RewriteRule("neg-as-h2", "NEG is H squared", match_neg_as_h2, rewrite_neg_as_h2),
        RewriteRule("h4-elim", "H to the fourth is the identity", match_h4_elim, rewrite_chain_to_wire),
        RewriteRule("neg-elim", "NEG squared is the identity", match_neg_elim, rewrite_chain_to_wire),
        RewriteRule("dot-identity", "one-in one-out dots are wires or NEG", match_dot_identity, rewrite_dot_identity),
        RewriteRule(
            "plus-to-copy", "a plus dot is a copy dot in the Fourier basis", match_plus_to_copy, rewrite_plus_to_copy
        ),
        RewriteRule("h-zero-to-plus", "H|0> is |+>", match_h_zero_to_plus, rewrite_h_zero_to_plus),
        RewriteRule("pauli-fuse", "adjacent Z or X powers add", match_pauli_fuse, rewrite_pauli_fuse),
    ]


def rule_registry() -> dict[str, RewriteRule]:
    return {rule.name: rule for rule in builtin_rules()}


