"""Random diagrams that contain a given rule's pattern, used to certify the catalog."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qcat.diagram import Diagram, DiagramBuilder, NodePort
from qcat.generators import GeneratorSpec, Kind, box
from qcat.generators import spec as make_spec
from qcat.rewriting.core import RewriteError
from qcat.tensor_core import ComplexTensor, as_matrix, from_matrix

MAX_FREE_LEGS = 4


def random_unitary(d: int, rng: np.random.Generator, real: bool = False) -> ComplexTensor:
    """Haar-ish unitary from the QR decomposition of a Gaussian matrix."""
    z = rng.normal(size=(d, d))
    if not real:
        z = z + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return from_matrix(q * phases, (d,), (d,))


def random_operator(d: int, rng: np.random.Generator) -> ComplexTensor:
    matrix = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return from_matrix(matrix, (d,), (d,))


@dataclass
class _Host:
    d: int
    rng: np.random.Generator
    builder: DiagramBuilder = field(default_factory=DiagramBuilder)
    created: list[int] = field(default_factory=list)
    pad: bool = True

    def add(self, kind: Kind, params: tuple[int, ...] = (), **extra: object) -> int:
        return self.add_spec(make_spec(kind, self.d, params, **extra))

    def add_spec(self, spec: GeneratorSpec) -> int:
        node_id = self.builder.add_node(spec)
        self.created.append(node_id)
        return node_id

    def wire(self, source: NodePort, target: NodePort) -> None:
        self.builder.connect(source, target)

    def flip(self) -> bool:
        return bool(self.rng.integers(0, 2))

    def pick(self, options):
        return options[int(self.rng.integers(0, len(options)))]

    def color(self, real: bool = False) -> ComplexTensor | None:
        return random_unitary(self.d, self.rng, real=real) if self.flip() else None

    def padding(self) -> list[GeneratorSpec]:
        if not self.pad or not self.flip():
            return []
        if self.flip():
            return [box(random_unitary(self.d, self.rng), label="pad")]
        kind = self.pick([Kind.H, Kind.ZPOW, Kind.XPOW])
        params = () if kind is Kind.H else (int(self.rng.integers(0, self.d)),)
        return [make_spec(kind, self.d, params, adjoint=True)]

    def close(self) -> Diagram:
        """Send every unwired port to the boundary.

        Legs are sometimes padded, bent to the other side of the boundary
        with a cup or cap, or traced against a leg of the opposite direction.
        """
        b = self.builder
        d = self.d
        loose = [
            NodePort(node_id, port)
            for node_id in self.created
            for port in range(b.spec(node_id).n_ports)
            if b.wire_at(NodePort(node_id, port)) is None
        ]
        outs = [end for end in loose if b.spec(end.node).is_output_port(end.port)]
        ins = [end for end in loose if not b.spec(end.node).is_output_port(end.port)]
        if self.pad and outs and ins and self.rng.random() < 0.2:
            source = outs.pop(int(self.rng.integers(0, len(outs))))
            sink = ins.pop(int(self.rng.integers(0, len(ins))))
            cap = b.add_node(make_spec(Kind.CAP, d))
            cup = b.add_node(make_spec(Kind.CUP, d))
            b.splice(source, NodePort(cap, 0), self.padding())
            b.connect(NodePort(cup, 1), NodePort(cap, 1))
            b.connect(NodePort(cup, 0), sink)
        for end in outs:
            if self.pad and self.rng.random() < 0.15:
                cap = b.add_node(make_spec(Kind.CAP, d))
                b.splice(end, NodePort(cap, 0), self.padding())
                b.connect(b.add_input(d), NodePort(cap, 1))
            else:
                b.splice(end, b.add_output(d), self.padding())
        for end in ins:
            if self.pad and self.rng.random() < 0.15:
                cup = b.add_node(make_spec(Kind.CUP, d))
                b.splice(NodePort(cup, 1), end, self.padding())
                b.connect(NodePort(cup, 0), b.add_output(d))
            else:
                b.splice(b.add_input(d), end, self.padding())
        if len(loose) < MAX_FREE_LEGS + 1 and self.rng.random() < 0.3:
            b.connect(b.add_input(d), b.add_output(d))
        return b.build()


def _small_arity(host: _Host, minimum_legs: int = 0, maximum_legs: int = MAX_FREE_LEGS) -> tuple[int, int]:
    while True:
        m = int(host.rng.integers(0, 3))
        n = int(host.rng.integers(0, 3))
        if minimum_legs <= m + n <= maximum_legs:
            return m, n


# -- spider laws ----------------------------------------------------------------


def _spider_copy(host: _Host) -> None:
    joined = int(host.rng.integers(1, 3))
    color = host.color()
    m1, x1, y2, n2 = (int(v) for v in host.rng.integers(0, 2, size=4))
    a = host.add(Kind.COPY_DOT, (m1, joined + x1), color=color)
    b = host.add(Kind.COPY_DOT, (joined + y2, n2), color=color)
    for k in range(joined):
        host.wire(NodePort(a, k), NodePort(b, n2 + k))


def _spider_plus(host: _Host) -> None:
    colored = host.flip()
    m1, x1, y2, n2 = (int(v) for v in host.rng.integers(0, 2, size=4))
    if colored:
        u = random_unitary(host.d, host.rng)
        a = host.add(Kind.PLUS_DOT, (m1, 1 + x1), color=u)
        b = host.add(Kind.PLUS_DOT, (1 + y2, n2), color=u)
        um = as_matrix(u)
        neg = as_matrix(make_spec(Kind.NEG, host.d).to_tensor())
        glue = host.add_spec(box(from_matrix(um @ neg @ um.conj().T, (host.d,), (host.d,)), label="G"))
    else:
        a = host.add(Kind.PLUS_DOT, (m1, 1 + x1))
        b = host.add(Kind.PLUS_DOT, (1 + y2, n2))
        glue = host.add(Kind.NEG)
    host.wire(NodePort(a, 0), NodePort(glue, 1))
    host.wire(NodePort(glue, 0), NodePort(b, n2))


def _prune(host: _Host, dot_kind: Kind, state_kind: Kind) -> None:
    params = (0,) if state_kind is Kind.BASIS_STATE else ()
    on_output = host.flip()
    m, n = _small_arity(host, 0, MAX_FREE_LEGS)
    if on_output:
        x = host.add(dot_kind, (m, n + 1))
        s = host.add(state_kind, params, adjoint=True)
        host.wire(NodePort(x, int(host.rng.integers(0, n + 1))), NodePort(s, 0))
    else:
        x = host.add(dot_kind, (m + 1, n))
        s = host.add(state_kind, params)
        host.wire(NodePort(s, 0), NodePort(x, n + int(host.rng.integers(0, m + 1))))


# -- compact structure ----------------------------------------------------------


def _snake(host: _Host) -> None:
    u = host.add(host.pick([Kind.CUP, Kind.NORMALIZED_CUP]))
    c = host.add(host.pick([Kind.CAP, Kind.NORMALIZED_CAP]))
    i, j = int(host.rng.integers(0, 2)), int(host.rng.integers(0, 2))
    host.wire(NodePort(u, i), NodePort(c, j))
    if host.rng.random() < 0.25:
        host.wire(NodePort(u, 1 - i), NodePort(c, 1 - j))


def _movable(host: _Host) -> GeneratorSpec:
    kind = host.pick([Kind.H, Kind.NEG, Kind.ZPOW, Kind.XPOW, Kind.BOX])
    if kind is Kind.BOX:
        return box(random_operator(host.d, host.rng), label="f")
    if kind in (Kind.ZPOW, Kind.XPOW):
        return make_spec(kind, host.d, (int(host.rng.integers(1, host.d)),), adjoint=host.flip())
    return make_spec(kind, host.d, adjoint=host.flip())


def _slide(host: _Host) -> None:
    f = host.add_spec(_movable(host))
    if host.flip():
        u = host.add(host.pick([Kind.CUP, Kind.NORMALIZED_CUP]))
        host.wire(NodePort(u, 0), NodePort(f, 1))
    else:
        c = host.add(host.pick([Kind.CAP, Kind.NORMALIZED_CAP]))
        host.wire(NodePort(f, 0), NodePort(c, 0))


def _cup_symmetry(host: _Host) -> None:
    s = host.add(Kind.SWAP)
    if host.flip():
        u = host.add(host.pick([Kind.CUP, Kind.NORMALIZED_CUP]))
        host.wire(NodePort(u, 0), NodePort(s, 2))
        host.wire(NodePort(u, 1), NodePort(s, 3))
    else:
        c = host.add(host.pick([Kind.CAP, Kind.NORMALIZED_CAP]))
        host.wire(NodePort(s, 0), NodePort(c, 0))
        host.wire(NodePort(s, 1), NodePort(c, 1))


def _conjugate_state(host: _Host) -> None:
    d = host.d
    leg = int(host.rng.integers(0, 2))
    choice = host.pick(["basis", "plus", "box"])
    as_effect = host.flip()
    if choice == "box":
        vector = host.rng.normal(size=d) + 1j * host.rng.normal(size=d)
        tensor = from_matrix(vector, (), (d,)) if as_effect else from_matrix(vector, (d,), ())
        end = host.add_spec(box(tensor, label="v"))
    elif choice == "basis":
        end = host.add(Kind.BASIS_STATE, (int(host.rng.integers(0, d)),), adjoint=as_effect)
    else:
        end = host.add(Kind.PLUS_STATE, adjoint=as_effect)
    if as_effect:
        u = host.add(Kind.CUP)
        host.wire(NodePort(u, leg), NodePort(end, 0))
    else:
        c = host.add(Kind.CAP)
        host.wire(NodePort(end, 0), NodePort(c, leg))


# -- dot properties -------------------------------------------------------------


def _dot_bend(host: _Host) -> None:
    kind = host.pick([Kind.COPY_DOT, Kind.PLUS_DOT])
    color = host.color(real=True)
    m, n = _small_arity(host, 0, MAX_FREE_LEGS - 1)
    leg = int(host.rng.integers(0, 2))
    if host.flip():
        x = host.add(kind, (m + 1, n), color=color)
        u = host.add(Kind.CUP)
        host.wire(NodePort(u, leg), NodePort(x, n + int(host.rng.integers(0, m + 1))))
    else:
        x = host.add(kind, (m, n + 1), color=color)
        c = host.add(Kind.CAP)
        host.wire(NodePort(x, int(host.rng.integers(0, n + 1))), NodePort(c, leg))


def _dot_dagger(host: _Host) -> None:
    m, n = _small_arity(host, 1)
    host.add(host.pick([Kind.COPY_DOT, Kind.PLUS_DOT]), (m, n), adjoint=True, color=host.color())


def _dot_permute(host: _Host) -> None:
    host.pad = False
    d = host.d
    kind = host.pick([Kind.COPY_DOT, Kind.PLUS_DOT])
    m, n = host.pick([(0, 2), (1, 2), (2, 1), (2, 0), (2, 2), (0, 3), (1, 3)])
    x = host.add(kind, (m, n), color=host.color())
    b = host.builder
    outputs = [b.add_output(d) for _ in range(n)]
    inputs = [b.add_input(d) for _ in range(m)]
    for k in reversed(range(n)):
        b.connect(NodePort(x, k), outputs[k])
    for k in reversed(range(m)):
        b.connect(inputs[k], NodePort(x, n + k))


def _recolor(host: _Host) -> None:
    m, n = _small_arity(host, 1)
    host.add(host.pick([Kind.COPY_DOT, Kind.PLUS_DOT]), (m, n), color=random_unitary(host.d, host.rng))


def _exponent(host: _Host) -> int:
    return int(host.rng.integers(1, host.d))


def _attach(host: _Host, gate: int, dot: int, port: int, dot_spec_outs: int) -> None:
    if port < dot_spec_outs:
        host.wire(NodePort(dot, port), NodePort(gate, 1))
    else:
        host.wire(NodePort(gate, 0), NodePort(dot, port))


def _commute_z_copy(host: _Host) -> None:
    m, n = host.pick([(1, 1), (1, 2), (2, 1), (2, 0), (0, 2), (3, 0), (1, 3)])
    x = host.add(Kind.COPY_DOT, (m, n))
    z = host.add(Kind.ZPOW, (_exponent(host),))
    _attach(host, z, x, int(host.rng.integers(1, m + n)), n)


def _commute_x_copy(host: _Host) -> None:
    n = int(host.rng.integers(0, 4))
    x = host.add(Kind.COPY_DOT, (1, n))
    g = host.add(Kind.XPOW, (_exponent(host),))
    host.wire(NodePort(g, 0), NodePort(x, n))


def _commute_x_plus(host: _Host) -> None:
    m, n = host.pick([(1, 1), (2, 1), (1, 2), (2, 0), (0, 2), (2, 2), (3, 0)])
    x = host.add(Kind.PLUS_DOT, (m, n))
    g = host.add(Kind.XPOW, (_exponent(host),))
    if n == 0:
        port = int(host.rng.integers(1, m))
    elif m == 0:
        port = int(host.rng.integers(1, n))
    else:
        port = host.pick([p for p in range(m + n) if p != 0])
    _attach(host, g, x, port, n)


def _commute_z_plus(host: _Host) -> None:
    m, n = host.pick([(1, 1), (2, 1), (1, 2), (2, 0), (3, 0), (2, 2)])
    x = host.add(Kind.PLUS_DOT, (m, n))
    z = host.add(Kind.ZPOW, (_exponent(host),))
    host.wire(NodePort(z, 0), NodePort(x, n + int(host.rng.integers(0, m))))


# -- dot interactions -------------------------------------------------------------


def _bialgebra(host: _Host) -> None:
    n1 = host.add(Kind.NADD, (0,))
    s = host.add(Kind.SWAP)
    n2 = host.add(Kind.NADD, (0,))
    host.wire(NodePort(n1, 0), NodePort(s, 2))
    host.wire(NodePort(n1, 1), NodePort(s, 3))
    host.wire(NodePort(s, 0), NodePort(n2, 2))
    host.wire(NodePort(s, 1), NodePort(n2, 3))


def _dot_bialgebra(host: _Host) -> None:
    c1 = host.add(Kind.COPY_DOT, (1, 2))
    c2 = host.add(Kind.COPY_DOT, (1, 2))
    p1 = host.add(Kind.PLUS_DOT, (2, 1))
    p2 = host.add(Kind.PLUS_DOT, (2, 1))
    first, second = (p1, p2) if host.flip() else (p2, p1)
    slot = int(host.rng.integers(1, 3))
    host.wire(NodePort(c1, 0), NodePort(first, slot))
    host.wire(NodePort(c1, 1), NodePort(second, slot))
    host.wire(NodePort(c2, 0), NodePort(first, 3 - slot))
    host.wire(NodePort(c2, 1), NodePort(second, 3 - slot))


def _hopf(host: _Host) -> None:
    c = host.add(Kind.COPY_DOT, (1, 2))
    g = host.add(Kind.NEG)
    p = host.add(Kind.PLUS_DOT, (2, 1))
    i, j = int(host.rng.integers(0, 2)), int(host.rng.integers(1, 3))
    host.wire(NodePort(c, i), NodePort(p, j))
    host.wire(NodePort(c, 1 - i), NodePort(g, 1))
    host.wire(NodePort(g, 0), NodePort(p, 3 - j))


def _nadd_split(host: _Host) -> None:
    host.add(Kind.NADD, (int(host.rng.integers(0, 2)),))


def _nadd_fuse(host: _Host) -> None:
    c = host.add(Kind.COPY_DOT, (1, 2))
    p = host.add(Kind.PLUS_DOT, (2, 1))
    host.wire(NodePort(c, int(host.rng.integers(0, 2))), NodePort(p, int(host.rng.integers(1, 3))))


def _nadd_elim(host: _Host) -> None:
    orientation = int(host.rng.integers(0, 2))
    n1 = host.add(Kind.NADD, (orientation,))
    n2 = host.add(Kind.NADD, (orientation,))
    host.wire(NodePort(n1, 0), NodePort(n2, 2))
    host.wire(NodePort(n1, 1), NodePort(n2, 3))


# -- gate identities --------------------------------------------------------------


def _add(host: _Host) -> None:
    host.add(Kind.ADD, (int(host.rng.integers(0, 2)),))


def _neg(host: _Host) -> None:
    host.add(Kind.NEG)


def _series(kind: Kind, count: int) -> Callable[[_Host], None]:
    def build(host: _Host) -> None:
        ids = [host.add(kind) for _ in range(count)]
        for first, second in zip(ids, ids[1:]):
            host.wire(NodePort(first, 0), NodePort(second, 1))

    return build


def _dot_identity(host: _Host) -> None:
    if host.flip():
        host.add(Kind.COPY_DOT, (1, 1), color=host.color())
    else:
        host.add(Kind.PLUS_DOT, (1, 1))


def _plus_to_copy(host: _Host) -> None:
    host.add(Kind.PLUS_DOT, _small_arity(host, 1, 3))


def _h_zero_to_plus(host: _Host) -> None:
    s = host.add(Kind.BASIS_STATE, (0,))
    h = host.add(Kind.H)
    host.wire(NodePort(s, 0), NodePort(h, 1))


def _pauli_fuse(host: _Host) -> None:
    kind = host.pick([Kind.ZPOW, Kind.XPOW])
    if host.rng.random() < 0.25:
        host.add(kind, (0,), adjoint=host.flip())
        return
    first = host.add(kind, (_exponent(host),), adjoint=host.flip())
    second = host.add(kind, (_exponent(host),), adjoint=host.flip())
    host.wire(NodePort(first, 0), NodePort(second, 1))


_PATTERNS: dict[str, Callable[[_Host], None]] = {
    "spider-copy": _spider_copy,
    "spider-plus": _spider_plus,
    "prune-plus": lambda host: _prune(host, Kind.PLUS_DOT, Kind.BASIS_STATE),
    "prune-copy": lambda host: _prune(host, Kind.COPY_DOT, Kind.PLUS_STATE),
    "snake": _snake,
    "slide": _slide,
    "cup-symmetry": _cup_symmetry,
    "conjugate-state": _conjugate_state,
    "dot-bend": _dot_bend,
    "dot-dagger": _dot_dagger,
    "dot-permute": _dot_permute,
    "recolor": _recolor,
    "commute-z-copy": _commute_z_copy,
    "commute-x-copy": _commute_x_copy,
    "commute-x-plus": _commute_x_plus,
    "commute-z-plus": _commute_z_plus,
    "bialgebra": _bialgebra,
    "dot-bialgebra": _dot_bialgebra,
    "hopf": _hopf,
    "nadd-split": _nadd_split,
    "nadd-fuse": _nadd_fuse,
    "nadd-elim": _nadd_elim,
    "add-to-nadd": _add,
    "neg-as-h2": _neg,
    "h4-elim": _series(Kind.H, 4),
    "neg-elim": _series(Kind.NEG, 2),
    "dot-identity": _dot_identity,
    "plus-to-copy": _plus_to_copy,
    "h-zero-to-plus": _h_zero_to_plus,
    "pauli-fuse": _pauli_fuse,
}


def host_rules() -> list[str]:
    return list(_PATTERNS)


def random_host(rule: str, d: int, rng: np.random.Generator) -> Diagram:
    """A random diagram containing at least one occurrence of ``rule``."""
    build = _PATTERNS.get(rule)
    if build is None:
        raise RewriteError(f"No host generator for rule {rule!r}.")
    host = _Host(d=d, rng=rng)
    build(host)
    return host.close()


def random_dot_graph(
    kind: Kind,
    d: int,
    rng: np.random.Generator,
    max_dots: int = 6,
    max_legs: int = 10,
) -> Diagram:
    """Connected graph of uncolored dots; PLUS dots are joined through NEG glue."""
    count = int(rng.integers(2, max_dots + 1))
    edges: list[tuple[int, int]] = []
    for child in range(1, count):
        parent = int(rng.integers(0, child))
        edges.append((parent, child) if rng.integers(0, 2) else (child, parent))
    for _ in range(int(rng.integers(0, count))):
        a, b = (int(v) for v in rng.integers(0, count, size=2))
        edges.append((a, b))

    free_in = [0] * count
    free_out = [0] * count
    for _ in range(int(rng.integers(0, max_legs + 1))):
        target = int(rng.integers(0, count))
        if rng.integers(0, 2):
            free_out[target] += 1
        else:
            free_in[target] += 1

    n_out = [free_out[i] + sum(1 for a, _ in edges if a == i) for i in range(count)]
    n_in = [free_in[i] + sum(1 for _, b in edges if b == i) for i in range(count)]
    builder = DiagramBuilder()
    dots = [builder.add_node(make_spec(kind, d, (n_in[i], n_out[i]))) for i in range(count)]
    next_out = [0] * count
    next_in = [0] * count

    def out_port(i: int) -> NodePort:
        next_out[i] += 1
        return NodePort(dots[i], next_out[i] - 1)

    def in_port(i: int) -> NodePort:
        next_in[i] += 1
        return NodePort(dots[i], n_out[i] + next_in[i] - 1)

    for a, b in edges:
        if kind is Kind.PLUS_DOT:
            builder.splice(out_port(a), in_port(b), [make_spec(Kind.NEG, d)])
        else:
            builder.connect(out_port(a), in_port(b))
    for i in range(count):
        for _ in range(free_out[i]):
            builder.connect(out_port(i), builder.add_output(d))
        for _ in range(free_in[i]):
            builder.connect(builder.add_input(d), in_port(i))
    return builder.build()
