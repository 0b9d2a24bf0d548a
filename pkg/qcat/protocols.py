"""End-to-end protocol reproductions built from diagrams and certified by evaluation."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from qcat.channels import (
    ChannelError,
    DensityOperator,
    KrausBranch,
    KrausSet,
    apply_channel,
    choi_state,
    derive_pauli_correction,
    expand_cap_to_bell_branches,
    is_complete,
    random_density,
)
from qcat.diagram import Diagram, DiagramBuilder, NodePort, evaluate
from qcat.generators import GeneratorSpec, Kind, box, gate
from qcat.generators import spec as make_spec
from qcat.rewriting import GHZ_STRATEGY, NADD_COMMUTE_STRATEGY, RewriteTrace, normalize, normalize_phases
from qcat.settings import get_settings
from qcat.tensor_core import (
    ComplexTensor,
    as_matrix,
    compose,
    equal_within,
    from_matrix,
    identity,
    kron,
    max_abs_difference,
    scale,
)

logger = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    pass


@dataclass
class BranchRow:
    label: str
    probability: float | None
    value: str
    verdict: str


@dataclass
class ProtocolReport:
    protocol: str
    dim: int
    seed: int | None = None
    branches: list[BranchRow] = field(default_factory=list)
    completeness_residual: float | None = None
    channel_distance: float | None = None
    trace: RewriteTrace | None = None
    failures: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        logger.warning("%s d=%s: %s", self.protocol, self.dim, message)
        self.failures.append(message)

    def to_dict(self) -> dict[str, Any]:
        return {
            "protocol": self.protocol,
            "dim": self.dim,
            "seed": self.seed,
            "passed": self.passed,
            "branches": [row.__dict__ for row in self.branches],
            "completeness_residual": self.completeness_residual,
            "channel_distance": self.channel_distance,
            "trace": self.trace.to_dict() if self.trace is not None else None,
            "failures": list(self.failures),
            "details": self.details,
        }


def _check_dim(d: int) -> None:
    if d < 2:
        raise ProtocolError(f"Protocols need d >= 2, got {d}.")


def _fmt(value: complex) -> str:
    value = complex(value)
    if abs(value.imag) < 1e-12:
        return f"{value.real:.6g}"
    return f"{value.real:.6g}{value.imag:+.6g}j"


def _paulis(d: int, z: int, x: int) -> list[GeneratorSpec]:
    """Specs for Z^z X^x in application order, skipping trivial factors."""
    specs = []
    if x % d:
        specs.append(make_spec(Kind.XPOW, d, (x,)))
    if z % d:
        specs.append(make_spec(Kind.ZPOW, d, (z,)))
    return specs


# -- GHZ ---------------------------------------------------------------------------


def ghz_circuit(d: int, n_wires: int = 4) -> Diagram:
    """|0…0⟩, H on the first wire, then an ADD ladder down the wires."""
    builder = DiagramBuilder()
    heads: list[NodePort] = []
    for wire in range(n_wires):
        zero = builder.add_node(make_spec(Kind.BASIS_STATE, d, (0,)))
        heads.append(NodePort(zero, 0))
    h = builder.add_node(make_spec(Kind.H, d))
    builder.connect(heads[0], NodePort(h, 1))
    heads[0] = NodePort(h, 0)
    for wire in range(n_wires - 1):
        add = builder.add_node(make_spec(Kind.ADD, d, (0,)))
        builder.connect(heads[wire], NodePort(add, 2))
        builder.connect(heads[wire + 1], NodePort(add, 3))
        heads[wire] = NodePort(add, 0)
        heads[wire + 1] = NodePort(add, 1)
    for head in heads:
        builder.connect(head, builder.add_output(d))
    return builder.build()


def ghz_state(d: int, n_wires: int = 4) -> ComplexTensor:
    vector = np.zeros(d**n_wires, dtype=complex)
    stride = sum(d**k for k in range(n_wires))
    for k in range(d):
        vector[k * stride] = 1 / math.sqrt(d)
    return from_matrix(vector, (d,) * n_wires, ())


def run_ghz(d: int, n_wires: int = 4) -> ProtocolReport:
    _check_dim(d)
    if n_wires < 2:
        raise ProtocolError(f"GHZ needs at least two wires, got {n_wires}.")
    report = ProtocolReport(protocol="ghz", dim=d, details={"n_wires": n_wires})
    circuit = ghz_circuit(d, n_wires)
    result, trace = normalize(circuit, GHZ_STRATEGY, max_steps=get_settings().default_max_steps)
    report.trace = trace
    report.details["steps"] = len(trace.steps)
    report.details["scalar"] = _fmt(result.scalar)

    if trace.failures:
        report.fail(f"{len(trace.failures)} rewrite steps failed certification.")
    nodes = result.nodes
    if len(nodes) != 1 or nodes[0].spec.kind is not Kind.COPY_DOT or nodes[0].spec.params != (0, n_wires):
        report.fail(f"Normal form is not a single COPY 0->{n_wires} dot: {result.describe()}.")
    if abs(result.scalar - 1 / math.sqrt(d)) > get_settings().tolerance:
        report.fail(f"Normal form scalar {_fmt(result.scalar)} differs from 1/sqrt({d}).")

    expected = ghz_state(d, n_wires)
    distance = max_abs_difference(evaluate(result), expected)
    report.channel_distance = distance
    if distance > get_settings().tolerance:
        report.fail(f"Normal form evaluates {distance:.3e} away from the GHZ state.")
    norm = float(np.linalg.norm(evaluate(circuit).amplitudes))
    report.details["norm"] = norm
    amplitudes = evaluate(result).data
    for k in range(d):
        amplitude = complex(amplitudes[(k,) * n_wires])
        verdict = "pass" if abs(amplitude - 1 / math.sqrt(d)) <= get_settings().tolerance else "fail"
        report.branches.append(BranchRow(str(k) * n_wires, abs(amplitude) ** 2, _fmt(amplitude), verdict))
    return report


# -- superdense coding --------------------------------------------------------------


def superdense_branch(d: int, p: int, q: int, a: int, b: int) -> Diagram:
    """Normalized cup, Alice's Z^p X^{-q} on her half, Bell costate (a, b)."""
    builder = DiagramBuilder()
    cup = builder.add_node(make_spec(Kind.NORMALIZED_CUP, d))
    bell = builder.add_node(make_spec(Kind.BELL_STATE, d, (a, b), adjoint=True))
    builder.splice(NodePort(cup, 0), NodePort(bell, 0), _paulis(d, p, -q))
    builder.connect(NodePort(cup, 1), NodePort(bell, 1))
    return builder.build()


def superdense_branch_via_cap(d: int, p: int, q: int, a: int, b: int) -> Diagram:
    """The same branch with ⟨B_ab| written as (1/√d)·ε∘(Z^{-a} ⊗ X^{-b})."""
    builder = DiagramBuilder(scalar=1 / math.sqrt(d))
    cup = builder.add_node(make_spec(Kind.NORMALIZED_CUP, d))
    cap = builder.add_node(make_spec(Kind.CAP, d))
    builder.splice(NodePort(cup, 0), NodePort(cap, 0), _paulis(d, p, -q) + _paulis(d, -a, 0))
    builder.splice(NodePort(cup, 1), NodePort(cap, 1), _paulis(d, 0, -b))
    return builder.build()


def run_superdense(d: int, p: int, q: int) -> ProtocolReport:
    _check_dim(d)
    if not (0 <= p < d and 0 <= q < d):
        raise ProtocolError(f"Message ({p}, {q}) out of range for d={d}.")
    settings = get_settings()
    report = ProtocolReport(protocol="superdense", dim=d, details={"p": p, "q": q})

    branches = []
    slide_trace = RewriteTrace()
    for a, b in itertools.product(range(d), repeat=2):
        amplitude = evaluate(superdense_branch(d, p, q, a, b))
        value = amplitude.scalar_value()
        probability = abs(value) ** 2
        expected = 1.0 if (a, b) == (p, q) else 0.0
        verdict = "pass" if abs(value - expected) <= settings.tolerance else "fail"
        if verdict == "fail":
            report.fail(f"Outcome ({a},{b}) has amplitude {_fmt(value)}, expected {expected}.")

        reduced, trace = normalize(superdense_branch_via_cap(d, p, q, a, b), ["slide", "pauli-fuse", "snake"])
        slide_trace.steps.extend(trace.steps)
        if trace.failures or abs(evaluate(reduced).scalar_value() - value) > settings.tolerance:
            report.fail(f"Sliding derivation disagrees for outcome ({a},{b}).")
            verdict = "fail"
        report.branches.append(BranchRow(f"({a},{b})", probability, _fmt(value), verdict))
        branches.append(KrausBranch((a, b), amplitude))

    report.trace = slide_trace
    complete, residual = is_complete(KrausSet(tuple(branches)))
    report.completeness_residual = residual
    if not complete:
        report.fail(f"Outcome set is not complete (residual {residual:.3e}).")

    worst = 0.0
    for pp, qq in itertools.product(range(d), repeat=2):
        total = sum(
            abs(evaluate(superdense_branch(d, pp, qq, a, b)).scalar_value()) ** 2
            for a, b in itertools.product(range(d), repeat=2)
        )
        worst = max(worst, abs(total - 1))
    report.details["worst_residual_over_messages"] = worst
    if worst > settings.tolerance:
        report.fail(f"Some message has an incomplete outcome set (residual {worst:.3e}).")
    return report


# -- teleportation -------------------------------------------------------------------


def teleport_branch(d: int, a: int, b: int, correction: tuple[int, int] = (0, 0)) -> Diagram:
    """Bell costate (a, b) on the input and half a normalized cup; Bob corrects the other half."""
    builder = DiagramBuilder()
    source = builder.add_input(d)
    cup = builder.add_node(make_spec(Kind.NORMALIZED_CUP, d))
    bell = builder.add_node(make_spec(Kind.BELL_STATE, d, (a, b), adjoint=True))
    builder.connect(source, NodePort(bell, 0))
    builder.connect(NodePort(cup, 0), NodePort(bell, 1))
    builder.splice(NodePort(cup, 1), builder.add_output(d), _paulis(d, *correction))
    return builder.build()


def teleport_corrections(d: int) -> dict[tuple[int, int], tuple[int, int]]:
    """Bob's (z, x) per Bell outcome, found by searching the Paulis."""
    corrections = {}
    for a, b in itertools.product(range(d), repeat=2):
        found = derive_pauli_correction(evaluate(teleport_branch(d, a, b)), d)
        if found is None:
            raise ProtocolError(f"No Pauli correction exists for teleportation outcome ({a},{b}).")
        corrections[(a, b)] = found
    return corrections


def teleport_circuit(d: int) -> tuple[Diagram, int, int]:
    """The input and half a normalized cup meet in a cap; returns the diagram, the cap and the cup."""
    builder = DiagramBuilder()
    cap = builder.add_node(make_spec(Kind.CAP, d))
    cup = builder.add_node(make_spec(Kind.NORMALIZED_CUP, d))
    builder.connect(builder.add_input(d), NodePort(cap, 0))
    builder.connect(NodePort(cup, 0), NodePort(cap, 1))
    builder.connect(NodePort(cup, 1), builder.add_output(d))
    return builder.build(), cap, cup


def teleport_kraus(d: int) -> KrausSet:
    """Expand Alice's cap into Bell outcomes and let Bob undo each one."""
    circuit, cap, cup = teleport_circuit(d)
    branches = []
    for measured in expand_cap_to_bell_branches(circuit, cap).branches:
        correction = derive_pauli_correction(measured.tensor, d)
        if correction is None:
            raise ProtocolError(f"No Pauli correction exists for teleportation outcome {measured.label}.")
        assert measured.diagram is not None
        builder = DiagramBuilder.from_diagram(measured.diagram)
        bob = builder.detach(NodePort(cup, 1))
        builder.splice(NodePort(cup, 1), bob, _paulis(d, *correction))
        builder.multiply_scalar(1 / math.sqrt(d))
        diagram = builder.build()
        branches.append(KrausBranch(measured.label, evaluate(diagram), diagram=diagram, corrections=(correction,)))
    return KrausSet(tuple(branches))


def _channel_trials(
    report: ProtocolReport,
    kraus: KrausSet,
    dims: tuple[int, ...],
    expected: Callable[[DensityOperator], np.ndarray],
    trials: int,
    rng: np.random.Generator,
    extra: Sequence[DensityOperator] = (),
) -> None:
    worst = 0.0
    samples = [random_density(dims, rng) for _ in range(trials)] + list(extra)
    for rho in samples:
        try:
            out = apply_channel(kraus, rho)
        except ChannelError as exc:
            report.fail(f"Channel application failed: {exc}")
            return
        worst = max(worst, float(np.max(np.abs(out.matrix - expected(rho)))))
    report.channel_distance = worst
    if worst > get_settings().tolerance:
        report.fail(f"Channel deviates from the target by {worst:.3e}.")


def run_teleport(d: int, trials: int = 10, seed: int | None = None) -> ProtocolReport:
    _check_dim(d)
    settings = get_settings()
    seed = settings.seed if seed is None else seed
    report = ProtocolReport(protocol="teleport", dim=d, seed=seed, details={"trials": trials})
    kraus = teleport_kraus(d)
    target = from_matrix(np.eye(d) / d, (d,), (d,))
    for branch in kraus.branches:
        distance = max_abs_difference(branch.tensor, target)
        verdict = "pass" if distance <= settings.tolerance else "fail"
        if verdict == "fail":
            report.fail(f"Branch {branch.label} deviates from I/d by {distance:.3e}.")
        z, x = branch.corrections[0]
        report.branches.append(BranchRow(str(branch.label), 1 / d**2, f"I/{d} after Z^{z} X^{x}", verdict))
    report.details["corrections"] = {"%s,%s" % br.label: list(br.corrections[0]) for br in kraus.branches}

    complete, residual = is_complete(kraus)
    report.completeness_residual = residual
    if not complete:
        report.fail(f"Branch set is not complete (residual {residual:.3e}).")
    basis_zero = DensityOperator.pure(make_spec(Kind.BASIS_STATE, d, (0,)).to_tensor())
    _channel_trials(report, kraus, (d,), lambda rho: rho.matrix, trials, np.random.default_rng(seed), [basis_zero])
    return report


# -- Z/X through NADD --------------------------------------------------------------


def nadd_commuted(d: int, a: int, b: int, c: int, e: int) -> ComplexTensor:
    """(Z^{a−c} ⊗ Z^{−c})(X^b ⊗ X^{−b−e})·NADD."""
    phases = kron(gate(Kind.ZPOW, d, (a - c,)), gate(Kind.ZPOW, d, (-c,)))
    shifts = kron(gate(Kind.XPOW, d, (b,)), gate(Kind.XPOW, d, (-b - e,)))
    return compose(phases, compose(shifts, gate(Kind.NADD, d, (0,))))


def zx_nadd_circuit(d: int, a: int, b: int, c: int, e: int) -> Diagram:
    """Z^a X^b on the first wire and Z^c X^e on the second, followed by NADD."""
    builder = DiagramBuilder()
    nadd = builder.add_node(make_spec(Kind.NADD, d, (0,)))
    builder.splice(builder.add_input(d), NodePort(nadd, 2), _paulis(d, a, b))
    builder.splice(builder.add_input(d), NodePort(nadd, 3), _paulis(d, c, e))
    builder.connect(NodePort(nadd, 0), builder.add_output(d))
    builder.connect(NodePort(nadd, 1), builder.add_output(d))
    return builder.build()


def run_zx_nadd(d: int, a: int, b: int, c: int, e: int) -> ProtocolReport:
    _check_dim(d)
    settings = get_settings()
    report = ProtocolReport(protocol="zx-nadd", dim=d, details={"a": a, "b": b, "c": c, "e": e})
    circuit = zx_nadd_circuit(d, a, b, c, e)
    result, trace = normalize_phases(circuit, NADD_COMMUTE_STRATEGY)
    report.trace = trace
    if trace.failures:
        report.fail(f"{len(trace.failures)} rewrite steps failed certification.")
    if not trace.reached_fixpoint:
        report.fail("Commutation did not reach a fixpoint.")
    leftover = sorted({node.spec.kind.value for node in result.nodes} - {"NADD", "Zpow", "Xpow"})
    if leftover:
        report.fail(f"Dots remain after commutation: {leftover}.")

    expected = nadd_commuted(d, a, b, c, e)
    distance = max(
        max_abs_difference(evaluate(result), expected),
        max_abs_difference(evaluate(circuit), expected),
    )
    report.channel_distance = distance
    if distance > settings.tolerance:
        report.fail(f"Result is {distance:.3e} away from the closed form.")
    report.details["result"] = result.describe()
    report.branches.append(BranchRow("result", None, result.describe(), "pass" if report.passed else "fail"))
    return report


# -- gate teleportation ------------------------------------------------------------


def nadd_resource(d: int) -> GeneratorSpec:
    """The offline state ⟪NADD⟫ on two normalized cups.

    Legs are control out, target out, then the bent control and target inputs.
    """
    return box(scale(choi_state(gate(Kind.NADD, d, (0,))), 1 / d), label="⟪NADD⟫")


def gate_teleport_branch(
    d: int,
    outcome: tuple[int, int, int, int],
    corrections: Sequence[Sequence[GeneratorSpec]] = ((), ()),
) -> Diagram:
    """Two inputs teleported through ⟪NADD⟫; Alice sees Bell outcomes (a1, b1) and (a2, b2).

    ``corrections`` holds the gates Bob applies on each output, in application order.
    """
    a1, b1, a2, b2 = outcome
    builder = DiagramBuilder()
    inputs = [builder.add_input(d), builder.add_input(d)]
    resource = builder.add_node(nadd_resource(d))
    for k, (a, b) in enumerate(((a1, b1), (a2, b2))):
        bell = builder.add_node(make_spec(Kind.BELL_STATE, d, (a, b), adjoint=True))
        builder.connect(inputs[k], NodePort(bell, 0))
        builder.connect(NodePort(resource, 2 + k), NodePort(bell, 1))
    for k in range(2):
        builder.splice(NodePort(resource, k), builder.add_output(d), list(corrections[k]))
    return builder.build()


def shuttled_correction(d: int, first: tuple[int, int], second: tuple[int, int]) -> tuple[int, int, int, int]:
    """Move per-wire corrections Z^z X^x from before NADD to after it.

    NADD·(Z^{z1}X^{x1} ⊗ Z^{z2}X^{x2}) = (Z^{z1−z2} ⊗ Z^{−z2})(X^{x1} ⊗ X^{−x1−x2})·NADD.
    """
    (z1, x1), (z2, x2) = first, second
    return ((z1 - z2) % d, x1 % d, (-z2) % d, (-x1 - x2) % d)


def _chain_after(diagram: Diagram, start: NodePort) -> list[GeneratorSpec]:
    specs = []
    end = diagram.peer(start)
    while isinstance(end, NodePort):
        specs.append(diagram.spec(end.node))
        end = diagram.peer(NodePort(end.node, 0))
    return specs


def _chain_tensor(d: int, specs: Sequence[GeneratorSpec]) -> ComplexTensor:
    tensor = identity((d,))
    for spec in specs:
        tensor = compose(spec.to_tensor(), tensor)
    return tensor


def shuttle_through_nadd(
    d: int, first: tuple[int, int], second: tuple[int, int]
) -> tuple[tuple[list[GeneratorSpec], list[GeneratorSpec]], RewriteTrace]:
    """Rewrite NADD·(Z^{z1}X^{x1} ⊗ Z^{z2}X^{x2}) into NADD followed by a Pauli chain per wire."""
    result, trace = normalize_phases(zx_nadd_circuit(d, *first, *second), NADD_COMMUTE_STRATEGY)
    if trace.failures or not trace.reached_fixpoint:
        raise ProtocolError(f"Shuttling {first}, {second} through NADD did not certify.")
    nadds = [node.id for node in result.nodes if node.spec.kind is Kind.NADD]
    if len(nadds) != 1:
        raise ProtocolError(f"Shuttling {first}, {second} left {len(nadds)} NADD gates.")
    chains = (_chain_after(result, NodePort(nadds[0], 0)), _chain_after(result, NodePort(nadds[0], 1)))
    return chains, trace


def run_gate_teleport(d: int, trials: int = 5, seed: int | None = None) -> ProtocolReport:
    _check_dim(d)
    settings = get_settings()
    seed = settings.seed if seed is None else seed
    report = ProtocolReport(protocol="gate-teleport", dim=d, seed=seed, details={"gate": "NADD"})
    single = teleport_corrections(d)
    nadd = gate(Kind.NADD, d, (0,))
    target = scale(nadd, 1 / d**2)

    shuttles: dict[tuple[tuple[int, int], tuple[int, int]], tuple[list[GeneratorSpec], list[GeneratorSpec]]] = {}
    rewrite_steps = 0
    branches = []
    for a1, b1, a2, b2 in itertools.product(range(d), repeat=4):
        outcome = (a1, b1, a2, b2)
        key = (single[(a1, b1)], single[(a2, b2)])
        if key not in shuttles:
            try:
                shuttles[key], trace = shuttle_through_nadd(d, *key)
            except ProtocolError as exc:
                report.fail(str(exc))
                continue
            rewrite_steps += len(trace.steps)
        chains = shuttles[key]
        correction = shuttled_correction(d, *key)
        closed_form = kron(
            compose(gate(Kind.ZPOW, d, (correction[0],)), gate(Kind.XPOW, d, (correction[1],))),
            compose(gate(Kind.ZPOW, d, (correction[2],)), gate(Kind.XPOW, d, (correction[3],))),
        )
        if not equal_within(kron(_chain_tensor(d, chains[0]), _chain_tensor(d, chains[1])), closed_form):
            report.fail(f"Rewritten correction for {outcome} differs from {correction}.")

        diagram = gate_teleport_branch(d, outcome, chains)
        tensor = evaluate(diagram)
        distance = max_abs_difference(tensor, target)
        verdict = "pass" if distance <= settings.tolerance else "fail"
        if verdict == "fail":
            report.fail(f"Branch {outcome} with correction {correction} is {distance:.3e} away from NADD/d^2.")
        report.branches.append(BranchRow(str(outcome), 1 / d**4, f"NADD/{d**2} after {correction}", verdict))
        branches.append(KrausBranch(outcome, tensor, diagram=diagram, corrections=(correction[:2], correction[2:])))
    report.details["rewrite_steps"] = rewrite_steps

    if not branches:
        return report
    kraus = KrausSet(tuple(branches))
    complete, residual = is_complete(kraus)
    report.completeness_residual = residual
    if not complete:
        report.fail(f"Branch set is not complete (residual {residual:.3e}).")
    matrix = as_matrix(nadd)
    _channel_trials(
        report,
        kraus,
        (d, d),
        lambda rho: matrix @ rho.matrix @ matrix.conj().T,
        trials,
        np.random.default_rng(seed),
    )
    return report


# -- dispatcher ---------------------------------------------------------------------


PROTOCOLS = ("ghz", "superdense", "teleport", "gate-teleport", "zx-nadd")


def run_protocol(name: str, d: int, seed: int | None = None, **params: Any) -> ProtocolReport:
    if name == "ghz":
        return run_ghz(d, int(params.get("n_wires", 4)))
    if name == "superdense":
        return run_superdense(d, int(params.get("p", 0)), int(params.get("q", 0)))
    if name == "teleport":
        return run_teleport(d, int(params.get("trials", 10)), seed)
    if name == "gate-teleport":
        return run_gate_teleport(d, int(params.get("trials", 5)), seed)
    if name == "zx-nadd":
        return run_zx_nadd(d, *(int(params.get(k, 1)) for k in ("a", "b", "c", "e")))
    raise ProtocolError(f"Unknown protocol {name!r}. Known protocols: {', '.join(PROTOCOLS)}.")


__all__ = [
    "PROTOCOLS",
    "BranchRow",
    "ProtocolError",
    "ProtocolReport",
    "gate_teleport_branch",
    "ghz_circuit",
    "ghz_state",
    "nadd_commuted",
    "nadd_resource",
    "run_gate_teleport",
    "run_ghz",
    "run_protocol",
    "run_superdense",
    "run_teleport",
    "run_zx_nadd",
    "shuttle_through_nadd",
    "shuttled_correction",
    "teleport_branch",
    "teleport_circuit",
    "teleport_corrections",
    "teleport_kraus",
    "zx_nadd_circuit",
]
