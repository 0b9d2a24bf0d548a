import itertools
import math

import numpy as np
import pytest

from qcat.channels import apply_channel, is_complete, random_density
from qcat.diagram import evaluate
from qcat.generators import Kind, gate
from qcat.protocols import (
    PROTOCOLS,
    ProtocolError,
    nadd_commuted,
    run_gate_teleport,
    run_ghz,
    run_protocol,
    run_superdense,
    run_teleport,
    gate_teleport_branch,
    nadd_resource,
    run_zx_nadd,
    shuttle_through_nadd,
    shuttled_correction,
    superdense_branch,
    teleport_branch,
    teleport_corrections,
    teleport_kraus,
    zx_nadd_circuit,
)
from qcat.tensor_core import compose, equal_within, identity, kron, scale

DIMS = (2, 3, 4, 5)


def _pauli_chain(d: int, specs):
    tensor = identity((d,))
    for spec in specs:
        tensor = compose(spec.to_tensor(), tensor)
    return tensor


def test_teleport_qutrit_has_nine_identity_branches() -> None:
    kraus = teleport_kraus(3)
    assert len(kraus) == 9
    assert is_complete(kraus)[0]
    report = run_teleport(3, trials=5, seed=7)
    assert report.passed, report.failures
    assert len(report.branches) == 9
    assert all(row.verdict == "pass" for row in report.branches)
    assert all(abs(row.probability - 1 / 9) < 1e-12 for row in report.branches)
    assert report.completeness_residual < 1e-9


def test_teleport_channel_is_identity_on_random_states() -> None:
    for d in DIMS:
        kraus = teleport_kraus(d)
        rng = np.random.default_rng([5, d])
        for _ in range(10):
            rho = random_density((d,), rng)
            assert np.allclose(apply_channel(kraus, rho).matrix, rho.matrix, atol=1e-9)


def test_teleport_branches_come_from_expanding_the_cap() -> None:
    d = 3
    kraus = teleport_kraus(d)
    assert sorted(kraus.labels) == [(a, b) for a in range(d) for b in range(d)]
    for branch in kraus.branches:
        a, b = branch.label
        assert branch.diagram is not None
        assert [node.spec.kind for node in branch.diagram.nodes].count(Kind.BELL_STATE) == 1
        direct = evaluate(teleport_branch(d, a, b, correction=branch.corrections[0]))
        assert equal_within(branch.tensor, direct)


def test_teleport_corrections_undo_the_bell_outcome() -> None:
    for d in DIMS:
        corrections = teleport_corrections(d)
        assert len(corrections) == d * d
        for (a, b), correction in corrections.items():
            assert correction == (a % d, (-b) % d)


def test_teleport_passes_for_every_dimension() -> None:
    for d in DIMS:
        report = run_teleport(d, trials=10, seed=11)
        assert report.passed, report.failures
        assert report.channel_distance <= 1e-9


def test_superdense_delivers_every_message() -> None:
    for d in DIMS:
        for p, q in itertools.product(range(d), repeat=2):
            report = run_superdense(d, p, q)
            assert report.passed, report.failures
            winners = [row.label for row in report.branches if row.probability > 0.5]
            assert winners == [f"({p},{q})"]


def test_superdense_branch_amplitude_is_a_point_mass() -> None:
    d = 3
    for a in range(d):
        for b in range(d):
            value = evaluate(superdense_branch(d, 1, 2, a, b)).scalar_value()
            assert abs(value - (1.0 if (a, b) == (1, 2) else 0.0)) < 1e-9


def test_superdense_rejects_out_of_range_messages() -> None:
    with pytest.raises(ProtocolError):
        run_superdense(3, 3, 0)
    with pytest.raises(ProtocolError):
        run_superdense(1, 0, 0)


def test_ghz_reduces_to_a_single_dot() -> None:
    for d in DIMS:
        report = run_ghz(d)
        assert report.passed, report.failures
        assert len(report.branches) == d
        assert all(abs(row.probability - 1 / d) < 1e-9 for row in report.branches)
        assert abs(report.details["norm"] - 1) < 1e-9
        assert report.trace is not None
        assert report.trace.reached_fixpoint


def test_ghz_needs_two_wires() -> None:
    with pytest.raises(ProtocolError):
        run_ghz(3, n_wires=1)


def test_gate_teleport_applies_nadd() -> None:
    for d in (2, 3):
        report = run_gate_teleport(d, trials=5, seed=13)
        assert report.passed, report.failures
        assert len(report.branches) == d**4
        assert report.completeness_residual < 1e-9
        assert report.channel_distance <= 1e-9
        assert report.details["rewrite_steps"] > 0


def test_gate_teleport_zero_outcome_is_nadd_over_d_squared() -> None:
    d = 3
    assert equal_within(evaluate(gate_teleport_branch(d, (0, 0, 0, 0))), scale(gate(Kind.NADD, d), 1 / 9))
    resource = nadd_resource(d).to_tensor()
    assert resource.out_dims == (d, d, d, d)
    assert abs(np.linalg.norm(resource.data) - 1) < 1e-9


def test_rewritten_shuttle_matches_closed_form() -> None:
    d = 3
    for first, second in (((1, 2), (2, 1)), ((0, 1), (1, 0)), ((2, 2), (0, 0))):
        chains, trace = shuttle_through_nadd(d, first, second)
        assert trace.reached_fixpoint
        assert all(step.verdict == "pass" for step in trace.steps)
        assert {spec.kind for chain in chains for spec in chain} <= {Kind.ZPOW, Kind.XPOW}
        z1, x1, z2, x2 = shuttled_correction(d, first, second)
        after = kron(_pauli_chain(d, chains[0]), _pauli_chain(d, chains[1]))
        closed = kron(
            compose(gate(Kind.ZPOW, d, (z1,)), gate(Kind.XPOW, d, (x1,))),
            compose(gate(Kind.ZPOW, d, (z2,)), gate(Kind.XPOW, d, (x2,))),
        )
        assert equal_within(after, closed)


def test_shuttled_correction_matches_nadd_commutation() -> None:
    d = 3
    first, second = (1, 2), (2, 1)
    z1, x1, z2, x2 = shuttled_correction(d, first, second)
    before = kron(
        compose(gate(Kind.ZPOW, d, (first[0],)), gate(Kind.XPOW, d, (first[1],))),
        compose(gate(Kind.ZPOW, d, (second[0],)), gate(Kind.XPOW, d, (second[1],))),
    )
    after = kron(
        compose(gate(Kind.ZPOW, d, (z1,)), gate(Kind.XPOW, d, (x1,))),
        compose(gate(Kind.ZPOW, d, (z2,)), gate(Kind.XPOW, d, (x2,))),
    )
    nadd = gate(Kind.NADD, d)
    assert equal_within(compose(nadd, before), compose(after, nadd))


def test_zx_through_nadd_matches_closed_form() -> None:
    for d in (2, 3):
        for params in itertools.product(range(d), repeat=4):
            report = run_zx_nadd(d, *params)
            assert report.passed, (d, params, report.failures)
            assert report.trace is not None
            assert report.trace.reached_fixpoint
            assert "nadd-fuse" in report.trace.rules_used()


def test_zx_through_nadd_examples() -> None:
    d = 3
    for params in ((1, 1, 1, 1), (2, 0, 1, 2), (0, 2, 2, 0)):
        assert equal_within(evaluate(zx_nadd_circuit(d, *params)), nadd_commuted(d, *params))
        report = run_zx_nadd(d, *params)
        assert report.passed, report.failures
        assert report.trace is not None
        assert report.trace.reached_fixpoint


def test_run_protocol_dispatches_every_name() -> None:
    for name in PROTOCOLS:
        report = run_protocol(name, 2, seed=3, trials=1)
        assert report.protocol == name
        assert report.passed, report.failures
        assert report.to_dict()["passed"] is True
    with pytest.raises(ProtocolError, match="Unknown protocol"):
        run_protocol("bb84", 2)


def test_ghz_scalar_is_inverse_root_d() -> None:
    report = run_ghz(3)
    assert abs(float(report.details["scalar"]) - 1 / math.sqrt(3)) < 1e-5
