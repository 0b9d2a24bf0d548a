import math

import numpy as np
import pytest

from qcat.channels import (
    ChannelError,
    DensityOperator,
    KrausSet,
    apply_channel,
    bell_costate,
    bell_costate_via_cap,
    choi_state,
    compose_sets,
    cup_equivalence,
    derive_pauli_correction,
    expand_cap_to_bell_branches,
    expand_costate,
    is_complete,
    random_density,
    slide_partner,
    tensor_sets,
)
from qcat.diagram import DiagramBuilder, NodePort, evaluate
from qcat.generators import Kind, compact, gate, pauli, spec, state
from qcat.rewriting.hosts import random_operator, random_unitary
from qcat.tensor_core import as_matrix, compose, dagger, equal_within, from_matrix, identity, kron, scale

DIMS = (2, 3, 4, 5)


def _basis_measurement(d: int) -> KrausSet:
    projectors = [from_matrix(np.diag(np.eye(d)[k]), (d,), (d,)) for k in range(d)]
    return KrausSet.of(projectors)


def _teleport_skeleton(d: int):
    builder = DiagramBuilder()
    cup = builder.add_node(spec(Kind.NORMALIZED_CUP, d))
    cap = builder.add_node(spec(Kind.CAP, d))
    builder.connect(builder.add_input(d), NodePort(cap, 0))
    builder.connect(NodePort(cup, 0), NodePort(cap, 1))
    builder.connect(NodePort(cup, 1), builder.add_output(d))
    return builder.build(), cap


def test_density_operator_rejects_invalid_matrices() -> None:
    with pytest.raises(ChannelError, match="Hermitian"):
        DensityOperator.from_array([[0.5, 1.0], [0.0, 0.5]], (2,))
    with pytest.raises(ChannelError, match="trace"):
        DensityOperator.from_array(np.eye(2), (2,))
    with pytest.raises(ChannelError, match="positive"):
        DensityOperator.from_array([[1.5, 0.0], [0.0, -0.5]], (2,))


def test_random_density_is_valid() -> None:
    rng = np.random.default_rng(31)
    for d in DIMS:
        rho = random_density((d,), rng)
        assert rho.dims == (d,)
        assert abs(np.trace(rho.matrix) - 1) < 1e-12


def test_basis_measurement_is_complete() -> None:
    for d in DIMS:
        complete, residual = is_complete(_basis_measurement(d))
        assert complete
        assert residual < 1e-12
        halved = KrausSet.of([scale(b.tensor, 0.5) for b in _basis_measurement(d).branches])
        assert not is_complete(halved)[0]


def test_kraus_set_rejects_mixed_signatures() -> None:
    with pytest.raises(ChannelError):
        KrausSet.of([identity((2,)), identity((3,))])
    with pytest.raises(ChannelError):
        KrausSet(())


def test_incomplete_sets_cannot_be_applied() -> None:
    halved = KrausSet.of([scale(identity((2,)), 0.5)])
    rho = DensityOperator.from_array(np.eye(2) / 2, (2,))
    with pytest.raises(ChannelError, match="not complete"):
        apply_channel(halved, rho)


def test_unitary_channel_conjugates() -> None:
    rng = np.random.default_rng(32)
    d = 3
    u = random_unitary(d, rng)
    rho = random_density((d,), rng)
    out = apply_channel(KrausSet.of([u]), rho)
    expected = as_matrix(u) @ rho.matrix @ as_matrix(u).conj().T
    assert np.allclose(out.matrix, expected, atol=1e-12)


def test_set_products_stay_complete() -> None:
    a = _basis_measurement(2)
    b = KrausSet.of([gate(Kind.H, 3)])
    assert is_complete(tensor_sets(a, b))[0]
    assert len(tensor_sets(a, b)) == 2
    composed = compose_sets(_basis_measurement(3), b)
    assert is_complete(composed)[0]
    assert composed.labels[0] == (0, 0)


def test_derive_pauli_correction_inverts_paulis() -> None:
    for d in DIMS:
        for z in range(d):
            for x in range(d):
                assert derive_pauli_correction(dagger(pauli(d, z, x)), d) == (z, x)
    assert derive_pauli_correction(gate(Kind.H, 2), 2) is None
    assert derive_pauli_correction(scale(identity((3,)), 0.0), 3) is None


def test_costate_expansions_carry_pauli_corrections() -> None:
    for d in DIMS:
        zero = expand_costate(Kind.BASIS_STATE, d)
        plus = expand_costate(Kind.PLUS_STATE, d)
        assert is_complete(zero)[0]
        assert is_complete(plus)[0]
        for k in range(d):
            assert zero.branch((k,)).corrections == ((0, (-k) % d),)
            assert plus.branch((k,)).corrections == ((k, 0),)
    with pytest.raises(ChannelError):
        expand_costate(Kind.BELL_STATE, 2)


def test_bell_costate_through_cap() -> None:
    for d in DIMS:
        for a in range(d):
            for b in range(d):
                assert equal_within(bell_costate(d, a, b), bell_costate_via_cap(d, a, b))


def test_cap_expands_to_complete_bell_branches() -> None:
    for d in (2, 3):
        diagram, cap = _teleport_skeleton(d)
        kraus = expand_cap_to_bell_branches(diagram, cap)
        assert len(kraus) == d * d
        assert is_complete(kraus)[0]
        original = evaluate(diagram)
        first = kraus.branch((0, 0))
        assert first.diagram is not None
        assert equal_within(evaluate(first.diagram), original)
        for branch in kraus.branches:
            assert derive_pauli_correction(branch.tensor, d) is not None
    with pytest.raises(ChannelError, match="not a Cap"):
        expand_cap_to_bell_branches(diagram, cap + 100)


def test_cup_equivalence_recovers_symmetric_unitaries() -> None:
    for d in DIMS:
        rng = np.random.default_rng(40 + d)
        cup = compact(Kind.CUP, d)
        for _ in range(20):
            v = as_matrix(random_unitary(d, rng))
            u = from_matrix(v @ v.T, (d,), (d,))
            psi = scale(compose(kron(u, identity((d,))), cup), 1 / math.sqrt(d))
            found = cup_equivalence(psi)
            assert found.is_cup
            assert found.local_unitary is not None
            assert np.max(np.abs(as_matrix(found.local_unitary) - as_matrix(u))) <= 1e-5


def test_cup_equivalence_rejects_partially_entangled_states() -> None:
    for d in DIMS:
        rng = np.random.default_rng(50 + d)
        for _ in range(20):
            vector = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
            psi = from_matrix(vector / np.linalg.norm(vector), (d, d), ())
            assert not cup_equivalence(psi).is_cup
    product = kron(state(Kind.BASIS_STATE, 3, (0,)), state(Kind.PLUS_STATE, 3))
    assert not cup_equivalence(product).is_cup


def test_slide_partner_moves_operator_across_state() -> None:
    for d in DIMS:
        rng = np.random.default_rng(60 + d)
        v = as_matrix(random_unitary(d, rng))
        psi = scale(compose(kron(from_matrix(v @ v.T, (d,), (d,)), identity((d,))), compact(Kind.CUP, d)), d**-0.5)
        for _ in range(5):
            f = random_operator(d, rng)
            g = slide_partner(psi, f)
            left = compose(kron(f, identity((d,))), psi)
            right = compose(kron(identity((d,)), g), psi)
            assert equal_within(left, right)


def test_choi_state_bends_inputs() -> None:
    rng = np.random.default_rng(70)
    t = from_matrix(rng.normal(size=(2, 3)), (2,), (3,))
    expected = compose(kron(t, identity((3,))), compact(Kind.CUP, 3))
    assert equal_within(choi_state(t), expected)
