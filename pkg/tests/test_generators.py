import cmath
import math

import numpy as np
import pytest

from qcat.generators import (
    GeneratorError,
    Kind,
    compact,
    copy_dot,
    gate,
    pauli,
    plus_dot,
    plus_dot_via_fourier,
    recolor,
    spec,
    state,
)
from qcat.rewriting.hosts import random_unitary
from qcat.tensor_core import as_matrix, compose, dagger, equal_within, from_matrix, identity, transpose_cb

DIMS = (2, 3, 4, 5)


def _power(t, k):
    result = identity(t.in_dims)
    for _ in range(k):
        result = compose(t, result)
    return result


def test_hadamard_has_order_four_and_squares_to_neg() -> None:
    for d in DIMS:
        h = gate(Kind.H, d)
        assert equal_within(_power(h, 4), identity((d,)))
        assert equal_within(_power(h, 2), gate(Kind.NEG, d))
        assert equal_within(_power(gate(Kind.NEG, d), 2), identity((d,)))


def test_paulis_have_order_d() -> None:
    for d in DIMS:
        assert equal_within(_power(gate(Kind.ZPOW, d, (1,)), d), identity((d,)))
        assert equal_within(_power(gate(Kind.XPOW, d, (1,)), d), identity((d,)))


def test_hadamard_conjugates_x_to_z_and_z_to_x_dagger() -> None:
    for d in DIMS:
        h = gate(Kind.H, d)
        x = gate(Kind.XPOW, d, (1,))
        z = gate(Kind.ZPOW, d, (1,))
        assert equal_within(compose(h, compose(x, dagger(h))), z)
        assert equal_within(compose(h, compose(z, dagger(h))), dagger(x))


def test_z_x_commutation_phase() -> None:
    for d in DIMS:
        omega = cmath.exp(2j * math.pi / d)
        for a in range(d):
            for b in range(d):
                zx = compose(gate(Kind.ZPOW, d, (a,)), gate(Kind.XPOW, d, (b,)))
                xz = compose(gate(Kind.XPOW, d, (b,)), gate(Kind.ZPOW, d, (a,)))
                assert np.allclose(as_matrix(zx), omega ** (a * b) * as_matrix(xz), atol=1e-9)


def test_pauli_traces_vanish_except_identity() -> None:
    for d in DIMS:
        for a in range(d):
            for b in range(d):
                trace = np.trace(as_matrix(pauli(d, a, b)))
                expected = d if a == 0 and b == 0 else 0
                assert abs(trace - expected) < 1e-9


def test_qubit_generators_match_textbook_gates() -> None:
    hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.allclose(as_matrix(gate(Kind.H, 2)), hadamard, atol=1e-12)
    assert np.allclose(as_matrix(gate(Kind.NEG, 2)), np.eye(2), atol=1e-12)
    assert np.allclose(as_matrix(gate(Kind.ZPOW, 2, (1,))), np.diag([1, -1]), atol=1e-12)
    assert np.allclose(as_matrix(gate(Kind.XPOW, 2, (1,))), [[0, 1], [1, 0]], atol=1e-12)
    assert np.allclose(as_matrix(gate(Kind.ADD, 2)), cnot, atol=1e-12)
    assert np.allclose(as_matrix(gate(Kind.NADD, 2)), cnot, atol=1e-12)


def test_nadd_is_self_inverse_and_add_is_not() -> None:
    for d in (3, 4, 5):
        nadd = gate(Kind.NADD, d)
        add = gate(Kind.ADD, d)
        assert equal_within(compose(nadd, nadd), identity((d, d)))
        assert not equal_within(compose(add, add), identity((d, d)))
        assert equal_within(_power(add, d), identity((d, d)))


def test_nadd_orientation_puts_control_on_second_wire() -> None:
    d = 3
    nadd_21 = gate(Kind.NADD, d, (1,))
    swap = gate(Kind.SWAP, d)
    assert equal_within(nadd_21, compose(swap, compose(gate(Kind.NADD, d), swap)))


def test_plus_dot_formulas_agree() -> None:
    for d in (2, 3):
        for m in range(3):
            for n in range(3):
                if m + n == 0:
                    continue
                assert equal_within(plus_dot(d, m, n), plus_dot_via_fourier(d, m, n))


def test_nullary_dots_evaluate_to_d() -> None:
    for d in DIMS:
        assert copy_dot(d, 0, 0).scalar_value() == d
        assert abs(plus_dot(d, 0, 0).scalar_value() - d) < 1e-12


def test_plus_dot_one_to_one_is_neg() -> None:
    for d in DIMS:
        assert equal_within(plus_dot(d, 1, 1), gate(Kind.NEG, d))


def test_bell_states_are_orthonormal() -> None:
    d = 3
    vectors = [state(Kind.BELL_STATE, d, (a, b)).amplitudes for a in range(d) for b in range(d)]
    gram = np.array([[np.vdot(u, v) for v in vectors] for u in vectors])
    assert np.allclose(gram, np.eye(d * d), atol=1e-12)


def test_cup_and_cap_are_transposes() -> None:
    for d in DIMS:
        assert equal_within(transpose_cb(compact(Kind.CUP, d)), compact(Kind.CAP, d))


def test_closed_form_daggers_match_tensor_daggers() -> None:
    rng = np.random.default_rng(11)
    d = 3
    color = random_unitary(d, rng)
    specs = [
        spec(Kind.ZPOW, d, (1,)),
        spec(Kind.XPOW, d, (2,)),
        spec(Kind.H, d),
        spec(Kind.NEG, d),
        spec(Kind.ADD, d),
        spec(Kind.NADD, d, (1,)),
        spec(Kind.SWAP, d, (2, 3)),
        spec(Kind.CUP, d),
        spec(Kind.NORMALIZED_CAP, d),
        spec(Kind.BASIS_STATE, d, (2,)),
        spec(Kind.BELL_STATE, d, (1, 2)),
        spec(Kind.COPY_DOT, d, (1, 2)),
        spec(Kind.PLUS_DOT, d, (2, 1), color=color),
    ]
    for item in specs:
        assert equal_within(item.dagger().to_tensor(), dagger(item.to_tensor())), item.describe()


def test_closed_form_transposes_match_tensor_transposes() -> None:
    rng = np.random.default_rng(12)
    d = 3
    color = random_unitary(d, rng)
    specs = [
        spec(Kind.ZPOW, d, (1,)),
        spec(Kind.XPOW, d, (2,)),
        spec(Kind.H, d),
        spec(Kind.NEG, d),
        spec(Kind.ADD, d),
        spec(Kind.NADD, d),
        spec(Kind.SWAP, d, (2, 3)),
        spec(Kind.CAP, d),
        spec(Kind.PLUS_STATE, d),
        spec(Kind.BELL_STATE, d, (1, 2)),
        spec(Kind.COPY_DOT, d, (2, 1), color=color),
    ]
    for item in specs:
        assert equal_within(item.transpose().to_tensor(), transpose_cb(item.to_tensor())), item.describe()


def test_recolor_then_undo_leaves_dot_uncolored() -> None:
    rng = np.random.default_rng(13)
    d = 4
    u = random_unitary(d, rng)
    dot = spec(Kind.COPY_DOT, d, (1, 2))
    colored = recolor(dot, u)
    assert colored.color is not None
    back = recolor(colored, from_matrix(as_matrix(u).conj().T, (d,), (d,)))
    assert back.color is None


def test_invalid_generators_raise() -> None:
    with pytest.raises(GeneratorError):
        spec(Kind.BASIS_STATE, 3, (3,))
    with pytest.raises(GeneratorError):
        spec(Kind.H, 3, (1,))
    with pytest.raises(GeneratorError):
        spec(Kind.H, 2, color=identity((2,)))
    with pytest.raises(GeneratorError):
        spec(Kind.COPY_DOT, 2, (1, 1), color=from_matrix(np.ones((2, 2)), (2,), (2,)))
    with pytest.raises(GeneratorError):
        gate("Bogus", 2)
