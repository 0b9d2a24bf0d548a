import numpy as np
import pytest

from qcat.tensor_core import (
    ComplexTensor,
    TensorError,
    as_matrix,
    compose,
    contract,
    dagger,
    equal_within,
    from_matrix,
    identity,
    input_legs,
    kron,
    output_legs,
    proportional_within,
    scalar,
    scale,
    transpose_cb,
)


def _random_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def test_outputs_must_precede_inputs() -> None:
    with pytest.raises(TensorError):
        ComplexTensor(input_legs([2]) + output_legs([2]), np.eye(2))


def test_amplitude_count_must_match_legs() -> None:
    with pytest.raises(TensorError):
        from_matrix(np.ones(3), (2,), ())


def test_compose_runs_f_first() -> None:
    rng = np.random.default_rng(1)
    f = from_matrix(_random_matrix(rng, 3, 2), (3,), (2,))
    g = from_matrix(_random_matrix(rng, 4, 3), (4,), (3,))
    result = compose(g, f)
    assert result.signature == ((4,), (2,))
    assert np.allclose(as_matrix(result), as_matrix(g) @ as_matrix(f))


def test_compose_rejects_dimension_mismatch() -> None:
    f = identity((2,))
    g = identity((3,))
    with pytest.raises(TensorError, match="Dimension mismatch"):
        compose(g, f)


def test_dagger_and_transpose_are_involutions() -> None:
    rng = np.random.default_rng(2)
    t = from_matrix(_random_matrix(rng, 6, 3), (2, 3), (3,))
    assert equal_within(dagger(dagger(t)), t)
    assert equal_within(transpose_cb(transpose_cb(t)), t)
    assert dagger(t).signature == ((3,), (2, 3))


def test_kron_is_big_endian() -> None:
    a = from_matrix(np.diag([1, 2]), (2,), (2,))
    b = from_matrix(np.diag([1, 10, 100]), (3,), (3,))
    product = kron(a, b)
    assert product.signature == ((2, 3), (2, 3))
    assert product.data[1, 2, 1, 2] == 200


def test_scalar_tensor_has_no_legs() -> None:
    t = scale(scalar(2.0), 1.5j)
    assert t.is_scalar()
    assert t.scalar_value() == 3j


def test_contract_matches_matrix_chain() -> None:
    rng = np.random.default_rng(3)
    a = from_matrix(_random_matrix(rng, 2, 3), (2,), (3,))
    b = from_matrix(_random_matrix(rng, 3, 4), (3,), (4,))
    c = from_matrix(_random_matrix(rng, 4, 5), (4,), (5,))
    edges = [(0, 1, 1, 0), (1, 1, 2, 0)]
    boundary = [(0, 0), (2, 1)]
    result = contract([a, b, c], edges, boundary)
    expected = as_matrix(a) @ as_matrix(b) @ as_matrix(c)
    assert np.allclose(as_matrix(result), expected)


def test_contract_is_independent_of_edge_order() -> None:
    rng = np.random.default_rng(4)
    tensors = [
        from_matrix(rng.normal(size=(2, 2, 2)), (2, 2), (2,)),
        from_matrix(rng.normal(size=(2, 2)), (2,), (2,)),
        from_matrix(rng.normal(size=(2, 2, 2)), (2,), (2, 2)),
    ]
    edges = [(0, 0, 1, 1), (1, 0, 2, 1), (0, 1, 2, 2)]
    boundary = [(2, 0), (0, 2)]
    greedy = contract(tensors, edges, boundary)
    for order in ([0, 1, 2], [2, 1, 0], [1, 0, 2]):
        assert equal_within(contract(tensors, edges, boundary, order=order), greedy)


def test_contract_reports_dangling_and_reused_legs() -> None:
    t = identity((2,))
    with pytest.raises(TensorError, match="Dangling"):
        contract([t], [], [(0, 0)])
    with pytest.raises(TensorError, match="more than once"):
        contract([t], [(0, 0, 0, 1)], [(0, 0)])


def test_contract_rejects_mismatched_edge_dims() -> None:
    a = identity((2,))
    b = identity((3,))
    with pytest.raises(TensorError, match="different dims"):
        contract([a, b], [(0, 0, 1, 1)], [(0, 1), (1, 0)])


def test_contract_rejects_missing_legs_and_nodes() -> None:
    a = identity((2,))
    b = identity((2,))
    with pytest.raises(TensorError, match="does not exist"):
        contract([a, b], [(0, 0, 1, 7)], [(0, 1), (1, 0)])
    with pytest.raises(TensorError, match="does not exist"):
        contract([a, b], [(0, 0, 5, 1)], [(0, 1), (1, 0)])


def test_proportional_within_returns_ratio() -> None:
    rng = np.random.default_rng(5)
    t = from_matrix(_random_matrix(rng, 3, 3), (3,), (3,))
    ratio = proportional_within(scale(t, 2 - 1j), t)
    assert ratio is not None
    assert abs(ratio.value - (2 - 1j)) < 1e-12
    assert proportional_within(identity((3,)), t) is None
