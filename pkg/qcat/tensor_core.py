"""Dense complex tensors with typed legs.

Leg order is always outputs first, then inputs. Amplitudes are stored as a
read-only numpy array shaped by the leg dims, so C order is the big-endian
linearization over the legs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9


class TensorError(ValueError):
    pass


class Direction(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class LegType:
    direction: Direction
    dim: int

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise TensorError(f"Leg dimension must be a positive integer, got {self.dim!r}.")

    def flipped(self) -> LegType:
        other = Direction.INPUT if self.direction is Direction.OUTPUT else Direction.OUTPUT
        return LegType(direction=other, dim=self.dim)


@dataclass(frozen=True)
class Scalar:
    value: complex

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise TensorError(f"Scalar must be finite, got {self.value!r}.")


def output_legs(dims: Iterable[int]) -> tuple[LegType, ...]:
    return tuple(LegType(Direction.OUTPUT, int(d)) for d in dims)


def input_legs(dims: Iterable[int]) -> tuple[LegType, ...]:
    return tuple(LegType(Direction.INPUT, int(d)) for d in dims)


class ComplexTensor:
    __slots__ = ("legs", "data")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, legs: Sequence[LegType], data: object) -> None:
        legs = tuple(legs)
        seen_input = False
        for leg in legs:
            if leg.direction is Direction.INPUT:
                seen_input = True
            elif seen_input:
                raise TensorError("Output legs must precede input legs.")
        shape = tuple(leg.dim for leg in legs)
        array = np.asarray(data, dtype=np.complex128)
        if array.size != math.prod(shape):
            raise TensorError(
                f"Expected {math.prod(shape)} amplitudes for legs {shape}, got {array.size}."
            )
        array = np.array(array.reshape(shape), dtype=np.complex128, copy=True)
        array.setflags(write=False)
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "data", array)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ComplexTensor is immutable.")

    @property
    def outputs(self) -> tuple[LegType, ...]:
        return tuple(leg for leg in self.legs if leg.direction is Direction.OUTPUT)

    @property
    def inputs(self) -> tuple[LegType, ...]:
        return tuple(leg for leg in self.legs if leg.direction is Direction.INPUT)

    @property
    def out_dims(self) -> tuple[int, ...]:
        return tuple(leg.dim for leg in self.outputs)

    @property
    def in_dims(self) -> tuple[int, ...]:
        return tuple(leg.dim for leg in self.inputs)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(leg.dim for leg in self.legs)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.data.reshape(-1)

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.out_dims, self.in_dims

    def is_scalar(self) -> bool:
        return not self.legs

    def scalar_value(self) -> complex:
        if self.legs:
            raise TensorError("Tensor has open legs; it is not a scalar.")
        return complex(self.data.reshape(-1)[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplexTensor):
            return NotImplemented
        return self.legs == other.legs and bool(np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"ComplexTensor(out={self.out_dims}, in={self.in_dims})"


def from_matrix(matrix: object, out_dims: Sequence[int], in_dims: Sequence[int]) -> ComplexTensor:
    return ComplexTensor(output_legs(out_dims) + input_legs(in_dims), matrix)


def as_matrix(t: ComplexTensor) -> np.ndarray:
    rows = math.prod(t.out_dims)
    cols = math.prod(t.in_dims)
    return t.data.reshape(rows, cols)


def identity(dims: Sequence[int]) -> ComplexTensor:
    size = math.prod(dims)
    return from_matrix(np.eye(size), dims, dims)


def scalar(value: complex) -> ComplexTensor:
    return ComplexTensor((), np.asarray([value]))


def scale(t: ComplexTensor, factor: complex) -> ComplexTensor:
    return ComplexTensor(t.legs, t.data * factor)


def conjugate(t: ComplexTensor) -> ComplexTensor:
    return ComplexTensor(t.legs, np.conj(t.data))


def kron(a: ComplexTensor, b: ComplexTensor) -> ComplexTensor:
    matrix = np.kron(as_matrix(a), as_matrix(b))
    return from_matrix(matrix, a.out_dims + b.out_dims, a.in_dims + b.in_dims)


def compose(g: ComplexTensor, f: ComplexTensor) -> ComplexTensor:
    """Return g∘f: f runs first, its outputs feed g's inputs in order."""
    if len(f.out_dims) != len(g.in_dims):
        raise TensorError(
            f"Cannot compose: f has {len(f.out_dims)} outputs, g has {len(g.in_dims)} inputs."
        )
    for position, (f_dim, g_dim) in enumerate(zip(f.out_dims, g.in_dims)):
        if f_dim != g_dim:
            raise TensorError(
                f"Dimension mismatch at leg pair {position}: f output dim {f_dim} "
                f"!= g input dim {g_dim}."
            )
    return from_matrix(as_matrix(g) @ as_matrix(f), g.out_dims, f.in_dims)


def dagger(t: ComplexTensor) -> ComplexTensor:
    return from_matrix(as_matrix(t).conj().T, t.in_dims, t.out_dims)


def transpose_cb(t: ComplexTensor) -> ComplexTensor:
    return from_matrix(as_matrix(t).T, t.in_dims, t.out_dims)


def _check_signature(a: ComplexTensor, b: ComplexTensor) -> None:
    if a.legs != b.legs:
        raise TensorError(f"Signature mismatch: {a.signature} vs {b.signature}.")


def max_abs_difference(a: ComplexTensor, b: ComplexTensor) -> float:
    _check_signature(a, b)
    if a.data.size == 0:
        return 0.0
    return float(np.max(np.abs(a.data - b.data)))


def equal_within(a: ComplexTensor, b: ComplexTensor, tol: float = DEFAULT_TOLERANCE) -> bool:
    return max_abs_difference(a, b) <= tol


def proportional_within(
    a: ComplexTensor, b: ComplexTensor, tol: float = DEFAULT_TOLERANCE
) -> Scalar | None:
    _check_signature(a, b)
    flat_b = b.amplitudes
    if flat_b.size == 0 or not np.any(flat_b):
        raise TensorError("Reference tensor is zero; proportionality is undefined.")
    pivot = int(np.argmax(np.abs(flat_b)))
    ratio = complex(a.amplitudes[pivot] / flat_b[pivot])
    if np.max(np.abs(a.amplitudes - ratio * flat_b)) > tol:
        return None
    return Scalar(ratio)


# -- tensor network contraction ------------------------------------------------

Edge = tuple[int, int, int, int]
OpenLeg = tuple[int, int]


@dataclass
class _Operand:
    array: np.ndarray
    labels: list[int]


def contract(
    nodes: Sequence[ComplexTensor],
    edges: Sequence[Edge],
    boundary: Sequence[OpenLeg],
    order: Sequence[int] | None = None,
) -> ComplexTensor:
    """Einstein-sum a network of tensors.

    ``edges`` are ``(node_a, leg_a, node_b, leg_b)`` joins and ``boundary``
    lists the open legs in the order the result should carry them. Every leg
    of every node must appear exactly once across the two. ``order`` is an
    optional permutation of edge indices; without it the greedy
    smallest-intermediate heuristic picks the pairwise contractions.
    """
    label_of: dict[OpenLeg, int] = {}
    dims: dict[int, int] = {}

    def claim(leg: OpenLeg, label: int) -> None:
        node, index = leg
        if not 0 <= node < len(nodes) or not 0 <= index < len(nodes[node].legs):
            raise TensorError(f"Leg {leg} does not exist in the network.")
        if leg in label_of:
            raise TensorError(f"Leg {leg} is used more than once.")
        label_of[leg] = label
        dims.setdefault(label, nodes[node].legs[index].dim)

    for label, (node_a, leg_a, node_b, leg_b) in enumerate(edges):
        claim((node_a, leg_a), label)
        claim((node_b, leg_b), label)
        dim_a = nodes[node_a].legs[leg_a].dim
        dim_b = nodes[node_b].legs[leg_b].dim
        if dim_a != dim_b:
            raise TensorError(
                f"Edge {label} joins legs of different dims: {dim_a} vs {dim_b}."
            )

    boundary_labels: list[int] = []
    for position, leg in enumerate(boundary):
        label = len(edges) + position
        claim(leg, label)
        boundary_labels.append(label)

    for node_index, tensor in enumerate(nodes):
        for leg_index in range(len(tensor.legs)):
            if (node_index, leg_index) not in label_of:
                raise TensorError(f"Dangling leg ({node_index}, {leg_index}).")

    result_legs = tuple(nodes[node].legs[index] for node, index in boundary)
    if not nodes:
        if boundary:
            raise TensorError("Boundary legs given for an empty network.")
        return scalar(1.0)

    operands = [
        _trace_repeated(
            _Operand(
                array=tensor.data,
                labels=[label_of[(n, k)] for k in range(len(tensor.legs))],
            )
        )
        for n, tensor in enumerate(nodes)
    ]

    if order is None:
        while len(operands) > 1:
            i, j = _greedy_pick(operands, dims)
            merged = _pairwise(operands[i], operands[j])
            operands = [op for k, op in enumerate(operands) if k not in (i, j)]
            operands.insert(min(i, j), merged)
    else:
        if sorted(order) != list(range(len(edges))):
            raise TensorError("Contraction order must be a permutation of edge indices.")
        for edge_index in order:
            holders = [k for k, op in enumerate(operands) if edge_index in op.labels]
            if len(holders) == 2:
                i, j = holders
                merged = _pairwise(operands[i], operands[j])
                operands = [op for k, op in enumerate(operands) if k not in (i, j)]
                operands.insert(i, merged)
        while len(operands) > 1:
            merged = _pairwise(operands[0], operands[1])
            operands = [merged] + operands[2:]

    final = operands[0]
    permutation = [final.labels.index(label) for label in boundary_labels]
    array = np.transpose(final.array, permutation) if permutation else final.array
    return ComplexTensor(result_legs, array)


def _compact(label_lists: Sequence[Sequence[int]]) -> dict[int, int]:
    mapping: dict[int, int] = {}
    for labels in label_lists:
        for label in labels:
            mapping.setdefault(label, len(mapping))
    if len(mapping) > 52:
        raise TensorError("Intermediate tensor has too many legs for einsum.")
    return mapping


def _trace_repeated(operand: _Operand) -> _Operand:
    if len(set(operand.labels)) == len(operand.labels):
        return operand
    kept = [label for label in operand.labels if operand.labels.count(label) == 1]
    mapping = _compact([operand.labels])
    array = np.einsum(
        operand.array,
        [mapping[label] for label in operand.labels],
        [mapping[label] for label in kept],
    )
    return _Operand(array=array, labels=kept)


def _pairwise(a: _Operand, b: _Operand) -> _Operand:
    shared = set(a.labels) & set(b.labels)
    out = [label for label in a.labels if label not in shared]
    out += [label for label in b.labels if label not in shared]
    mapping = _compact([a.labels, b.labels])
    array = np.einsum(
        a.array,
        [mapping[label] for label in a.labels],
        b.array,
        [mapping[label] for label in b.labels],
        [mapping[label] for label in out],
    )
    return _trace_repeated(_Operand(array=array, labels=out))


def _greedy_pick(operands: Sequence[_Operand], dims: dict[int, int]) -> tuple[int, int]:
    best: tuple[int, int, int, int] | None = None
    for i in range(len(operands)):
        labels_i = set(operands[i].labels)
        for j in range(i + 1, len(operands)):
            labels_j = set(operands[j].labels)
            connected = 0 if labels_i & labels_j else 1
            size = math.prod(dims[label] for label in labels_i ^ labels_j)
            key = (connected, size, i, j)
            if best is None or key < best:
                best = key
    assert best is not None
    return best[2], best[3]
