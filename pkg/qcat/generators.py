"""Generator catalog: qudit gates, states, cups and caps, dots, boxes and scalar nodes."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from qcat.tensor_core import (
    DEFAULT_TOLERANCE,
    ComplexTensor,
    as_matrix,
    compose,
    dagger,
    from_matrix,
    identity,
    scalar,
    transpose_cb,
)


class GeneratorError(ValueError):
    pass


class Kind(str, Enum):
    H = "H"
    NEG = "NEG"
    ZPOW = "Zpow"
    XPOW = "Xpow"
    ADD = "ADD"
    NADD = "NADD"
    SWAP = "SWAP"
    BASIS_STATE = "BasisState"
    PLUS_STATE = "PlusState"
    BELL_STATE = "BellState"
    CUP = "Cup"
    CAP = "Cap"
    NORMALIZED_CUP = "NormalizedCup"
    NORMALIZED_CAP = "NormalizedCap"
    COPY_DOT = "CopyDot"
    PLUS_DOT = "PlusDot"
    BOX = "Box"
    SCALAR_NODE = "ScalarNode"


GATE_KINDS = frozenset({Kind.H, Kind.NEG, Kind.ZPOW, Kind.XPOW, Kind.ADD, Kind.NADD, Kind.SWAP})
STATE_KINDS = frozenset({Kind.BASIS_STATE, Kind.PLUS_STATE, Kind.BELL_STATE})
COMPACT_KINDS = frozenset({Kind.CUP, Kind.CAP, Kind.NORMALIZED_CUP, Kind.NORMALIZED_CAP})
DOT_KINDS = frozenset({Kind.COPY_DOT, Kind.PLUS_DOT})
SINGLE_QUDIT_KINDS = frozenset({Kind.H, Kind.NEG, Kind.ZPOW, Kind.XPOW})

_DAGGER_PAIRS = {
    Kind.CUP: Kind.CAP,
    Kind.CAP: Kind.CUP,
    Kind.NORMALIZED_CUP: Kind.NORMALIZED_CAP,
    Kind.NORMALIZED_CAP: Kind.NORMALIZED_CUP,
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Symbolic description of one diagram node.

    ``params`` holds exponents (Zpow/Xpow), the orientation of ADD/NADD
    (0: control on the first wire, 1: control on the second), the pair of
    leg dims of SWAP, the basis index of BasisState, the Bell labels (a, b),
    or the dot arity (m inputs, n outputs).
    """

    kind: Kind
    dim: int = 2
    params: tuple[int, ...] = ()
    adjoint: bool = False
    color: ComplexTensor | None = field(default=None, compare=True)
    tensor: ComplexTensor | None = None
    label: str = ""
    value: complex = 1.0

    def __post_init__(self) -> None:
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))
        if kind is Kind.BOX:
            if self.tensor is None:
                raise GeneratorError("Box nodes need an explicit tensor.")
            return
        if kind is Kind.SCALAR_NODE:
            if not cmath.isfinite(complex(self.value)):
                raise GeneratorError("ScalarNode value must be finite.")
            object.__setattr__(self, "value", complex(self.value))
            return
        if self.dim < 1:
            raise GeneratorError(f"{kind.value} dimension must be positive, got {self.dim}.")
        object.__setattr__(self, "params", _normalize_params(kind, self.dim, self.params))
        if self.color is not None:
            if kind not in DOT_KINDS:
                raise GeneratorError("Only dots can carry a color.")
            _check_unitary(self.color, self.dim)

    @property
    def arity(self) -> tuple[int, int]:
        if self.kind not in DOT_KINDS:
            raise GeneratorError(f"{self.kind.value} is not a dot.")
        return self.params[0], self.params[1]

    @property
    def out_dims(self) -> tuple[int, ...]:
        outs, ins = self._base_signature()
        return ins if self.adjoint else outs

    @property
    def in_dims(self) -> tuple[int, ...]:
        outs, ins = self._base_signature()
        return outs if self.adjoint else ins

    @property
    def n_ports(self) -> int:
        return len(self.out_dims) + len(self.in_dims)

    def port_dim(self, port: int) -> int:
        dims = self.out_dims + self.in_dims
        return dims[port]

    def is_output_port(self, port: int) -> bool:
        return port < len(self.out_dims)

    def _base_signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        d = self.dim
        kind = self.kind
        if kind in SINGLE_QUDIT_KINDS:
            return (d,), (d,)
        if kind in (Kind.ADD, Kind.NADD):
            return (d, d), (d, d)
        if kind is Kind.SWAP:
            first, second = self.params
            return (second, first), (first, second)
        if kind in (Kind.BASIS_STATE, Kind.PLUS_STATE):
            return (d,), ()
        if kind in (Kind.BELL_STATE, Kind.CUP, Kind.NORMALIZED_CUP):
            return (d, d), ()
        if kind in (Kind.CAP, Kind.NORMALIZED_CAP):
            return (), (d, d)
        if kind in DOT_KINDS:
            m, n = self.params
            return (d,) * n, (d,) * m
        if kind is Kind.BOX:
            assert self.tensor is not None
            return self.tensor.out_dims, self.tensor.in_dims
        return (), ()

    def to_tensor(self) -> ComplexTensor:
        if self.kind is Kind.BOX:
            assert self.tensor is not None
            base = self.tensor
        elif self.kind is Kind.SCALAR_NODE:
            base = scalar(self.value)
        elif self.kind in DOT_KINDS:
            m, n = self.params
            if self.kind is Kind.COPY_DOT:
                base = copy_dot(self.dim, m, n, self.color)
            else:
                base = plus_dot(self.dim, m, n)
                if self.color is not None:
                    base = _conjugate_legs(base, as_matrix(self.color), n, m)
        else:
            base = _named_tensor(self.kind, self.dim, self.params)
        return dagger(base) if self.adjoint else base

    def dagger(self) -> GeneratorSpec:
        kind = self.kind
        if kind is Kind.ZPOW or kind is Kind.XPOW:
            return replace(self, params=(-self.params[0],))
        if kind in (Kind.NEG, Kind.NADD):
            return self
        if kind is Kind.SWAP:
            return replace(self, params=(self.params[1], self.params[0]), dim=self.params[1])
        if kind in _DAGGER_PAIRS:
            return replace(self, kind=_DAGGER_PAIRS[kind])
        if kind in DOT_KINDS:
            m, n = self.params
            return replace(self, params=(n, m))
        if kind is Kind.SCALAR_NODE:
            return replace(self, value=complex(self.value).conjugate())
        if kind is Kind.BOX:
            assert self.tensor is not None
            return replace(self, tensor=dagger(self.tensor))
        return replace(self, adjoint=not self.adjoint)

    def transpose(self) -> GeneratorSpec:
        """Transpose in the computational basis, using closed forms where known."""
        kind = self.kind
        if kind in (Kind.ZPOW, Kind.H, Kind.NEG, Kind.NADD, Kind.SCALAR_NODE):
            return self
        if kind is Kind.XPOW:
            return replace(self, params=(-self.params[0],))
        if kind is Kind.SWAP:
            return replace(self, params=(self.params[1], self.params[0]), dim=self.params[1])
        if kind in _DAGGER_PAIRS:
            return replace(self, kind=_DAGGER_PAIRS[kind])
        if kind in (Kind.ADD, Kind.BASIS_STATE, Kind.PLUS_STATE):
            return replace(self, adjoint=not self.adjoint)
        if kind is Kind.BELL_STATE:
            a, b = self.params
            return replace(self, params=(-a, b), adjoint=not self.adjoint)
        if kind in DOT_KINDS:
            m, n = self.params
            color = None
            if self.color is not None:
                color = from_matrix(np.conj(as_matrix(self.color)), (self.dim,), (self.dim,))
            return replace(self, params=(n, m), color=color)
        return box(transpose_cb(self.to_tensor()), label=f"{self.label}^T" if self.label else "")

    def describe(self) -> str:
        text = self.kind.value
        if self.kind is Kind.BOX:
            text = self.label or "Box"
        elif self.kind is Kind.SCALAR_NODE:
            text = f"{self.value:.4g}"
        elif self.params:
            text += "(" + ",".join(str(p) for p in self.params) + ")"
        if self.color is not None:
            text += "[colored]"
        return text + ("†" if self.adjoint else "")


def _normalize_params(kind: Kind, d: int, params: tuple[int, ...]) -> tuple[int, ...]:
    if kind in (Kind.H, Kind.NEG, Kind.CUP, Kind.CAP, Kind.NORMALIZED_CUP, Kind.NORMALIZED_CAP, Kind.PLUS_STATE):
        if params:
            raise GeneratorError(f"{kind.value} takes no parameters, got {params}.")
        return ()
    if kind in (Kind.ZPOW, Kind.XPOW):
        if len(params) != 1:
            raise GeneratorError(f"{kind.value} takes one exponent, got {params}.")
        return (params[0] % d,)
    if kind in (Kind.ADD, Kind.NADD):
        orientation = params or (0,)
        if len(orientation) != 1 or orientation[0] not in (0, 1):
            raise GeneratorError(f"{kind.value} orientation must be 0 or 1, got {params}.")
        return orientation
    if kind is Kind.SWAP:
        pair = params or (d, d)
        if len(pair) != 2 or min(pair) < 1:
            raise GeneratorError(f"SWAP needs two positive leg dims, got {params}.")
        return pair
    if kind is Kind.BASIS_STATE:
        if len(params) != 1 or not 0 <= params[0] < d:
            raise GeneratorError(f"Basis index out of range for d={d}: {params}.")
        return params
    if kind is Kind.BELL_STATE:
        if len(params) != 2:
            raise GeneratorError(f"BellState takes labels (a, b), got {params}.")
        return (params[0] % d, params[1] % d)
    if kind in DOT_KINDS:
        if len(params) != 2 or min(params) < 0:
            raise GeneratorError(f"Dot arity must be two non-negative integers, got {params}.")
        return params
    return params


def _check_unitary(u: ComplexTensor, d: int, tol: float = DEFAULT_TOLERANCE) -> None:
    if u.out_dims != (d,) or u.in_dims != (d,):
        raise GeneratorError(f"Color must be a {d}x{d} operator, got {u.signature}.")
    matrix = as_matrix(u)
    if np.max(np.abs(matrix @ matrix.conj().T - np.eye(d))) > tol:
        raise GeneratorError("Color is not unitary within tolerance.")


def _omega(d: int) -> complex:
    return cmath.exp(2j * math.pi / d)


@lru_cache(maxsize=512)
def _named_tensor(kind: Kind, d: int, params: tuple[int, ...]) -> ComplexTensor:
    omega = _omega(d)
    if kind is Kind.H:
        a, b = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        return from_matrix(omega ** (a * b) / math.sqrt(d), (d,), (d,))
    if kind is Kind.NEG:
        matrix = np.zeros((d, d))
        for a in range(d):
            matrix[(-a) % d, a] = 1
        return from_matrix(matrix, (d,), (d,))
    if kind is Kind.ZPOW:
        (a,) = params
        return from_matrix(np.diag([omega ** (a * k) for k in range(d)]), (d,), (d,))
    if kind is Kind.XPOW:
        (b,) = params
        matrix = np.zeros((d, d))
        for k in range(d):
            matrix[(k + b) % d, k] = 1
        return from_matrix(matrix, (d,), (d,))
    if kind in (Kind.ADD, Kind.NADD):
        (orientation,) = params
        matrix = np.zeros((d * d, d * d))
        for x in range(d):
            for y in range(d):
                if kind is Kind.ADD and orientation == 0:
                    out = (x, (y + x) % d)
                elif kind is Kind.ADD:
                    out = ((x + y) % d, y)
                elif orientation == 0:
                    out = (x, (-x - y) % d)
                else:
                    out = ((-x - y) % d, y)
                matrix[out[0] * d + out[1], x * d + y] = 1
        return from_matrix(matrix, (d, d), (d, d))
    if kind is Kind.SWAP:
        first, second = params
        matrix = np.zeros((first * second, first * second))
        for x in range(first):
            for y in range(second):
                matrix[y * first + x, x * second + y] = 1
        return from_matrix(matrix, (second, first), (first, second))
    if kind is Kind.BASIS_STATE:
        vector = np.zeros(d)
        vector[params[0]] = 1
        return from_matrix(vector, (d,), ())
    if kind is Kind.PLUS_STATE:
        return from_matrix(np.full(d, 1 / math.sqrt(d)), (d,), ())
    if kind is Kind.BELL_STATE:
        a, b = params
        vector = np.zeros(d * d, dtype=complex)
        for k in range(d):
            vector[k * d + (k + b) % d] = omega ** (a * k) / math.sqrt(d)
        return from_matrix(vector, (d, d), ())
    if kind in COMPACT_KINDS:
        vector = np.zeros(d * d)
        for k in range(d):
            vector[k * d + k] = 1
        if kind in (Kind.NORMALIZED_CUP, Kind.NORMALIZED_CAP):
            vector = vector / math.sqrt(d)
        if kind in (Kind.CUP, Kind.NORMALIZED_CUP):
            return from_matrix(vector, (d, d), ())
        return from_matrix(vector, (), (d, d))
    raise GeneratorError(f"No closed form for {kind.value}.")


# -- public constructors --------------------------------------------------------


def spec(kind: Kind | str, d: int, params: Sequence[int] = (), **extra: object) -> GeneratorSpec:
    return GeneratorSpec(kind=Kind(kind), dim=d, params=tuple(params), **extra)  # type: ignore[arg-type]


def gate(kind: Kind | str, d: int, params: Sequence[int] = ()) -> ComplexTensor:
    try:
        resolved = Kind(kind)
    except ValueError as exc:
        raise GeneratorError(f"Unknown gate kind: {kind!r}.") from exc
    if resolved not in GATE_KINDS:
        raise GeneratorError(f"{resolved.value} is not a gate.")
    if resolved is not Kind.SWAP and d < 2:
        raise GeneratorError(f"Gates need d >= 2, got {d}.")
    return spec(resolved, d, params).to_tensor()


def state(kind: Kind | str, d: int, params: Sequence[int] = ()) -> ComplexTensor:
    resolved = Kind(kind)
    if resolved not in STATE_KINDS:
        raise GeneratorError(f"{resolved.value} is not a state.")
    if resolved is Kind.BELL_STATE and any(not 0 <= p < d for p in params):
        raise GeneratorError(f"Bell labels out of range for d={d}: {tuple(params)}.")
    return spec(resolved, d, params).to_tensor()


def compact(kind: Kind | str, d: int) -> ComplexTensor:
    resolved = Kind(kind)
    if resolved not in COMPACT_KINDS:
        raise GeneratorError(f"{resolved.value} is not a cup or cap.")
    return spec(resolved, d).to_tensor()


def pauli(d: int, z: int, x: int) -> ComplexTensor:
    """Z^z X^x (X applied first)."""
    return compose(gate(Kind.ZPOW, d, (z,)), gate(Kind.XPOW, d, (x,)))


def box(tensor: ComplexTensor, label: str = "") -> GeneratorSpec:
    dims = tensor.out_dims + tensor.in_dims
    return GeneratorSpec(kind=Kind.BOX, dim=dims[0] if dims else 1, tensor=tensor, label=label)


def scalar_node(value: complex) -> GeneratorSpec:
    return GeneratorSpec(kind=Kind.SCALAR_NODE, dim=1, value=value)


def _check_arity(m: int, n: int) -> None:
    if m < 0 or n < 0:
        raise GeneratorError(f"Invalid dot arity ({m}, {n}).")


def _conjugate_legs(t: ComplexTensor, u: np.ndarray, n: int, m: int) -> ComplexTensor:
    """Apply u to each of the n output legs and u† to each of the m input legs."""
    data = np.asarray(t.data)
    for axis in range(n):
        data = np.moveaxis(np.tensordot(u, data, axes=([1], [axis])), 0, axis)
    u_dagger = u.conj().T
    for axis in range(n, n + m):
        data = np.moveaxis(np.tensordot(data, u_dagger, axes=([axis], [0])), -1, axis)
    return ComplexTensor(t.legs, data)


def copy_dot(d: int, m: int, n: int, color: ComplexTensor | None = None) -> ComplexTensor:
    _check_arity(m, n)
    if m + n == 0:
        return scalar(d)
    data = np.zeros((d,) * (n + m), dtype=complex)
    for k in range(d):
        data[(k,) * (n + m)] = 1
    base = from_matrix(data, (d,) * n, (d,) * m)
    if color is None:
        return base
    _check_unitary(color, d)
    return _conjugate_legs(base, as_matrix(color), n, m)


def plus_dot(d: int, m: int, n: int) -> ComplexTensor:
    _check_arity(m, n)
    legs = n + m
    prefactor = d ** (-(legs - 2) / 2)
    if legs == 0:
        return scalar(prefactor)
    index_sum = np.indices((d,) * legs).sum(axis=0)
    data = np.where(index_sum % d == 0, prefactor, 0.0)
    return from_matrix(data, (d,) * n, (d,) * m)


def plus_dot_via_fourier(d: int, m: int, n: int) -> ComplexTensor:
    """H^{⊗n} · COPY^{m→n} · H^{⊗m}, the second formula for the plus dot."""
    _check_arity(m, n)
    h = as_matrix(gate(Kind.H, d))
    data = np.asarray(copy_dot(d, m, n).data)
    for axis in range(n):
        data = np.moveaxis(np.tensordot(h, data, axes=([1], [axis])), 0, axis)
    for axis in range(n, n + m):
        data = np.moveaxis(np.tensordot(data, h, axes=([axis], [0])), -1, axis)
    return from_matrix(data, (d,) * n, (d,) * m)


def recolor(dot: GeneratorSpec, u: ComplexTensor) -> GeneratorSpec:
    if dot.kind not in DOT_KINDS:
        raise GeneratorError(f"Only dots can be recolored, got {dot.kind.value}.")
    _check_unitary(u, dot.dim)
    matrix = as_matrix(u)
    if dot.color is not None:
        matrix = matrix @ as_matrix(dot.color)
    if np.max(np.abs(matrix - np.eye(dot.dim))) <= DEFAULT_TOLERANCE:
        return replace(dot, color=None)
    return replace(dot, color=from_matrix(matrix, (dot.dim,), (dot.dim,)))


def is_real_color(dot: GeneratorSpec, tol: float = DEFAULT_TOLERANCE) -> bool:
    if dot.color is None:
        return True
    return bool(np.max(np.abs(dot.color.data.imag)) <= tol)


def colors_match(a: GeneratorSpec, b: GeneratorSpec, tol: float = DEFAULT_TOLERANCE) -> bool:
    first = identity((a.dim,)) if a.color is None else a.color
    second = identity((b.dim,)) if b.color is None else b.color
    return bool(np.max(np.abs(first.data - second.data)) <= tol)
