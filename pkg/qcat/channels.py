"""Complete sets of morphisms and the channels they define.

A set {f_i} is complete when Σ f_i† f_i = I; it then acts on density
operators as ρ ↦ Σ f_i ρ f_i†. This module also expands caps and the ⟨0|,
⟨+| costates into measurements with Pauli corrections, and decides whether a
two-qudit state is a locally rotated cup.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from qcat.diagram import Diagram, DiagramBuilder, NodePort, evaluate
from qcat.generators import Kind, gate, pauli
from qcat.generators import spec as make_spec
from qcat.settings import get_settings
from qcat.tensor_core import (
    ComplexTensor,
    as_matrix,
    compose,
    dagger,
    from_matrix,
    identity,
    kron,
    proportional_within,
    scale,
)

logger = logging.getLogger(__name__)


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class KrausBranch:
    """One element of a complete set.

    ``corrections`` lists (z, x) exponents of the Pauli Z^z X^x bookkept for
    this branch, one pair per corrected wire.
    """

    label: Hashable
    tensor: ComplexTensor
    diagram: Diagram | None = None
    corrections: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class KrausSet:
    branches: tuple[KrausBranch, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ChannelError("A Kraus set needs at least one branch.")
        first = self.branches[0].tensor.signature
        for branch in self.branches[1:]:
            if branch.tensor.signature != first:
                raise ChannelError(
                    f"Branch {branch.label!r} has signature {branch.tensor.signature}, expected {first}."
                )

    @classmethod
    def of(cls, tensors: Sequence[ComplexTensor], labels: Sequence[Hashable] | None = None) -> KrausSet:
        names = list(labels) if labels is not None else list(range(len(tensors)))
        return cls(tuple(KrausBranch(label, tensor) for label, tensor in zip(names, tensors)))

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.branches[0].tensor.signature

    @property
    def labels(self) -> list[Hashable]:
        return [branch.label for branch in self.branches]

    def __len__(self) -> int:
        return len(self.branches)

    def branch(self, label: Hashable) -> KrausBranch:
        for branch in self.branches:
            if branch.label == label:
                return branch
        raise ChannelError(f"No branch labelled {label!r}.")


@dataclass(frozen=True)
class DensityOperator:
    tensor: ComplexTensor

    def __post_init__(self) -> None:
        settings = get_settings()
        t = self.tensor
        if t.out_dims != t.in_dims:
            raise ChannelError(f"A density operator needs matching legs, got {t.signature}.")
        matrix = as_matrix(t)
        if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > settings.tolerance:
            raise ChannelError("Density operator is not Hermitian.")
        if abs(np.trace(matrix) - 1) > settings.tolerance:
            raise ChannelError(f"Density operator has trace {np.trace(matrix):.6g}, expected 1.")
        lowest = float(np.min(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)))
        if lowest < settings.psd_floor:
            raise ChannelError(f"Density operator is not positive semidefinite (eigenvalue {lowest:.3e}).")

    @classmethod
    def from_array(cls, matrix: object, dims: Sequence[int]) -> DensityOperator:
        return cls(from_matrix(matrix, dims, dims))

    @classmethod
    def pure(cls, state: ComplexTensor) -> DensityOperator:
        vector = as_matrix(state)
        return cls(from_matrix(vector @ vector.conj().T, state.out_dims, state.out_dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.tensor.out_dims

    @property
    def matrix(self) -> np.ndarray:
        return as_matrix(self.tensor)


# -- completeness and channels ----------------------------------------------------


def completeness_residual(kraus: KrausSet) -> float:
    _, in_dims = kraus.signature
    total = sum(as_matrix(dagger(b.tensor)) @ as_matrix(b.tensor) for b in kraus.branches)
    return float(np.max(np.abs(total - np.eye(math.prod(in_dims)))))


def is_complete(kraus: KrausSet, tol: float | None = None) -> tuple[bool, float]:
    """Return (complete, residual) with the residual as the max-norm of Σf†f − I."""
    limit = get_settings().tolerance if tol is None else tol
    residual = completeness_residual(kraus)
    return residual <= limit, residual


def _require_complete(kraus: KrausSet, name: str) -> None:
    complete, residual = is_complete(kraus)
    if not complete:
        raise ChannelError(f"{name} is not complete (residual {residual:.3e}).")


def apply_channel(kraus: KrausSet, rho: DensityOperator) -> DensityOperator:
    _require_complete(kraus, "Kraus set")
    out_dims, in_dims = kraus.signature
    if in_dims != rho.dims:
        raise ChannelError(f"Channel expects inputs {in_dims}, density operator has {rho.dims}.")
    result = np.zeros((math.prod(out_dims), math.prod(out_dims)), dtype=complex)
    for branch in kraus.branches:
        f = as_matrix(branch.tensor)
        result += f @ rho.matrix @ f.conj().T
    return DensityOperator.from_array(result, out_dims)


def tensor_sets(a: KrausSet, b: KrausSet) -> KrausSet:
    _require_complete(a, "Left set")
    _require_complete(b, "Right set")
    branches = tuple(
        KrausBranch((x.label, y.label), kron(x.tensor, y.tensor), corrections=x.corrections + y.corrections)
        for x, y in itertools.product(a.branches, b.branches)
    )
    return KrausSet(branches)


def compose_sets(first: KrausSet, then: KrausSet) -> KrausSet:
    """The set {g_j ∘ f_i} for f in ``first`` and g in ``then``."""
    _require_complete(first, "First set")
    _require_complete(then, "Second set")
    if first.signature[0] != then.signature[1]:
        raise ChannelError(f"Cannot compose: outputs {first.signature[0]} vs inputs {then.signature[1]}.")
    branches = tuple(
        KrausBranch((f.label, g.label), compose(g.tensor, f.tensor))
        for f, g in itertools.product(first.branches, then.branches)
    )
    return KrausSet(branches)


def random_density(dims: Sequence[int], rng: np.random.Generator) -> DensityOperator:
    """ρ = G G† / Tr(G G†) for a standard complex Gaussian G."""
    size = math.prod(dims)
    g = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOperator.from_array(rho / np.trace(rho).real, dims)


# -- Pauli bookkeeping ------------------------------------------------------------


def derive_pauli_correction(tensor: ComplexTensor, d: int) -> tuple[int, int] | None:
    """Find (z, x) with Z^z X^x · M ∝ I by trying all d² Paulis."""
    if tensor.out_dims != (d,) or tensor.in_dims != (d,):
        raise ChannelError(f"Expected a single-qudit operator, got {tensor.signature}.")
    if not np.any(np.abs(tensor.data) > get_settings().tolerance):
        return None
    target = identity((d,))
    for z, x in itertools.product(range(d), repeat=2):
        if proportional_within(compose(pauli(d, z, x), tensor), target) is not None:
            return z, x
    return None


def _costate_correction(branch: ComplexTensor, target: ComplexTensor, d: int) -> tuple[int, int] | None:
    """Find (z, x) with branch ∝ target ∘ Z^z X^x."""
    for z, x in itertools.product(range(d), repeat=2):
        if proportional_within(branch, compose(target, pauli(d, z, x))) is not None:
            return z, x
    return None


def expand_costate(kind: Kind | str, d: int) -> KrausSet:
    """Write ⟨0| or ⟨+| as a complete measurement whose outcomes differ by a Pauli.

    ⟨0| uses the computational basis; ⟨+| measures after an H. Each branch
    carries the derived (z, x) with branch ∝ costate ∘ Z^z X^x.
    """
    resolved = Kind(kind)
    if resolved is Kind.BASIS_STATE:
        target = make_spec(Kind.BASIS_STATE, d, (0,), adjoint=True).to_tensor()
        rotation = identity((d,))
    elif resolved is Kind.PLUS_STATE:
        target = make_spec(Kind.PLUS_STATE, d, adjoint=True).to_tensor()
        rotation = gate(Kind.H, d)
    else:
        raise ChannelError(f"Only the ⟨0| and ⟨+| costates expand this way, got {resolved.value}.")

    branches = []
    for k in range(d):
        outcome = make_spec(Kind.BASIS_STATE, d, (k,), adjoint=True).to_tensor()
        tensor = compose(outcome, rotation)
        correction = _costate_correction(tensor, target, d)
        if correction is None:
            raise ChannelError(f"No Pauli correction found for outcome {k}.")
        branches.append(KrausBranch((k,), tensor, corrections=(correction,)))
    logger.debug("expanded %s costate for d=%s: %s", resolved.value, d, [b.corrections for b in branches])
    return KrausSet(tuple(branches))


def bell_costate(d: int, a: int, b: int) -> ComplexTensor:
    return make_spec(Kind.BELL_STATE, d, (a, b), adjoint=True).to_tensor()


def bell_costate_via_cap(d: int, a: int, b: int) -> ComplexTensor:
    """(1/√d)·ε ∘ (Z^{-a} ⊗ X^{-b})."""
    cap = make_spec(Kind.CAP, d).to_tensor()
    local = kron(gate(Kind.ZPOW, d, (-a,)), gate(Kind.XPOW, d, (-b,)))
    return scale(compose(cap, local), 1 / math.sqrt(d))


def expand_cap_to_bell_branches(diagram: Diagram, cap_node: int) -> KrausSet:
    """Replace a cap by √d·⟨B_ab| for every Bell label.

    Each branch diagram carries the √d, so branch (0, 0) evaluates to the
    original diagram; the branch tensors are stored without it and form a
    complete set whenever the rest of the diagram is an isometry.
    """
    if not diagram.has_node(cap_node) or diagram.spec(cap_node).kind is not Kind.CAP:
        raise ChannelError(f"Node {cap_node} is not a Cap.")
    d = diagram.spec(cap_node).dim
    branches = []
    for a, b in itertools.product(range(d), repeat=2):
        builder = DiagramBuilder.from_diagram(diagram)
        peers = builder.remove_node(cap_node)
        bell = builder.add_node(make_spec(Kind.BELL_STATE, d, (a, b), adjoint=True))
        builder.connect(peers[0], NodePort(bell, 0))
        builder.connect(peers[1], NodePort(bell, 1))
        builder.multiply_scalar(math.sqrt(d))
        branch = builder.build()
        tensor = scale(evaluate(branch), 1 / math.sqrt(d))
        branches.append(KrausBranch((a, b), tensor, diagram=branch, corrections=((a, b),)))
    return KrausSet(tuple(branches))


# -- cups -------------------------------------------------------------------------


@dataclass(frozen=True)
class CupEquivalence:
    is_cup: bool
    local_unitary: ComplexTensor | None = None
    singular_values: tuple[float, ...] = field(default=())


def _state_matrix(psi: ComplexTensor) -> tuple[np.ndarray, int]:
    if psi.in_dims or len(psi.out_dims) != 2 or psi.out_dims[0] != psi.out_dims[1]:
        raise ChannelError(f"Expected a state on two legs of equal dim, got {psi.signature}.")
    d = psi.out_dims[0]
    return np.asarray(psi.data).reshape(d, d), d


def cup_equivalence(psi: ComplexTensor) -> CupEquivalence:
    """Decide whether ψ = (U ⊗ I)|∪⟩/√d for a symmetric unitary U."""
    settings = get_settings()
    c, d = _state_matrix(psi)
    norm = float(np.linalg.norm(c))
    if abs(norm - 1) > settings.tolerance:
        raise ChannelError(f"State must be normalized, has norm {norm:.6g}.")
    singular = np.linalg.svd(c, compute_uv=False)
    values = tuple(float(s) for s in singular)
    tol = settings.cup_svd_tolerance
    if np.max(np.abs(singular - 1 / math.sqrt(d))) > tol:
        return CupEquivalence(False, None, values)
    u = c * math.sqrt(d)
    unitary = np.max(np.abs(u @ u.conj().T - np.eye(d))) <= tol
    symmetric = np.max(np.abs(u - u.T)) <= tol
    if not (unitary and symmetric):
        return CupEquivalence(False, None, values)
    return CupEquivalence(True, from_matrix(u, (d,), (d,)), values)


def slide_partner(psi: ComplexTensor, f: ComplexTensor) -> ComplexTensor:
    """g with (f ⊗ I)ψ = (I ⊗ g)ψ, namely g = (C⁻¹ F C)^T."""
    c, d = _state_matrix(psi)
    if f.signature != ((d,), (d,)):
        raise ChannelError(f"Expected a {d}x{d} operator, got {f.signature}.")
    try:
        inverse = np.linalg.inv(c)
    except np.linalg.LinAlgError as exc:
        raise ChannelError("State has no inverse coefficient matrix; no partner exists.") from exc
    partner = (inverse @ as_matrix(f) @ c).T
    return from_matrix(partner, (d,), (d,))


def choi_state(t: ComplexTensor) -> ComplexTensor:
    """(t ⊗ I)|∪⟩ over the input legs: outputs followed by the bent inputs."""
    return from_matrix(as_matrix(t).reshape(-1), t.out_dims + t.in_dims, ())
