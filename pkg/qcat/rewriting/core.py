from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from qcat.diagram import Diagram, DiagramBuilder


class RewriteError(RuntimeError):
    pass


class VerificationTooLarge(RewriteError):
    pass


@dataclass(frozen=True)
class ScalarFactor:
    """Exact factor Π d^{k/2} · phase, kept symbolic so long traces do not drift."""

    half_powers: tuple[tuple[int, int], ...] = ()
    phase: complex = 1.0

    @classmethod
    def sqrt_dim(cls, dim: int, half_power: int) -> ScalarFactor:
        if half_power == 0 or dim == 1:
            return cls()
        return cls(half_powers=((dim, half_power),))

    @classmethod
    def from_phase(cls, phase: complex) -> ScalarFactor:
        return cls(phase=phase)

    def __mul__(self, other: ScalarFactor) -> ScalarFactor:
        powers: dict[int, int] = dict(self.half_powers)
        for dim, k in other.half_powers:
            powers[dim] = powers.get(dim, 0) + k
        merged = tuple(sorted((d, k) for d, k in powers.items() if k != 0))
        return ScalarFactor(half_powers=merged, phase=complex(self.phase) * complex(other.phase))

    @property
    def value(self) -> complex:
        magnitude = math.prod(d ** (k / 2) for d, k in self.half_powers)
        return magnitude * complex(self.phase)

    def is_one(self) -> bool:
        return not self.half_powers and cmath.isclose(complex(self.phase), 1.0)

    def describe(self) -> str:
        parts = [f"{d}^({k}/2)" for d, k in self.half_powers]
        if not cmath.isclose(complex(self.phase), 1.0):
            phase = complex(self.phase)
            parts.append(f"({phase.real:.6g}{phase.imag:+.6g}j)")
        return " * ".join(parts) or "1"

    def to_dict(self) -> dict[str, Any]:
        phase = complex(self.phase)
        return {
            "half_powers": [[d, k] for d, k in self.half_powers],
            "phase": [phase.real, phase.imag],
            "value": [self.value.real, self.value.imag],
        }


ONE = ScalarFactor()


@dataclass(frozen=True)
class Match:
    """Bindings of one rule occurrence.

    ``nodes`` are in the rule's role order, ``data`` holds rule-specific
    integers (ports, variants) and ``dims`` the qudit dims bound.
    """

    rule: str
    nodes: tuple[int, ...]
    wires: tuple[int, ...] = ()
    dims: tuple[int, ...] = ()
    data: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise RewriteError(f"Match for {self.rule} binds a node twice: {self.nodes}.")

    @property
    def sort_key(self) -> tuple:
        return (tuple(sorted(self.nodes)), self.nodes, self.wires, self.data)

    @property
    def dim(self) -> int:
        return self.dims[0] if self.dims else 1

    def summary(self) -> str:
        text = f"{self.rule} nodes={list(self.nodes)}"
        if self.wires:
            text += f" wires={list(self.wires)}"
        return text


Matcher = Callable[[Diagram], list[Match]]
Replacer = Callable[[DiagramBuilder, Diagram, Match], None]


@dataclass(frozen=True)
class RewriteRule:
    name: str
    law: str
    matcher: Matcher
    replacer: Replacer
    scalar_factor: Callable[[Match], ScalarFactor] = field(default=lambda match: ONE)


@dataclass
class TraceStep:
    index: int
    rule: str
    match: str
    scalar: ScalarFactor
    verdict: str
    nodes_after: int
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "rule": self.rule,
            "match": self.match,
            "scalar": self.scalar.to_dict(),
            "verdict": self.verdict,
            "nodes_after": self.nodes_after,
            "detail": self.detail,
        }


@dataclass
class RewriteTrace:
    steps: list[TraceStep] = field(default_factory=list)
    reached_fixpoint: bool = False
    step_limit_reached: bool = False

    @property
    def total_scalar(self) -> ScalarFactor:
        total = ONE
        for step in self.steps:
            total = total * step.scalar
        return total

    @property
    def failures(self) -> list[TraceStep]:
        return [step for step in self.steps if step.verdict == "fail"]

    @property
    def unverified(self) -> list[TraceStep]:
        return [step for step in self.steps if step.verdict == "unverified"]

    def rules_used(self) -> list[str]:
        return [step.rule for step in self.steps]

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [step.to_dict() for step in self.steps],
            "reached_fixpoint": self.reached_fixpoint,
            "step_limit_reached": self.step_limit_reached,
            "total_scalar": self.total_scalar.to_dict(),
        }
