from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

ComplexPair = tuple[float, float]
Verdict = Literal["pass", "fail", "unverified"]

DOCUMENT_VERSION = 1


class EndpointDoc(BaseModel):
    node: int | None = None
    port: int | None = None
    boundary: Literal["in", "out"] | None = None
    slot: int | None = None

    @model_validator(mode="after")
    def _one_form(self) -> "EndpointDoc":
        node_form = self.node is not None and self.port is not None
        boundary_form = self.boundary is not None and self.slot is not None
        if node_form == boundary_form:
            raise ValueError("endpoint needs either {node, port} or {boundary, slot}")
        return self


class LegsDoc(BaseModel):
    out: list[int] = Field(default_factory=list)
    in_: list[int] = Field(default_factory=list, alias="in")

    model_config = ConfigDict(populate_by_name=True)


class NodeDoc(BaseModel):
    id: int
    kind: str
    dim: int | None = None
    params: list[int] = Field(default_factory=list)
    adjoint: bool = False
    color: list[list[ComplexPair]] | None = None
    amplitudes: list[ComplexPair] | None = None
    legs: LegsDoc | None = None
    value: ComplexPair | None = None
    label: str = ""


class WireDoc(BaseModel):
    id: int
    dim: int
    source: EndpointDoc
    target: EndpointDoc


class DiagramDocument(BaseModel):
    version: Literal[1] = DOCUMENT_VERSION
    dim: int = 2
    inputs: list[int] = Field(default_factory=list)
    outputs: list[int] = Field(default_factory=list)
    scalar: ComplexPair = (1.0, 0.0)
    nodes: list[NodeDoc] = Field(default_factory=list)
    wires: list[WireDoc] = Field(default_factory=list)


class AmplitudeRow(BaseModel):
    index: list[int]
    value: ComplexPair


class EvalReport(BaseModel):
    command: str = "eval"
    source: str
    outputs: list[int]
    inputs: list[int]
    amplitudes: list[AmplitudeRow]
    threshold: float


class StepRow(BaseModel):
    index: int
    rule: str
    match: str
    scalar: str
    verdict: Verdict
    nodes_after: int
    detail: str = ""


class RewriteReport(BaseModel):
    command: str = "rewrite"
    source: str
    rules: list[str]
    steps: list[StepRow]
    reached_fixpoint: bool
    step_limit_reached: bool
    total_scalar: str
    nodes_before: int
    nodes_after: int
    elapsed_seconds: float


class RuleCheckRow(BaseModel):
    rule: str
    dim: int
    trials: int
    passed: int
    failed: int
    unverified: int
    max_residual: float
    verdict: Verdict
    reproducers: list[str] = Field(default_factory=list)


class VerifyRulesReport(BaseModel):
    command: str = "verify-rules"
    seed: int
    dims: list[int]
    trials: int
    rows: list[RuleCheckRow]
    elapsed_seconds: float

    @property
    def passed(self) -> bool:
        return all(row.verdict != "fail" for row in self.rows)


class ProtocolBranchRow(BaseModel):
    label: str
    probability: float | None
    value: str
    verdict: Verdict


class ProtocolSummary(BaseModel):
    command: str = "protocol"
    protocol: str
    dim: int
    seed: int | None
    passed: bool
    branches: list[ProtocolBranchRow]
    completeness_residual: float | None = None
    channel_distance: float | None = None
    trace: dict[str, Any] | None = None
    failures: list[str] = Field(default_factory=list)
    details: dict[str, Any] = Field(default_factory=dict)
