from __future__ import annotations

import logging
from dataclasses import replace
from typing import Mapping, Sequence

from qcat.diagram import (
    Diagram,
    DiagramBuilder,
    DiagramError,
    evaluate,
    node_count,
    total_boundary_dim,
    validate,
)
from qcat.rewriting.core import (
    Match,
    RewriteError,
    RewriteRule,
    RewriteTrace,
    ScalarFactor,
    TraceStep,
    VerificationTooLarge,
)
from qcat.rewriting.rules import rule_registry
from qcat.settings import Settings, get_settings
from qcat.tensor_core import max_abs_difference, scale

logger = logging.getLogger(__name__)

FUSION_STRATEGY = ["spider-copy", "spider-plus", "snake", "h4-elim"]
GHZ_STRATEGY = [
    "add-to-nadd",
    "h-zero-to-plus",
    "nadd-split",
    "prune-copy",
    "prune-plus",
    "dot-identity",
    "neg-elim",
    "dot-bend",
    "spider-copy",
]
# X rules run ahead of Z rules so a Pauli never bounces between a COPY and a PLUS dot.
NADD_SPLIT_PHASE = [
    "nadd-split",
    "commute-x-copy",
    "commute-x-plus",
    "commute-z-copy",
    "commute-z-plus",
]
# nadd-fuse undoes nadd-split, so the two never share a phase.
NADD_FUSE_PHASE = ["nadd-fuse", "pauli-fuse", "nadd-elim"]
NADD_COMMUTE_STRATEGY = [NADD_SPLIT_PHASE, NADD_FUSE_PHASE]

# Each strategy is a list of phases; a phase runs to its fixpoint before the next starts.
STRATEGIES: dict[str, list[list[str]]] = {
    "fusion": [FUSION_STRATEGY],
    "ghz": [GHZ_STRATEGY],
    "nadd-commute": NADD_COMMUTE_STRATEGY,
}


def resolve_rules(names: Sequence[str], rules: Mapping[str, RewriteRule] | None = None) -> list[RewriteRule]:
    registry = rules if rules is not None else rule_registry()
    resolved = []
    for name in names:
        if name not in registry:
            raise RewriteError(f"Unknown rule: {name!r}. Known rules: {', '.join(sorted(registry))}.")
        resolved.append(registry[name])
    return resolved


def find_matches(diagram: Diagram, rule: RewriteRule) -> list[Match]:
    return sorted(rule.matcher(diagram), key=lambda match: match.sort_key)


def apply(diagram: Diagram, match: Match, rules: Mapping[str, RewriteRule] | None = None) -> Diagram:
    """Rewrite one occurrence and deposit the rule's factor into the scalar accumulator."""
    registry = rules if rules is not None else rule_registry()
    rule = registry.get(match.rule)
    if rule is None:
        raise RewriteError(f"Unknown rule: {match.rule!r}.")
    if match not in rule.matcher(diagram):
        raise RewriteError(f"Stale match: {match.summary()} no longer occurs in the diagram.")

    builder = DiagramBuilder.from_diagram(diagram)
    try:
        rule.replacer(builder, diagram, match)
    except DiagramError as exc:
        raise RewriteError(f"{match.summary()} failed: {exc}") from exc
    builder.multiply_scalar(rule.scalar_factor(match).value)
    after = builder.build()
    if after.signature != diagram.signature:
        raise RewriteError(f"{match.summary()} changed the boundary {diagram.signature} -> {after.signature}.")
    return after


def check_size(diagram: Diagram, settings: Settings | None = None) -> None:
    cfg = settings or get_settings()
    if node_count(diagram) > cfg.verify_max_nodes:
        raise VerificationTooLarge(
            f"{node_count(diagram)} nodes exceed the verification cap of {cfg.verify_max_nodes}."
        )
    if total_boundary_dim(diagram) > cfg.verify_max_boundary_dim:
        raise VerificationTooLarge(
            f"Boundary dim {total_boundary_dim(diagram)} exceeds the cap of {cfg.verify_max_boundary_dim}."
        )


def step_residual(
    before: Diagram,
    after: Diagram,
    declared_scalar: complex = 1.0,
    settings: Settings | None = None,
) -> float:
    """max |evaluate(after) - declared_scalar · evaluate(before)|."""
    cfg = settings or get_settings()
    if before.signature != after.signature:
        raise RewriteError(f"Signature mismatch: {before.signature} vs {after.signature}.")
    check_size(before, cfg)
    check_size(after, cfg)
    expected = scale(evaluate(before), declared_scalar)
    return max_abs_difference(evaluate(after), expected)


def verify_step(
    before: Diagram,
    after: Diagram,
    declared_scalar: complex = 1.0,
    settings: Settings | None = None,
) -> bool:
    """True iff evaluate(after) equals declared_scalar · evaluate(before) within tolerance."""
    cfg = settings or get_settings()
    difference = step_residual(before, after, declared_scalar, cfg)
    if difference > cfg.tolerance:
        logger.debug("verify_step mismatch: max abs difference %.3e", difference)
        return False
    return True


def _first_match(diagram: Diagram, strategy: Sequence[RewriteRule]) -> Match | None:
    for rule in strategy:
        matches = find_matches(diagram, rule)
        if matches:
            return matches[0]
    return None


def normalize(
    diagram: Diagram,
    strategy: Sequence[str],
    max_steps: int | None = None,
    verify_each: bool = True,
    rules: Mapping[str, RewriteRule] | None = None,
    settings: Settings | None = None,
) -> tuple[Diagram, RewriteTrace]:
    """Apply the first match in strategy order until no rule applies or the step budget runs out.

    A failed certification stops the run; the failing step is kept in the trace.
    """
    cfg = settings or get_settings()
    registry = rules if rules is not None else rule_registry()
    ordered = resolve_rules(strategy, registry)
    limit = cfg.default_max_steps if max_steps is None else max_steps
    defects = validate(diagram)
    if defects:
        raise RewriteError(f"Cannot rewrite an invalid diagram: {defects[0].kind.value}: {defects[0].message}")

    trace = RewriteTrace()
    current = diagram
    while True:
        match = _first_match(current, ordered)
        if match is None:
            trace.reached_fixpoint = True
            break
        if len(trace.steps) >= limit:
            trace.step_limit_reached = True
            logger.warning("normalize stopped after %s steps with %s still applicable", limit, match.rule)
            break
        factor: ScalarFactor = registry[match.rule].scalar_factor(match)
        after = apply(current, match, registry)

        verdict, detail = "unverified", ""
        if verify_each:
            try:
                verdict = "pass" if verify_step(current, after, 1.0, cfg) else "fail"
            except VerificationTooLarge as exc:
                detail = str(exc)
        step = TraceStep(
            index=len(trace.steps),
            rule=match.rule,
            match=match.summary(),
            scalar=factor,
            verdict=verdict,
            nodes_after=node_count(after),
            detail=detail,
        )
        trace.steps.append(step)
        logger.debug("step %s: %s deposited %s (%s)", step.index, step.match, factor.describe(), verdict)
        current = after
        if verdict == "fail":
            logger.warning("step %s (%s) failed certification", step.index, match.rule)
            break

    logger.info(
        "normalize finished: %s steps, fixpoint=%s, scalar %s",
        len(trace.steps),
        trace.reached_fixpoint,
        trace.total_scalar.describe(),
    )
    return current, trace


def normalize_phases(
    diagram: Diagram,
    phases: Sequence[Sequence[str]],
    max_steps: int | None = None,
    verify_each: bool = True,
    rules: Mapping[str, RewriteRule] | None = None,
    settings: Settings | None = None,
) -> tuple[Diagram, RewriteTrace]:
    """Run ``normalize`` phase by phase under one shared step budget.

    A phase that fails certification or exhausts the budget ends the run.
    """
    cfg = settings or get_settings()
    registry = rules if rules is not None else rule_registry()
    for phase in phases:
        resolve_rules(phase, registry)
    limit = cfg.default_max_steps if max_steps is None else max_steps

    trace = RewriteTrace(reached_fixpoint=True)
    current = diagram
    for phase in phases:
        current, part = normalize(
            current,
            phase,
            max_steps=limit - len(trace.steps),
            verify_each=verify_each,
            rules=registry,
            settings=cfg,
        )
        offset = len(trace.steps)
        trace.steps.extend(replace(step, index=offset + step.index) for step in part.steps)
        if part.failures or not part.reached_fixpoint:
            trace.reached_fixpoint = False
            trace.step_limit_reached = part.step_limit_reached
            break
    return current, trace


def corrupt_rule(rule: RewriteRule) -> RewriteRule:
    """Variant of ``rule`` that deposits a wrong factor; certification must catch it."""
    original = rule.scalar_factor

    def wrong_factor(match: Match) -> ScalarFactor:
        return original(match) * ScalarFactor.sqrt_dim(max(match.dim, 2), 1)

    return replace(rule, scalar_factor=wrong_factor)


def registry_with_corruption(name: str | None) -> dict[str, RewriteRule]:
    registry = rule_registry()
    if name is None:
        return registry
    if name not in registry:
        raise RewriteError(f"Unknown rule: {name!r}.")
    registry[name] = corrupt_rule(registry[name])
    return registry
