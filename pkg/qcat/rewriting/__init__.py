from qcat.rewriting.core import (
    ONE,
    Match,
    RewriteError,
    RewriteRule,
    RewriteTrace,
    ScalarFactor,
    TraceStep,
    VerificationTooLarge,
)
from qcat.rewriting.engine import (
    FUSION_STRATEGY,
    GHZ_STRATEGY,
    NADD_COMMUTE_STRATEGY,
    NADD_FUSE_PHASE,
    NADD_SPLIT_PHASE,
    STRATEGIES,
    apply,
    corrupt_rule,
    find_matches,
    normalize,
    normalize_phases,
    registry_with_corruption,
    resolve_rules,
    step_residual,
    verify_step,
)
from qcat.rewriting.hosts import random_dot_graph, random_host
from qcat.rewriting.rules import builtin_rules, rule_registry

__all__ = [
    "FUSION_STRATEGY",
    "GHZ_STRATEGY",
    "NADD_COMMUTE_STRATEGY",
    "NADD_FUSE_PHASE",
    "NADD_SPLIT_PHASE",
    "ONE",
    "STRATEGIES",
    "Match",
    "RewriteError",
    "RewriteRule",
    "RewriteTrace",
    "ScalarFactor",
    "TraceStep",
    "VerificationTooLarge",
    "apply",
    "builtin_rules",
    "corrupt_rule",
    "find_matches",
    "normalize",
    "normalize_phases",
    "random_dot_graph",
    "random_host",
    "registry_with_corruption",
    "resolve_rules",
    "rule_registry",
    "step_residual",
    "verify_step",
]
