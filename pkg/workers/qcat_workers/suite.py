from __future__ import annotations

import json
import logging
import time
import zlib
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from qcat.document_repo import DOCUMENT_SUFFIX, save_diagram
from qcat.rewriting import (
    RewriteError,
    RewriteRule,
    VerificationTooLarge,
    apply,
    find_matches,
    random_host,
    rule_registry,
    step_residual,
)
from qcat.rewriting.hosts import host_rules
from qcat.schemas import RuleCheckRow, VerifyRulesReport
from qcat.settings import Settings, get_settings

logger = logging.getLogger(__name__)


@dataclass
class SuiteStepResult:
    step: str
    status: str
    message: str


@dataclass
class SuiteSummary:
    suite: str
    environment: str
    seed: int
    dims: list[int]
    trials: int
    started_at_utc: str
    completed_at_utc: str
    steps: list[SuiteStepResult]


class RuleVerificationSuite:
    """Applies every rule to randomized hosts and certifies each rewrite numerically.

    Hosts that fail certification are saved as reproducer documents next to
    ``run-summary.json``.
    """

    def __init__(
        self,
        dims: Sequence[int],
        trials: int,
        seed: int,
        names: Sequence[str] | None = None,
        rules: Mapping[str, RewriteRule] | None = None,
        settings: Settings | None = None,
        out_dir: Path | None = None,
    ) -> None:
        self.settings = settings or get_settings()
        self.dims = list(dims)
        self.trials = trials
        self.seed = seed
        self.registry = dict(rules) if rules is not None else rule_registry()
        self.names = list(names) if names is not None else [name for name in host_rules() if name in self.registry]
        unknown = [name for name in self.names if name not in self.registry]
        if unknown:
            raise RewriteError(f"Unknown rule: {unknown[0]!r}.")
        self.out_dir = out_dir or Path(self.settings.artifacts_dir) / "verify"
        self.rows: list[RuleCheckRow] = []
        self.steps: list[SuiteStepResult] = []

    def _record(self, step: str, status: str, message: str) -> None:
        self.steps.append(SuiteStepResult(step=step, status=status, message=message))

    def _run_step(self, name: str, func: Callable[[], RuleCheckRow]) -> None:
        try:
            row = func()
        except Exception as exc:
            self._record(step=name, status="fail", message=str(exc))
            raise
        self.rows.append(row)
        self._record(
            step=name,
            status=row.verdict,
            message=(
                f"passed={row.passed}/{row.trials}, unverified={row.unverified}, "
                f"max_residual={row.max_residual:.3e}"
            ),
        )

    def _rng(self, name: str, d: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, d, zlib.crc32(name.encode("utf-8"))])

    def check_rule(self, name: str, d: int) -> RuleCheckRow:
        rule = self.registry[name]
        rng = self._rng(name, d)
        passed = failed = unverified = 0
        worst = 0.0
        reproducers: list[str] = []
        for trial in range(self.trials):
            host = random_host(name, d, rng)
            matches = find_matches(host, rule)
            if not matches:
                raise RewriteError(f"Random host for {name} at d={d} contains no match.")
            after = apply(host, matches[0], self.registry)
            try:
                residual = step_residual(host, after, 1.0, self.settings)
            except VerificationTooLarge as exc:
                unverified += 1
                logger.info("%s d=%s trial %s unverified: %s", name, d, trial, exc)
                continue
            worst = max(worst, residual)
            if residual <= self.settings.tolerance:
                passed += 1
                continue
            failed += 1
            path = save_diagram(self.out_dir / f"{name}-d{d}-t{trial}{DOCUMENT_SUFFIX}", host)
            reproducers.append(str(path))
            logger.warning("%s failed at d=%s trial %s (residual %.3e), reproducer %s", name, d, trial, residual, path)

        if failed:
            verdict = "fail"
        elif passed:
            verdict = "pass"
        else:
            verdict = "unverified"
        return RuleCheckRow(
            rule=name,
            dim=d,
            trials=self.trials,
            passed=passed,
            failed=failed,
            unverified=unverified,
            max_residual=worst,
            verdict=verdict,
            reproducers=reproducers,
        )

    def run(self) -> VerifyRulesReport:
        started_at = datetime.now(timezone.utc)
        clock = time.perf_counter()
        for d in self.dims:
            for name in self.names:
                self._run_step(f"{name}@d{d}", lambda name=name, d=d: self.check_rule(name, d))
        completed_at = datetime.now(timezone.utc)

        summary = SuiteSummary(
            suite="verify-rules",
            environment=self.settings.environment,
            seed=self.seed,
            dims=self.dims,
            trials=self.trials,
            started_at_utc=started_at.isoformat(),
            completed_at_utc=completed_at.isoformat(),
            steps=self.steps,
        )
        self._write_summary(summary)
        report = VerifyRulesReport(
            seed=self.seed,
            dims=self.dims,
            trials=self.trials,
            rows=self.rows,
            elapsed_seconds=time.perf_counter() - clock,
        )
        logger.info(
            "verify-rules: %s checks, %s failing",
            len(self.rows),
            sum(1 for row in self.rows if row.verdict == "fail"),
        )
        return report

    def _write_summary(self, summary: SuiteSummary) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        out_path = self.out_dir / "run-summary.json"
        payload = asdict(summary)
        payload["steps"] = [asdict(step) for step in summary.steps]
        out_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
