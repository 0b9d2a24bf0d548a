from __future__ import annotations

import time
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from qcat.diagram import Diagram, DiagramError, evaluate, node_count, validate
from qcat.document_repo import DOCUMENT_SUFFIX, DocumentRepositoryError, load_diagram, save_diagram
from qcat.graphviz_export import to_dot
from qcat.logs import configure_logging
from qcat.protocols import PROTOCOLS, ProtocolError, ProtocolReport, run_protocol
from qcat.rewriting import STRATEGIES, RewriteError, normalize_phases, registry_with_corruption, resolve_rules
from qcat.schemas import AmplitudeRow, EvalReport, ProtocolSummary, RewriteReport, StepRow, VerifyRulesReport
from qcat.settings import get_settings, parse_dims
from qcat.tensor_core import TensorError
from workers.qcat_workers.suite import RuleVerificationSuite

EXIT_PARSE_ERROR = 2
EXIT_INVALID_DIAGRAM = 3
EXIT_UNSOUND = 4
EXIT_UNKNOWN_RULE = 5

app = typer.Typer(
    help="Typed qudit diagrams: evaluate, rewrite, verify and export.",
    add_completion=False,
    no_args_is_help=True,
)


def _fail(message: str, code: int) -> typer.Exit:
    typer.echo(f"error: {message}", err=True)
    return typer.Exit(code)


def _fmt(value: complex) -> str:
    value = complex(value)
    if abs(value.imag) < 1e-12:
        return f"{value.real:.12g}"
    return f"{value.real:.12g}{value.imag:+.12g}j"


def _load(file: Path) -> Diagram:
    try:
        diagram = load_diagram(file)
    except DocumentRepositoryError as exc:
        raise _fail(str(exc), EXIT_PARSE_ERROR) from exc
    defects = validate(diagram)
    if defects:
        for defect in defects:
            typer.echo(f"{defect.kind.value}: {defect.message}", err=True)
        raise typer.Exit(EXIT_INVALID_DIAGRAM)
    return diagram


def _phases(raw: str | None, strategy: str) -> list[list[str]]:
    if raw:
        return [[name.strip() for name in raw.split(",") if name.strip()]]
    if strategy not in STRATEGIES:
        raise _fail(f"Unknown strategy {strategy!r}. Known strategies: {', '.join(STRATEGIES)}.", EXIT_UNKNOWN_RULE)
    return [list(phase) for phase in STRATEGIES[strategy]]


def _default_output(file: Path) -> Path:
    stem = file.name.removesuffix(DOCUMENT_SUFFIX).removesuffix(".json")
    return file.with_name(f"{stem}.rewritten{DOCUMENT_SUFFIX}")


@app.command("eval")
def eval_command(
    file: Path = typer.Argument(..., help="Diagram document to evaluate."),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Also write the JSON report to this path."),
    as_json: bool = typer.Option(False, "--json", help="Print the JSON report instead of a table."),
) -> None:
    """Print the nonzero amplitudes of a diagram in big-endian index order."""
    settings = get_settings()
    diagram = _load(file)
    try:
        tensor = evaluate(diagram)
    except (DiagramError, TensorError) as exc:
        raise _fail(str(exc), EXIT_INVALID_DIAGRAM) from exc
    rows = [
        AmplitudeRow(index=[int(i) for i in index], value=(float(value.real), float(value.imag)))
        for index, value in np.ndenumerate(tensor.data)
        if abs(value) > settings.amplitude_threshold
    ]
    report = EvalReport(
        source=str(file),
        outputs=list(tensor.out_dims),
        inputs=list(tensor.in_dims),
        amplitudes=rows,
        threshold=settings.amplitude_threshold,
    )
    if output is not None:
        output.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    if as_json:
        typer.echo(report.model_dump_json(indent=2))
        return
    if tensor.is_scalar():
        typer.echo(f"scalar {_fmt(tensor.scalar_value())}")
        return
    typer.echo(f"legs: out {tensor.out_dims} in {tensor.in_dims}")
    for row in rows:
        typer.echo(f"{row.index}  {_fmt(complex(*row.value))}")


@app.command("rewrite")
def rewrite_command(
    file: Path = typer.Argument(..., help="Diagram document to rewrite."),
    rules: Optional[str] = typer.Option(None, "--rules", help="Comma separated rule names in priority order."),
    strategy: str = typer.Option("fusion", "--strategy", help=f"Named strategy: {', '.join(STRATEGIES)}."),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", min=0, help="Step budget."),
    verify: bool = typer.Option(True, "--verify/--no-verify", help="Certify every step numerically."),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Where to write the rewritten document."),
    as_json: bool = typer.Option(False, "--json", help="Print the JSON report instead of a table."),
    corrupt_rule: Optional[str] = typer.Option(None, "--corrupt-rule", hidden=True),
) -> None:
    """Normalize a diagram with the given rules and certify each step."""
    phases = _phases(rules, strategy)
    names = [name for phase in phases for name in phase]
    try:
        registry = registry_with_corruption(corrupt_rule)
        resolve_rules(names, registry)
    except RewriteError as exc:
        raise _fail(str(exc), EXIT_UNKNOWN_RULE) from exc

    diagram = _load(file)
    clock = time.perf_counter()
    result, trace = normalize_phases(diagram, phases, max_steps=max_steps, verify_each=verify, rules=registry)
    elapsed = time.perf_counter() - clock

    target = save_diagram(output or _default_output(file), result)
    report = RewriteReport(
        source=str(file),
        rules=names,
        steps=[
            StepRow(
                index=step.index,
                rule=step.rule,
                match=step.match,
                scalar=step.scalar.describe(),
                verdict=step.verdict,
                nodes_after=step.nodes_after,
                detail=step.detail,
            )
            for step in trace.steps
        ],
        reached_fixpoint=trace.reached_fixpoint,
        step_limit_reached=trace.step_limit_reached,
        total_scalar=trace.total_scalar.describe(),
        nodes_before=node_count(diagram),
        nodes_after=node_count(result),
        elapsed_seconds=elapsed,
    )
    if as_json:
        typer.echo(report.model_dump_json(indent=2))
    else:
        for row in report.steps:
            typer.echo(f"{row.index:>4}  {row.rule:<16} {row.verdict:<10} x {row.scalar:<12} {row.match}")
        typer.echo(
            f"{len(report.steps)} steps, fixpoint={report.reached_fixpoint}, "
            f"scalar {report.total_scalar}, nodes {report.nodes_before} -> {report.nodes_after}"
        )
        typer.echo(f"wrote {target}")
    if trace.failures:
        raise _fail(f"{len(trace.failures)} step(s) failed certification.", EXIT_UNSOUND)


@app.command("verify-rules")
def verify_rules_command(
    dims: Optional[str] = typer.Option(None, "--dims", help="Comma separated qudit dimensions."),
    trials: Optional[int] = typer.Option(None, "--trials", min=1, help="Random hosts per rule and dimension."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Defaults to QCAT_SEED."),
    rules: Optional[str] = typer.Option(None, "--rules", help="Comma separated subset of rules."),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Directory for reproducers and run-summary.json."),
    as_json: bool = typer.Option(False, "--json", help="Print the JSON report instead of a table."),
    corrupt_rule: Optional[str] = typer.Option(None, "--corrupt-rule", hidden=True),
) -> None:
    """Certify every builtin rule on randomized host diagrams."""
    settings = get_settings()
    dim_list = parse_dims(dims if dims is not None else settings.verify_dims)
    if not dim_list:
        raise _fail("No valid dimensions given.", EXIT_PARSE_ERROR)
    names = [name.strip() for name in rules.split(",") if name.strip()] if rules else None
    try:
        suite = RuleVerificationSuite(
            dims=dim_list,
            trials=trials or settings.verify_trials,
            seed=settings.seed if seed is None else seed,
            names=names,
            rules=registry_with_corruption(corrupt_rule),
            settings=settings,
            out_dir=out_dir,
        )
    except RewriteError as exc:
        raise _fail(str(exc), EXIT_UNKNOWN_RULE) from exc

    try:
        report: VerifyRulesReport = suite.run()
    except RewriteError as exc:
        raise _fail(str(exc), EXIT_UNSOUND) from exc

    if as_json:
        typer.echo(report.model_dump_json(indent=2))
    else:
        for row in report.rows:
            typer.echo(
                f"{row.rule:<16} d={row.dim}  {row.verdict:<10} "
                f"{row.passed}/{row.trials} passed  max residual {row.max_residual:.2e}"
            )
    if not report.passed:
        for row in report.rows:
            for path in row.reproducers:
                typer.echo(f"reproducer: {path}", err=True)
        raise _fail("Rule verification failed.", EXIT_UNSOUND)


def _print_protocol(report: ProtocolReport) -> None:
    typer.echo(f"{report.protocol}  d={report.dim}  seed={report.seed}")
    for row in report.branches:
        probability = "-" if row.probability is None else f"{row.probability:.6g}"
        typer.echo(f"  {row.label:<12} p={probability:<10} {row.value:<28} {row.verdict}")
    if report.completeness_residual is not None:
        typer.echo(f"completeness residual {report.completeness_residual:.3e}")
    if report.channel_distance is not None:
        typer.echo(f"distance {report.channel_distance:.3e}")
    typer.echo("PASS" if report.passed else "FAIL")


@app.command("protocol")
def protocol_command(
    name: str = typer.Argument(..., help=f"One of: {', '.join(PROTOCOLS)}."),
    dim: int = typer.Option(2, "--dim", min=2, help="Qudit dimension."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Defaults to QCAT_SEED."),
    p: int = typer.Option(0, "--p", help="Superdense message, Z exponent."),
    q: int = typer.Option(0, "--q", help="Superdense message, X exponent."),
    trials: Optional[int] = typer.Option(None, "--trials", min=1, help="Random density operators to push through."),
    as_json: bool = typer.Option(False, "--json", help="Print the JSON report instead of a table."),
) -> None:
    """Run a protocol and certify every branch."""
    if name not in PROTOCOLS:
        raise typer.BadParameter(f"Unknown protocol {name!r}. Known protocols: {', '.join(PROTOCOLS)}.")
    params: dict[str, int] = {"p": p, "q": q}
    if trials is not None:
        params["trials"] = trials
    try:
        report = run_protocol(name, dim, get_settings().seed if seed is None else seed, **params)
    except ProtocolError as exc:
        raise _fail(str(exc), EXIT_UNSOUND) from exc

    if as_json:
        typer.echo(ProtocolSummary.model_validate(report.to_dict()).model_dump_json(indent=2))
    else:
        _print_protocol(report)
    if not report.passed:
        for failure in report.failures:
            typer.echo(failure, err=True)
        raise typer.Exit(EXIT_UNSOUND)


@app.command("export")
def export_command(
    file: Path = typer.Argument(..., help="Diagram document to export."),
    fmt: str = typer.Option("dot", "--format", help="Output format; only 'dot' is supported."),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write here instead of stdout."),
) -> None:
    """Export a diagram as Graphviz text."""
    if fmt != "dot":
        raise typer.BadParameter(f"Unsupported format {fmt!r}.")
    diagram = _load(file)
    text = to_dot(diagram, name=file.name.removesuffix(DOCUMENT_SUFFIX))
    if output is not None:
        output.write_text(text, encoding="utf-8")
        return
    typer.echo(text, nl=False)


def main() -> None:
    configure_logging(get_settings())
    app()


if __name__ == "__main__":
    main()
