import json
import math

from typer.testing import CliRunner

from qcat.diagram import (
    Diagram,
    DiagramBuilder,
    DiagramError,
    Node,
    NodePort,
    from_spec,
    identity_diagram,
    scalar_diagram,
)
from qcat.document_repo import load_diagram, save_diagram
from qcat.generators import Kind, spec
from qcat.protocols import ghz_circuit, zx_nadd_circuit
from workers.qcat_workers import cli
from workers.qcat_workers.cli import app

runner = CliRunner()


def _snake(d: int) -> Diagram:
    builder = DiagramBuilder()
    cup = builder.add_node(spec(Kind.CUP, d))
    cap = builder.add_node(spec(Kind.CAP, d))
    builder.connect(builder.add_input(d), NodePort(cap, 0))
    builder.connect(NodePort(cup, 0), NodePort(cap, 1))
    builder.connect(NodePort(cup, 1), builder.add_output(d))
    return builder.build()


def test_eval_prints_cnot_entries(tmp_path) -> None:
    path = save_diagram(tmp_path / "nadd2.qcat.json", from_spec(spec(Kind.NADD, 2)))
    result = runner.invoke(app, ["eval", str(path)])
    assert result.exit_code == 0, result.output
    assert "legs: out (2, 2) in (2, 2)" in result.output
    for row in ("[0, 0, 0, 0]  1", "[0, 1, 0, 1]  1", "[1, 1, 1, 0]  1", "[1, 0, 1, 1]  1"):
        assert row in result.output
    assert result.output.count("  1\n") == 4


def test_eval_prints_bare_scalar(tmp_path) -> None:
    path = save_diagram(tmp_path / "two.qcat.json", scalar_diagram(2.0))
    result = runner.invoke(app, ["eval", str(path)])
    assert result.exit_code == 0, result.output
    assert result.output.strip() == "scalar 2"


def test_eval_json_lists_ghz_amplitudes(tmp_path) -> None:
    path = save_diagram(tmp_path / "ghz3.qcat.json", ghz_circuit(3, n_wires=3))
    report_path = tmp_path / "ghz3.eval.json"
    result = runner.invoke(app, ["eval", str(path), "--json", "--output", str(report_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["outputs"] == [3, 3, 3]
    assert [row["index"] for row in payload["amplitudes"]] == [[0, 0, 0], [1, 1, 1], [2, 2, 2]]
    for row in payload["amplitudes"]:
        assert abs(row["value"][0] - 1 / math.sqrt(3)) < 1e-9
    assert json.loads(report_path.read_text(encoding="utf-8")) == payload


def test_eval_exit_codes_for_bad_documents(tmp_path) -> None:
    garbage = tmp_path / "garbage.qcat.json"
    garbage.write_text("{not json", encoding="utf-8")
    assert runner.invoke(app, ["eval", str(garbage)]).exit_code == 2
    assert runner.invoke(app, ["eval", str(tmp_path / "missing.qcat.json")]).exit_code == 2

    dangling = save_diagram(tmp_path / "dangling.qcat.json", Diagram(nodes=(Node(0, spec(Kind.H, 2)),)))
    result = runner.invoke(app, ["eval", str(dangling)])
    assert result.exit_code == 3
    assert "DanglingPort" in result.output


def test_eval_maps_evaluation_errors_to_invalid_diagram(tmp_path, monkeypatch) -> None:
    path = save_diagram(tmp_path / "h.qcat.json", from_spec(spec(Kind.H, 2)))

    def broken(diagram: Diagram):
        raise DiagramError("leg mismatch")

    monkeypatch.setattr(cli, "evaluate", broken)
    result = runner.invoke(app, ["eval", str(path)])
    assert result.exit_code == 3
    assert "leg mismatch" in result.output


def test_rewrite_straightens_snake_in_one_step(tmp_path) -> None:
    path = save_diagram(tmp_path / "snake.qcat.json", _snake(3))
    result = runner.invoke(app, ["rewrite", str(path), "--rules", "snake"])
    assert result.exit_code == 0, result.output
    assert "1 steps" in result.output
    rewritten = load_diagram(tmp_path / "snake.rewritten.qcat.json")
    assert rewritten.nodes == ()
    assert rewritten.signature == ((3,), (3,))


def test_rewrite_leaves_straight_wire_alone(tmp_path) -> None:
    path = save_diagram(tmp_path / "wire.qcat.json", identity_diagram((2,)))
    out = tmp_path / "out" / "wire.qcat.json"
    result = runner.invoke(app, ["rewrite", str(path), "--json", "--output", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["steps"] == []
    assert payload["reached_fixpoint"] is True
    assert load_diagram(out) == identity_diagram((2,))


def test_rewrite_ghz_circuit_to_single_dot(tmp_path) -> None:
    path = save_diagram(tmp_path / "ghz.qcat.json", ghz_circuit(3))
    result = runner.invoke(app, ["rewrite", str(path), "--strategy", "ghz", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert {row["verdict"] for row in payload["steps"]} == {"pass"}
    rewritten = load_diagram(tmp_path / "ghz.rewritten.qcat.json")
    assert [node.spec.kind for node in rewritten.nodes] == [Kind.COPY_DOT]


def test_rewrite_commutes_paulis_through_nadd(tmp_path) -> None:
    path = save_diagram(tmp_path / "zx.qcat.json", zx_nadd_circuit(3, 1, 2, 2, 1))
    result = runner.invoke(app, ["rewrite", str(path), "--strategy", "nadd-commute", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["reached_fixpoint"] is True
    assert payload["steps"][0]["rule"] == "nadd-split"
    assert {row["verdict"] for row in payload["steps"]} == {"pass"}
    rewritten = load_diagram(tmp_path / "zx.rewritten.qcat.json")
    kinds = [node.spec.kind for node in rewritten.nodes]
    assert kinds.count(Kind.NADD) == 1
    assert set(kinds) <= {Kind.NADD, Kind.ZPOW, Kind.XPOW}


def test_rewrite_exit_codes(tmp_path) -> None:
    path = save_diagram(tmp_path / "snake.qcat.json", _snake(3))
    assert runner.invoke(app, ["rewrite", str(path), "--rules", "snake,no-such-rule"]).exit_code == 5
    assert runner.invoke(app, ["rewrite", str(path), "--strategy", "no-such-strategy"]).exit_code == 5
    corrupted = runner.invoke(app, ["rewrite", str(path), "--rules", "snake", "--corrupt-rule", "snake"])
    assert corrupted.exit_code == 4
    assert "fail" in corrupted.output


def test_verify_rules_passes_and_writes_summary(tmp_path) -> None:
    result = runner.invoke(
        app,
        ["verify-rules", "--dims", "2,3", "--trials", "2", "--rules", "snake,spider-copy,neg-elim",
         "--out-dir", str(tmp_path), "--json"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert len(payload["rows"]) == 6
    assert all(row["verdict"] == "pass" for row in payload["rows"])
    summary = json.loads((tmp_path / "run-summary.json").read_text(encoding="utf-8"))
    assert summary["suite"] == "verify-rules"
    assert len(summary["steps"]) == 6


def test_verify_rules_negative_control_writes_reproducer(tmp_path) -> None:
    result = runner.invoke(
        app,
        ["verify-rules", "--dims", "3", "--trials", "2", "--rules", "snake", "--corrupt-rule", "snake",
         "--out-dir", str(tmp_path)],
    )
    assert result.exit_code == 4
    reproducers = sorted(tmp_path.glob("snake-d3-t*.qcat.json"))
    assert reproducers
    assert load_diagram(reproducers[0]).nodes


def test_verify_rules_argument_errors(tmp_path) -> None:
    assert runner.invoke(app, ["verify-rules", "--rules", "bogus", "--out-dir", str(tmp_path)]).exit_code == 5
    assert runner.invoke(app, ["verify-rules", "--dims", "x,y", "--out-dir", str(tmp_path)]).exit_code == 2


def test_protocol_teleport_prints_nine_branches() -> None:
    result = runner.invoke(app, ["protocol", "teleport", "--dim", "3", "--trials", "10"])
    assert result.exit_code == 0, result.output
    assert result.output.count("I/3 after") == 9
    assert "PASS" in result.output


def test_protocol_superdense_json_is_a_point_mass() -> None:
    result = runner.invoke(app, ["protocol", "superdense", "--dim", "2", "--p", "1", "--q", "1", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    probabilities = {row["label"]: row["probability"] for row in payload["branches"]}
    assert abs(probabilities["(1,1)"] - 1) < 1e-9
    assert abs(sum(probabilities.values()) - 1) < 1e-9


def test_protocol_ghz_has_d_amplitudes() -> None:
    result = runner.invoke(app, ["protocol", "ghz", "--dim", "4", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["passed"] is True
    assert len(payload["branches"]) == 4
    assert abs(payload["details"]["norm"] - 1) < 1e-9


def test_protocol_gate_teleport_certifies_every_branch() -> None:
    result = runner.invoke(app, ["protocol", "gate-teleport", "--dim", "2", "--trials", "5", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["passed"] is True
    assert len(payload["branches"]) == 16
    assert payload["details"]["rewrite_steps"] > 0


def test_protocol_unknown_name_is_a_usage_error() -> None:
    assert runner.invoke(app, ["protocol", "bb84"]).exit_code == 2


def test_export_is_deterministic(tmp_path) -> None:
    path = save_diagram(tmp_path / "h.qcat.json", from_spec(spec(Kind.H, 2)))
    first = runner.invoke(app, ["export", str(path)])
    second = runner.invoke(app, ["export", str(path)])
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
    assert first.stdout.startswith('digraph "h" {')

    target = tmp_path / "h.dot"
    assert runner.invoke(app, ["export", str(path), "--output", str(target)]).exit_code == 0
    assert target.read_text(encoding="utf-8") == first.stdout
    assert runner.invoke(app, ["export", str(path), "--format", "svg"]).exit_code == 2
