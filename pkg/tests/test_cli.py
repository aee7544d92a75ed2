import json

import pytest

from evaluation.functional import corrupt_network
from main import main
from prefix.core import PrefixNetwork, Span, save_network
from reports.schemas import TOOL_NAME
from tests.vcd_reader import read_vcd, value_at


@pytest.fixture
def run(tmp_path, capsys):
    """Run the command line with --out-dir pointing into tmp_path; returns (code, stdout)"""

    def invoke(*argv):
        code = main(list(argv) + ["--out-dir", str(tmp_path)])
        return code, capsys.readouterr().out

    return invoke


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_generate_writes_network(run, tmp_path):
    code, out = run("generate", "--topology", "brent-kung", "--width", "32")
    assert code == 0
    assert "57 operators" in out
    saved = PrefixNetwork.model_validate(read_json(tmp_path / "brent-kung_32.json"))
    assert saved.width == 32


def test_generate_json_and_diagram(run):
    code, out = run("generate", "--topology", "kogge-stone", "--width", "8", "--diagram", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["operators"] == 17
    assert payload["depth"] == 3
    assert payload["diagram"].splitlines()[1].startswith("L1")


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--topology", "carry-skip", "--width", "8"],
        ["generate", "--width", "0"],
        ["generate", "--topology", "brent-kung"],
        ["frobnicate"],
    ],
)
def test_generate_usage_errors(run, argv):
    code, _ = run(*argv)
    assert code == 2


def test_verify_small_width_is_exhaustive(run, tmp_path):
    code, out = run("verify", "--topology", "sklansky", "--width", "6")
    assert code == 0
    assert out.startswith("PASS sklansky width 6: 8192 vectors (exhaustive)")
    envelope = read_json(tmp_path / "verify_sklansky_6.json")
    assert envelope["tool"] == TOOL_NAME
    assert envelope["command"] == "verify"
    assert envelope["report"]["passed"] is True


def test_verify_random_echoes_seed(run, tmp_path):
    code, out = run("verify", "--width", "32", "--count", "1000", "--seed", "5", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["mode"] == "random"
    assert report["seed"] == 5
    assert report["vectors_run"] == 32 + 1000
    assert read_json(tmp_path / "verify_brent-kung_32.json")["seed"] == 5


def test_verify_paper_testbench(run):
    code, out = run("verify", "--width", "32", "--paper-testbench")
    assert code == 0
    assert "7/7 passed" in out


def test_verify_paper_testbench_needs_width_32(run):
    code, _ = run("verify", "--width", "16", "--paper-testbench")
    assert code == 2


def test_verify_vector_suite(run):
    code, out = run("verify", "--topology", "han-carlson", "--width", "32", "--vectors", "paper_table1",
                    "--format", "json")
    assert code == 0
    assert json.loads(out)["mode"] == "suite"


def test_verify_corrupted_network_file(run, tmp_path, built_networks):
    path = save_network(corrupt_network(built_networks("brent-kung", 8)), tmp_path / "broken.json")
    code, out = run("verify", "--network", str(path))
    assert code == 1
    assert out.startswith("FAIL brent-kung width 8")


def test_verify_rejects_unevaluable_network(run, tmp_path, built_networks):
    net = built_networks("brent-kung", 4)
    top = next(n for n in net.nodes if n.span == Span(3, 0))
    upper = next(n for n in net.nodes if n.span == Span(3, 2))
    looped = PrefixNetwork(
        width=4, topology=net.topology, outputs=net.outputs,
        nodes=tuple(n.model_copy(update={"inputs": (top.id, n.inputs[1])}) if n.id == upper.id else n
                    for n in net.nodes),
    )
    path = save_network(looped, tmp_path / "looped.json")
    code, _ = run("verify", "--network", str(path))
    assert code == 2


def test_verify_rejects_leaf_outside_width(run, tmp_path, built_networks):
    path = save_network(built_networks("brent-kung", 8), tmp_path / "bk8.json")
    data = read_json(path)
    data["nodes"].append({"id": 999, "kind": "leaf", "level": 0, "span": [8, 8], "inputs": []})
    path.write_text(json.dumps(data), encoding="utf-8")
    code, out = run("verify", "--network", str(path))
    assert code == 2
    assert out == ""


def test_verify_needs_a_network(run):
    code, _ = run("verify")
    assert code == 2


def test_verify_missing_network_file(run, tmp_path):
    code, _ = run("verify", "--network", str(tmp_path / "absent.json"))
    assert code == 2


def test_compare_all(run, tmp_path):
    code, out = run("compare", "--width", "32", "--all")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("Sr. No.")
    assert len(lines) == 2 + 5
    assert lines[-1].split()[1] == "ripple"
    assert (tmp_path / "compare_32.txt").read_text(encoding="utf-8") == out
    assert len(read_json(tmp_path / "compare_32.json")["report"]["rows"]) == 5


def test_compare_selected_as_json(run):
    code, out = run("compare", "--width", "32", "--topologies", "brent-kung,kogge-stone", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [row["topology"] for row in rows] == ["kogge-stone", "brent-kung"]
    assert rows[1]["operator_counts"]["black"] == 57
    assert rows[0]["area"] > rows[1]["area"]


def test_compare_weight_overrides(run):
    _, plain = run("compare", "--width", "8", "--topologies", "ripple", "--format", "json")
    _, heavy = run("compare", "--width", "8", "--topologies", "ripple", "--and-delay", "3", "--format", "json")
    assert json.loads(heavy)[0]["weighted_delay"] > json.loads(plain)[0]["weighted_delay"]


def test_compare_rejects_negative_weight(run):
    code, _ = run("compare", "--width", "8", "--all", "--xor-delay", "-1")
    assert code == 2


def test_compare_needs_a_selection(run):
    code, _ = run("compare", "--width", "8")
    assert code == 2


def test_emit_with_testbench(run, tmp_path):
    code, _ = run("emit", "--topology", "brent-kung", "--width", "8", "--testbench")
    assert code == 0
    verilog = (tmp_path / "brent_kung_adder_8.v").read_text(encoding="utf-8")
    bench = (tmp_path / "brent_kung_adder_8_tb.v").read_text(encoding="utf-8")
    assert "module brent_kung_adder_8 (" in verilog
    assert "brent_kung_adder_8 dut" in bench
    assert "8'd255" in bench


def test_emit_paper_testbench(run, tmp_path):
    code, out = run("emit", "--width", "32", "--style", "hierarchical", "--module-name", "bka32",
                    "--testbench", "--paper", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["style"] == "hierarchical"
    assert payload["gates"]["XOR"] == 64
    assert "32'd4294967295" in (tmp_path / "bka32_tb.v").read_text(encoding="utf-8")


@pytest.mark.parametrize(
    "argv",
    [
        ["emit", "--width", "8", "--testbench", "--paper"],
        ["emit", "--width", "8", "--paper"],
        ["emit", "--width", "8", "--module-name", "module"],
    ],
)
def test_emit_usage_errors(run, argv):
    code, _ = run(*argv)
    assert code == 2


def test_sim_paper_testbench_with_vcd(run, tmp_path):
    code, out = run("sim", "--width", "32", "--paper-testbench", "--vcd", "bk32.vcd", "--toggles")
    assert code == 0
    assert out.startswith("PASS brent-kung width 32: 7 vectors (paper-testbench)")
    assert "toggles:" in out

    _, changes = read_vcd((tmp_path / "bk32.vcd").read_text(encoding="utf-8"))
    assert value_at(changes["sum"], 110) == 17
    assert value_at(changes["cout"], 50) == 1

    summary = read_json(tmp_path / "sim_brent-kung_32.json")["report"]
    assert summary["passed"] is True
    assert summary["toggles"]["total"] > 0


def test_sim_random_is_reproducible(run):
    argv = ("sim", "--topology", "kogge-stone", "--width", "16", "--random", "300", "--seed", "7",
            "--format", "json")
    code, first = run(*argv)
    _, second = run(*argv)
    assert code == 0
    assert first == second
    summary = json.loads(first)
    assert summary["vectors_run"] == 300
    assert summary["seed"] == 7


def test_sim_suite_with_internal_nets(run, tmp_path):
    code, _ = run("sim", "--width", "32", "--vectors", "paper_table1", "--vcd", "suite.vcd", "--internal")
    assert code == 0
    widths, _ = read_vcd((tmp_path / "suite.vcd").read_text(encoding="utf-8"))
    assert "c1" in widths and "g_0_0_0" in widths


@pytest.mark.parametrize(
    "argv",
    [
        ["sim", "--width", "16"],
        ["sim", "--width", "16", "--paper-testbench"],
        ["sim", "--width", "100", "--random", "10"],
    ],
)
def test_sim_usage_errors(run, argv):
    code, _ = run(*argv)
    assert code == 2


def test_sim_help_states_width_limit(capsys):
    assert main(["sim", "--help"]) == 0
    out = " ".join(capsys.readouterr().out.split())
    assert "at most 64" in out
