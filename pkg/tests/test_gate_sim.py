import numpy as np
import pytest

from costing.cost_model import DelayModel, estimate_delay
from evaluation.functional import evaluate_batch, oracle_add_batch
from evaluation.verification import load_vector_suite
from netlist.gates import Gate, GateKind, GateNetlist, expand_to_gates
from prefix.errors import InvalidArgumentError, StructuralError
from simulation.engine import GateSimulator, critical_path, simulate, toggle_count
from simulation.waveform import SimTrace, write_vcd
from tests.vcd_reader import read_vcd, value_at

TOPOLOGIES = ["brent-kung", "kogge-stone", "sklansky", "han-carlson", "ripple"]
MODELS = [
    DelayModel(),
    DelayModel(xor_delay=1, and_delay=1, or_delay=1),
    DelayModel(xor_delay=3, and_delay=1.5, or_delay=2, buffer_delay=0.5, fanout_penalty_alpha=0.25),
]


@pytest.fixture(scope="module")
def bk32_sim(built_networks):
    return GateSimulator(expand_to_gates(built_networks("brent-kung", 32), name="bk32"))


def buffer_netlist():
    return GateNetlist(
        name="passthrough",
        width=1,
        gates=(
            Gate("s_buf", GateKind.BUF, ("a0",), "s0"),
            Gate("c_buf", GateKind.BUF, ("b0",), "c1"),
        ),
        sum_nets=("s0",),
        cout_net="c1",
    )


@pytest.mark.parametrize("topology", TOPOLOGIES)
@pytest.mark.parametrize("width", [4, 8, 16, 32])
@pytest.mark.parametrize("align", [False, True])
def test_gate_level_matches_word_level(built_networks, topology, width, align):
    net = built_networks(topology, width, align_levels=align)
    sim = GateSimulator(expand_to_gates(net))
    rng = np.random.default_rng(99 + width)
    a = rng.integers(0, 2**width, size=10_000, dtype=np.uint64)
    b = rng.integers(0, 2**width, size=10_000, dtype=np.uint64)
    cin = rng.integers(0, 2, size=10_000).astype(bool)
    got_sum, got_cout, _ = sim.simulate_batch(a, b, cin)
    want_sum, want_cout = evaluate_batch(net, a, b, cin)
    assert np.array_equal(got_sum, want_sum)
    assert np.array_equal(got_cout, want_cout)
    oracle_sum, oracle_cout = oracle_add_batch(a, b, cin, width)
    assert np.array_equal(got_sum, oracle_sum)
    assert np.array_equal(got_cout, oracle_cout)


def test_single_vector_simulation(built_networks):
    result = simulate(expand_to_gates(built_networks("kogge-stone", 8)), 200, 100, True)
    assert result.sum == (200 + 100 + 1) % 256
    assert result.cout is True
    assert result.nets["c8"] is True


def test_simulate_rejects_wide_operands(bk32_sim):
    with pytest.raises(InvalidArgumentError):
        bk32_sim.simulate(2**32, 0, False)


def test_buffer_netlist_is_identity():
    sim = GateSimulator(buffer_netlist())
    assert (sim.simulate(1, 0, False).sum, sim.simulate(1, 0, False).cout) == (1, False)
    assert (sim.simulate(0, 1, True).sum, sim.simulate(0, 1, True).cout) == (0, True)


def test_cyclic_netlist_is_rejected():
    looped = GateNetlist(
        name="looped",
        width=1,
        gates=(
            Gate("u", GateKind.AND, ("a0", "w"), "s0"),
            Gate("v", GateKind.OR, ("s0", "b0"), "w"),
            Gate("c", GateKind.BUF, ("cin",), "c1"),
        ),
        sum_nets=("s0",),
        cout_net="c1",
    )
    with pytest.raises(StructuralError) as excinfo:
        GateSimulator(looped)
    assert set(excinfo.value.cycle) == {"u", "v"}


@pytest.mark.parametrize("topology", TOPOLOGIES)
@pytest.mark.parametrize("width", [1, 2, 3, 5, 8, 13, 16, 17, 32])
@pytest.mark.parametrize("model_index", range(len(MODELS)))
def test_critical_path_matches_estimate(built_networks, topology, width, model_index):
    model = MODELS[model_index]
    for align in (False, True):
        net = built_networks(topology, width, align_levels=align)
        report = critical_path(expand_to_gates(net), model)
        assert report.delay == pytest.approx(estimate_delay(net, model))


@pytest.mark.slow
@pytest.mark.parametrize("topology", TOPOLOGIES)
def test_critical_path_matches_estimate_up_to_64(built_networks, topology):
    for width in range(1, 65):
        net = built_networks(topology, width)
        sim = GateSimulator(expand_to_gates(net))
        for model in MODELS:
            assert sim.critical_path(model).delay == pytest.approx(estimate_delay(net, model))


def test_single_bit_critical_path(built_networks):
    netlist = expand_to_gates(built_networks("brent-kung", 1))
    report = critical_path(netlist, DelayModel())
    assert report.delay == 4.0
    assert report.start == "a[0]"
    assert report.end == "sum[0]"
    assert report.gates == ["pre0.p_xor", "post0.s_xor"]

    unit = critical_path(netlist, DelayModel(xor_delay=1, and_delay=1, or_delay=1))
    assert unit.delay == 3.0
    assert unit.end == "cout"
    assert unit.gates == ["pre0.p_xor", "carry0.t_and", "carry0.g_or"]


def test_path_steps_accumulate(bk32_sim):
    report = bk32_sim.critical_path(DelayModel())
    arrivals = [step.arrival for step in report.steps]
    assert arrivals == sorted(arrivals)
    assert sum(step.delay for step in report.steps) == pytest.approx(report.delay)
    assert report.steps[-1].arrival == pytest.approx(report.delay)


def test_ripple_is_slower_than_brent_kung(built_networks):
    model = DelayModel()
    ripple = critical_path(expand_to_gates(built_networks("ripple", 8)), model).delay
    bk = critical_path(expand_to_gates(built_networks("brent-kung", 8)), model).delay
    assert ripple > bk


def test_zero_weights_give_zero_path(built_networks):
    model = DelayModel(xor_delay=0, and_delay=0, or_delay=0)
    assert critical_path(expand_to_gates(built_networks("sklansky", 8)), model).delay == 0.0


def test_repeated_vector_never_toggles(bk32_sim):
    report = bk32_sim.toggle_count([(12345, 678, True)] * 5)
    assert report.total == 0
    assert report.vectors == 5


def test_all_ones_toggles_every_sum_xor(built_networks):
    netlist = expand_to_gates(built_networks("brent-kung", 8))
    report = toggle_count(netlist, [(0, 0, False), (255, 0, False)])
    for bit in range(8):
        assert report.per_gate[f"post{bit}.s_xor"] == 1
        assert report.per_gate[f"pre{bit}.p_xor"] == 1
        assert report.per_gate[f"pre{bit}.g_and"] == 0
    assert report.per_stage["postprocessing"] == 8
    assert report.per_stage["carry"] == 0
    assert report.total == sum(report.per_gate.values())


def test_toggle_count_needs_two_vectors(bk32_sim):
    with pytest.raises(InvalidArgumentError):
        bk32_sim.toggle_count([(1, 2, False)])


def test_reference_testbench_toggles(bk32_sim, golden):
    vectors = [(v.a, v.b, v.cin) for v in load_vector_suite("paper_table1")]
    report = bk32_sim.toggle_count(vectors)
    assert set(report.per_stage) <= {"preprocessing", "prefix_tree", "carry", "postprocessing"}
    golden("bk32_reference_toggles.txt", f"{report.total}\n")


def paper_schedule():
    return [(v.time_label_ns, v.a, v.b, v.cin) for v in load_vector_suite("paper_table1")]


def test_reference_trace_in_vcd(bk32_sim):
    text = write_vcd(bk32_sim.build_trace(paper_schedule()), "bk32")
    assert "1 ns" in text
    assert "$scope module bk32" in text

    widths, changes = read_vcd(text)
    assert widths == {"a": 32, "b": 32, "cin": 1, "cout": 1, "sum": 32}
    assert value_at(changes["sum"], 10) == 2
    assert value_at(changes["sum"], 30) == 0
    assert value_at(changes["cout"], 30) == 1
    assert value_at(changes["cout"], 70) == 0
    assert value_at(changes["sum"], 90) == 30
    assert value_at(changes["sum"], 110) == 17
    assert value_at(changes["cin"], 110) == 1
    assert [t for t, _ in changes["a"]] == [0, 10, 30, 50, 70, 90, 110]


def test_trace_records_only_changes(bk32_sim):
    trace = bk32_sim.build_trace(paper_schedule())
    last = {}
    for time_ns, name, value in trace.changes:
        assert last.get(name) != value
        last[name] = value
    # Only row 7 sets cin
    assert [t for t, name, _ in trace.changes if name == "cin"] == [0, 110]


def test_internal_nets_in_trace(built_networks):
    sim = GateSimulator(expand_to_gates(built_networks("brent-kung", 4)))
    trace = sim.build_trace([(0, 0, 0, False), (5, 15, 1, False)], include_internal=True)
    assert "g_1_1_0" in trace.signals and "c1" in trace.signals
    # c4 drives cout, so it only shows up as the port
    assert "c4" not in trace.signals
    assert trace.signals["cout"] == 1
    widths, changes = read_vcd(write_vcd(trace))
    assert list(widths).count("cout") == 1 and "c4" not in widths
    assert value_at(changes["c3"], 5) == 1
    assert value_at(changes["cout"], 5) == 1
    assert value_at(changes["g_0_0_0"], 0) == 0


def test_vcd_is_deterministic(bk32_sim):
    first = write_vcd(bk32_sim.build_trace(paper_schedule()), "bk32")
    second = write_vcd(bk32_sim.build_trace(paper_schedule()), "bk32")
    assert first == second


@pytest.mark.parametrize("include_internal", [False, True])
def test_vcd_round_trip_reproduces_trace(built_networks, include_internal):
    sim = GateSimulator(expand_to_gates(built_networks("han-carlson", 8)))
    schedule = [(0, 0, 0, False), (10, 255, 1, False), (25, 170, 85, True), (40, 200, 100, False),
                (55, 200, 100, False)]
    trace = sim.build_trace(schedule, include_internal=include_internal)
    widths, changes = read_vcd(write_vcd(trace))
    assert widths == trace.signals
    expected = {}
    for time_ns, name, value in trace.changes:
        expected.setdefault(name, []).append((time_ns, value))
    assert changes == expected


def test_schedule_must_increase(bk32_sim):
    with pytest.raises(InvalidArgumentError):
        bk32_sim.build_trace([(10, 1, 1, False), (10, 2, 2, False)])
    with pytest.raises(InvalidArgumentError):
        bk32_sim.build_trace([])


def test_empty_trace_has_no_vcd():
    with pytest.raises(InvalidArgumentError):
        write_vcd(SimTrace(signals={}))
