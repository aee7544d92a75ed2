import itertools
import math

import pytest

from prefix.core import (
    GroupGP,
    NodeKind,
    PrefixNetwork,
    Span,
    TopologyKind,
    ViolationKind,
    combine_gp,
    fanout_map,
    gray_combine,
    load_network,
    longest_path,
    max_fanout,
    network_depth,
    operator_counts,
    parse_topology,
    save_network,
    validate_network,
)
from prefix.diagram import render_diagram
from prefix.errors import InvalidArgumentError
from prefix.topologies import available_topologies, build_network

ALL_GP = [GroupGP(g=g, p=p) for g, p in itertools.product([False, True], repeat=2)]


def node_with_span(net, hi, lo):
    return next(n for n in net.nodes if n.span == Span(hi, lo) and n.kind != NodeKind.BUFFER)


def replace_node(net, node):
    return PrefixNetwork(
        width=net.width,
        topology=net.topology,
        nodes=tuple(node if n.id == node.id else n for n in net.nodes),
        outputs=net.outputs,
    )


def test_combine_is_associative():
    for x, y, z in itertools.product(ALL_GP, repeat=3):
        assert combine_gp(combine_gp(x, y), z) == combine_gp(x, combine_gp(y, z))


def test_combine_is_not_commutative():
    hi = GroupGP(g=True, p=False)
    lo = GroupGP(g=False, p=False)
    assert combine_gp(hi, lo).g != combine_gp(lo, hi).g


def test_gray_matches_black_generate():
    for hi, lo in itertools.product(ALL_GP, repeat=2):
        assert gray_combine(hi, lo.g) == combine_gp(hi, lo).g


def test_parse_topology_lists_valid_names():
    assert parse_topology("Brent-Kung") == TopologyKind.BRENT_KUNG
    with pytest.raises(InvalidArgumentError, match="kogge-stone"):
        parse_topology("carry-select")


@pytest.mark.parametrize("topology", [t.value for t in TopologyKind])
@pytest.mark.parametrize("width", [1, 2, 3, 5, 8, 13, 16, 32, 64])
def test_generated_networks_validate(built_networks, topology, width):
    net = built_networks(topology, width)
    report = validate_network(net)
    assert report.valid, report.summary()
    assert len(net.outputs) == width
    for bit, node_id in enumerate(net.outputs):
        assert net.node_map()[node_id].span == Span(bit, 0)


@pytest.mark.slow
@pytest.mark.parametrize("topology", [t.value for t in TopologyKind])
@pytest.mark.parametrize("align", [False, True])
def test_every_width_up_to_64_validates(built_networks, topology, align):
    for width in range(1, 65):
        report = validate_network(built_networks(topology, width, align_levels=align))
        assert report.valid, f"{topology} width {width}: {report.summary()}"


def test_operator_counts_at_known_widths(built_networks):
    assert operator_counts(built_networks("brent-kung", 16)).operators == 26
    assert operator_counts(built_networks("brent-kung", 32)).operators == 57
    assert operator_counts(built_networks("kogge-stone", 32)).operators == 129
    assert operator_counts(built_networks("sklansky", 32)).operators == 80


@pytest.mark.parametrize("width", [2, 4, 8, 16, 32, 64])
def test_brent_kung_closed_form(built_networks, width):
    expected = 2 * width - 2 - int(math.log2(width))
    assert operator_counts(built_networks("brent-kung", width)).operators == expected


@pytest.mark.parametrize("width", [2, 4, 8, 16, 32, 64])
def test_kogge_stone_closed_form(built_networks, width):
    log_n = int(math.log2(width))
    net = built_networks("kogge-stone", width)
    assert operator_counts(net).operators == width * log_n - width + 1
    assert network_depth(net) == log_n


@pytest.mark.parametrize("width", [1, 2, 7, 32])
def test_ripple_is_a_single_chain(built_networks, width):
    net = built_networks("ripple", width)
    assert operator_counts(net).operators == width - 1
    assert network_depth(net) == width - 1


def test_depths_at_width_32(built_networks):
    assert network_depth(built_networks("kogge-stone", 32)) == 5
    assert network_depth(built_networks("han-carlson", 32)) == 6
    bk = network_depth(built_networks("brent-kung", 32))
    assert 5 < bk <= 10
    assert bk == 8


def test_brent_kung_smaller_but_deeper_than_kogge_stone(built_networks):
    bk, ks = built_networks("brent-kung", 32), built_networks("kogge-stone", 32)
    assert operator_counts(bk).operators < operator_counts(ks).operators
    assert network_depth(bk) > network_depth(ks)


@pytest.mark.slow
@pytest.mark.parametrize("topology", [t.value for t in TopologyKind])
def test_depth_is_monotonic_in_width(built_networks, topology):
    depths = [network_depth(built_networks(topology, width)) for width in range(1, 65)]
    assert depths == sorted(depths)


def test_generated_networks_have_no_gray_nodes(built_networks):
    # The carry stage reads every (i:0) propagate, so every tree operator stays Black
    for topology in available_topologies():
        assert operator_counts(built_networks(topology, 16)).gray == 0


def test_build_is_deterministic():
    for topology in available_topologies():
        first = build_network(topology, 23).to_json()
        assert build_network(topology, 23).to_json() == first


def test_build_rejects_bad_width():
    with pytest.raises(InvalidArgumentError):
        build_network("brent-kung", 0)
    with pytest.raises(InvalidArgumentError):
        build_network("bogus", 8)


def test_single_bit_network(built_networks):
    net = built_networks("brent-kung", 1)
    assert [n.kind for n in net.nodes] == [NodeKind.LEAF]
    assert network_depth(net) == 0
    assert max_fanout(net) == 1


def test_sklansky_fanout_exceeds_brent_kung(built_networks):
    assert max_fanout(built_networks("sklansky", 32)) > max_fanout(built_networks("brent-kung", 32))
    assert max_fanout(built_networks("sklansky", 32)) == 17


def test_ripple_fanout_is_at_most_two(built_networks):
    assert max(fanout_map(built_networks("ripple", 16)).values()) <= 2


def test_longest_path_starts_at_a_leaf(built_networks):
    net = built_networks("brent-kung", 16)
    depth, path = longest_path(net)
    nodes = net.node_map()
    assert nodes[path[0]].kind == NodeKind.LEAF
    assert path[-1] in net.outputs
    assert sum(nodes[n].kind in (NodeKind.BLACK, NodeKind.GRAY) for n in path) == depth


def test_missing_prefix_output_is_reported(built_networks):
    net = built_networks("brent-kung", 4)
    wrong = node_with_span(net, 3, 2).id
    broken = PrefixNetwork(width=4, topology=net.topology, nodes=net.nodes,
                           outputs=net.outputs[:3] + (wrong,))
    report = validate_network(broken)
    assert not report.valid
    missing = report.of_kind(ViolationKind.MISSING_OUTPUT)
    assert missing and "(3:0)" in missing[0].message


def test_cycle_is_reported(built_networks):
    net = built_networks("brent-kung", 4)
    top = node_with_span(net, 3, 0)
    upper = node_with_span(net, 3, 2)
    looped = replace_node(net, upper.model_copy(update={"inputs": (top.id, upper.inputs[1])}))
    report = validate_network(looped)
    assert report.of_kind(ViolationKind.CYCLE)
    assert not report.evaluable


def test_gray_with_used_propagate_is_reported(built_networks):
    net = built_networks("brent-kung", 4)
    low = node_with_span(net, 1, 0)
    grayed = replace_node(net, low.model_copy(update={"kind": NodeKind.GRAY}))
    report = validate_network(grayed)
    assert report.of_kind(ViolationKind.GRAY_PROPAGATE_USED)


def test_span_mismatch_is_reported_but_evaluable(built_networks):
    net = built_networks("brent-kung", 4)
    top = node_with_span(net, 3, 0)
    leaf1 = next(n.id for n in net.leaves() if n.span.hi == 1)
    skewed = replace_node(net, top.model_copy(update={"inputs": (top.inputs[0], leaf1)}))
    report = validate_network(skewed)
    assert report.of_kind(ViolationKind.SPAN_MISMATCH)
    assert report.evaluable


def test_leaf_outside_width_blocks_evaluation(built_networks):
    net = built_networks("brent-kung", 8)
    stray = net.nodes[0].model_copy(update={"id": 999, "span": Span(8, 8)})
    widened = PrefixNetwork(width=8, topology=net.topology, nodes=net.nodes + (stray,), outputs=net.outputs)
    report = validate_network(widened)
    assert report.of_kind(ViolationKind.BAD_SPAN)
    assert not report.evaluable


def test_align_levels_inserts_buffers(built_networks):
    plain = built_networks("brent-kung", 8)
    aligned = built_networks("brent-kung", 8, align_levels=True)
    assert validate_network(aligned).valid
    counts = operator_counts(aligned)
    assert counts.buffer > 0
    assert counts.operators == operator_counts(plain).operators
    assert network_depth(aligned) == network_depth(plain)
    nodes = aligned.node_map()
    for node in aligned.nodes:
        if node.kind in (NodeKind.BLACK, NodeKind.GRAY):
            assert all(nodes[s].level == node.level - 1 for s in node.inputs)


def test_kogge_stone_alignment_buffers_skip_edges(built_networks):
    # leaf 0 is read at levels 2 and 3, (1:0) at level 3
    aligned = built_networks("kogge-stone", 8, align_levels=True)
    assert operator_counts(aligned).buffer == 3
    nodes = aligned.node_map()
    for node in aligned.nodes:
        if node.kind != NodeKind.LEAF:
            assert all(nodes[s].level == node.level - 1 for s in node.inputs)
    buffered = sorted((n.span, n.level) for n in aligned.nodes if n.kind == NodeKind.BUFFER)
    assert buffered == [(Span(0, 0), 1), (Span(0, 0), 2), (Span(1, 0), 2)]


def test_diagram_of_four_bit_brent_kung(built_networks):
    assert render_diagram(built_networks("brent-kung", 4)) == (
        "    3 2 1 0\n"
        "L1  B | B |\n"
        "L2  B B | |\n"
    )


def test_diagram_marks_white_cells(built_networks):
    diagram = render_diagram(built_networks("brent-kung", 8, align_levels=True))
    assert "W" in diagram
    assert diagram.count("\n") == network_depth(built_networks("brent-kung", 8)) + 1


def test_save_and_load(tmp_path, built_networks):
    net = built_networks("han-carlson", 12)
    path = save_network(net, tmp_path / "nets" / "hc12.json")
    assert load_network(path) == net


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        load_network(path)
