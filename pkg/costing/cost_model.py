"""
Cost Model - Abstract delay and area scoring of prefix adders

All costs are dimensionless units. The delay of a gate is defined once, in
DelayModel.gate_delay; the estimate here walks the prefix network signal by
signal, while the gate simulator walks the expanded netlist with the same
definition, so the two agree exactly.
"""

import logging
from typing import Dict, Iterable, List, Tuple, Union

from pydantic import BaseModel, Field

from netlist.gates import GateKind
from prefix.core import (
    NodeKind,
    PrefixNetwork,
    TopologyKind,
    max_fanout,
    network_depth,
    operator_counts,
    parse_topology,
    require_valid,
)
from prefix.errors import InvalidArgumentError
from prefix.topologies import build_network
from reports.schemas import ComparisonTable, CostReport


logger = logging.getLogger(__name__)


class DelayModel(BaseModel):
    xor_delay: float = Field(default=2.0, ge=0)
    and_delay: float = Field(default=1.0, ge=0)
    or_delay: float = Field(default=1.0, ge=0)
    buffer_delay: float = Field(default=0.0, ge=0)
    fanout_penalty_alpha: float = Field(default=0.0, ge=0)

    def base_delay(self, kind: GateKind) -> float:
        """Delay of a gate kind before the fanout penalty"""
        return {
            GateKind.XOR: self.xor_delay,
            GateKind.AND: self.and_delay,
            GateKind.OR: self.or_delay,
            GateKind.BUF: self.buffer_delay,
        }[kind]

    def gate_delay(self, kind: GateKind, fanout: int = 1) -> float:
        """Base weight plus alpha per consumer beyond the first.

        Fanout counts gate input pins on the driven net, plus one when the
        net is a primary output.
        """
        return self.base_delay(kind) + self.fanout_penalty_alpha * max(fanout - 1, 0)


class AreaWeights(BaseModel):
    and_area: float = Field(default=1.0, ge=0)
    or_area: float = Field(default=1.0, ge=0)
    xor_area: float = Field(default=2.0, ge=0)
    buf_area: float = Field(default=0.5, ge=0)

    def gate_area(self, kind: GateKind) -> float:
        return {
            GateKind.AND: self.and_area,
            GateKind.OR: self.or_area,
            GateKind.XOR: self.xor_area,
            GateKind.BUF: self.buf_area,
        }[kind]


def gate_census(net: PrefixNetwork) -> Dict[str, int]:
    """Gate counts of the adder expansion, straight from the operator census"""
    n = net.width
    ops = operator_counts(net)
    return {
        GateKind.AND.name: n + 2 * ops.black + ops.gray + n,
        GateKind.OR.name: ops.black + ops.gray + n,
        GateKind.XOR.name: 2 * n,
        GateKind.BUF.name: ops.buffer,
    }


def _propagate_root(net: PrefixNetwork) -> Dict[int, int]:
    """Node whose propagate net a node exposes (buffers forward their source's)"""
    root: Dict[int, int] = {}
    for node in sorted(net.nodes, key=lambda n: n.level):
        if node.kind == NodeKind.BUFFER:
            root[node.id] = root[node.inputs[0]]
        else:
            root[node.id] = node.id
    return root


def _pin_counts(net: PrefixNetwork, root: Dict[int, int]) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Gate input pins reading each node's generate and propagate nets"""
    g_pins = {node.id: 0 for node in net.nodes}
    p_pins = {node.id: 0 for node in net.nodes}
    for node in net.nodes:
        if node.kind == NodeKind.BUFFER:
            g_pins[node.inputs[0]] += 1
        elif node.kind in (NodeKind.BLACK, NodeKind.GRAY):
            hi, lo = node.inputs
            g_pins[hi] += 1                 # OR
            g_pins[lo] += 1                 # AND with p_hi
            p_pins[root[hi]] += 1
            if node.kind == NodeKind.BLACK:
                p_pins[root[hi]] += 1       # AND p_hi, p_lo
                p_pins[root[lo]] += 1
        elif node.kind == NodeKind.LEAF:
            p_pins[node.id] += 1            # sum XOR
    for output in net.outputs:
        g_pins[output] += 1
        p_pins[root[output]] += 1
    return g_pins, p_pins


def estimate_delay(net: PrefixNetwork, model: DelayModel) -> float:
    """Longest weighted input-to-output path of the adder"""
    require_valid(net)
    d = model.gate_delay
    root = _propagate_root(net)
    g_pins, p_pins = _pin_counts(net, root)
    g_at: Dict[int, float] = {}
    p_at: Dict[int, float] = {}

    for node in sorted(net.nodes, key=lambda n: (n.level, n.id)):
        if node.kind == NodeKind.LEAF:
            g_at[node.id] = d(GateKind.AND, g_pins[node.id])
            p_at[node.id] = d(GateKind.XOR, p_pins[node.id])
        elif node.kind == NodeKind.BUFFER:
            source = node.inputs[0]
            g_at[node.id] = g_at[source] + d(GateKind.BUF, g_pins[node.id])
            p_at[node.id] = p_at[source]
        else:
            hi, lo = node.inputs
            term = max(p_at[hi], g_at[lo]) + d(GateKind.AND, 1)
            g_at[node.id] = max(g_at[hi], term) + d(GateKind.OR, g_pins[node.id])
            if node.kind == NodeKind.BLACK:
                p_at[node.id] = max(p_at[hi], p_at[lo]) + d(GateKind.AND, p_pins[node.id])

    leaf_p = {node.span.hi: p_at[node.id] for node in net.leaves()}
    carry = 0.0  # cin arrives at time 0
    worst = 0.0
    for bit, output in enumerate(net.outputs):
        worst = max(worst, max(carry, leaf_p[bit]) + d(GateKind.XOR, 1))
        term = max(p_at[output], 0.0) + d(GateKind.AND, 1)
        carry = max(g_at[output], term) + d(GateKind.OR, 1)
    return max(worst, carry)


def estimate_area(net: PrefixNetwork, weights: AreaWeights) -> float:
    """Weighted sum of the gate census"""
    census = gate_census(net)
    return sum(count * weights.gate_area(GateKind[name]) for name, count in census.items())


def build_cost_report(net: PrefixNetwork, model: DelayModel, weights: AreaWeights) -> CostReport:
    """Delay, area and structural metrics of one network"""
    return CostReport(
        topology=net.topology.value,
        width=net.width,
        depth_levels=network_depth(net),
        operator_counts=operator_counts(net),
        gate_counts=gate_census(net),
        max_fanout=max_fanout(net),
        weighted_delay=estimate_delay(net, model),
        area=estimate_area(net, weights),
    )


def compare_topologies(width: int, topologies: Iterable[Union[str, TopologyKind]],
                       model: DelayModel, weights: AreaWeights) -> ComparisonTable:
    """One cost report per topology, fastest first, ties broken by name"""
    kinds: List[TopologyKind] = []
    for topology in topologies:
        kind = parse_topology(topology)
        if kind not in kinds:
            kinds.append(kind)
    if not kinds:
        raise InvalidArgumentError("No topologies to compare")

    rows = [build_cost_report(build_network(kind, width), model, weights) for kind in kinds]
    rows.sort(key=lambda row: (row.weighted_delay, row.topology))
    logger.info(f"Compared {len(rows)} topologies at width {width}")
    return ComparisonTable(
        width=width,
        delay_model=model.model_dump(),
        area_weights=weights.model_dump(),
        rows=rows,
    )
