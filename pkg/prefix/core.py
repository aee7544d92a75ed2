"""
Prefix Core - Prefix algebra, carry-network types, validation and structural metrics

Bit 0 is the LSB everywhere. A span (hi:lo) names the group generate/propagate
over bits lo..hi; a network designates one node with span (i:0) per bit i.
Carry-in is not part of the network (see evaluation.functional).
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field

from prefix.errors import InvalidArgumentError, InvalidNetworkError


logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    BLACK = "black"
    GRAY = "gray"
    BUFFER = "buffer"
    LEAF = "leaf"


class TopologyKind(str, Enum):
    BRENT_KUNG = "brent-kung"
    KOGGE_STONE = "kogge-stone"
    SKLANSKY = "sklansky"
    HAN_CARLSON = "han-carlson"
    RIPPLE_SERIAL = "ripple"


OPERATOR_KINDS = (NodeKind.BLACK, NodeKind.GRAY)

# Number of inputs each node kind takes
NODE_ARITY = {
    NodeKind.LEAF: 0,
    NodeKind.BUFFER: 1,
    NodeKind.BLACK: 2,
    NodeKind.GRAY: 2,
}


def parse_topology(name: Union[str, TopologyKind]) -> TopologyKind:
    """Resolve a kebab-case topology name, listing valid names on failure"""
    if isinstance(name, TopologyKind):
        return name
    try:
        return TopologyKind(str(name).strip().lower())
    except ValueError:
        valid = ", ".join(t.value for t in TopologyKind)
        raise InvalidArgumentError(f"Unknown topology '{name}'. Valid topologies: {valid}")


@dataclass(frozen=True)
class GroupGP:
    """Group generate/propagate pair for a span; fields may be numpy bool arrays"""
    g: bool
    p: Optional[bool] = None


def combine_gp(hi: GroupGP, lo: GroupGP) -> GroupGP:
    """Black cell: (g, p) of (i:j) from the adjacent spans (i:k) and (k-1:j)"""
    return GroupGP(g=hi.g | (hi.p & lo.g), p=hi.p & lo.p)


def gray_combine(node: GroupGP, lower_g: bool) -> bool:
    """Gray cell: generate-only combine, c = g | (p & g_lower)"""
    return node.g | (node.p & lower_g)


class Span(NamedTuple):
    hi: int
    lo: int

    def __str__(self) -> str:
        return f"({self.hi}:{self.lo})"


class PrefixNode(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    kind: NodeKind
    level: int = Field(ge=0)
    span: Span
    inputs: Tuple[int, ...] = ()


class PrefixNetwork(BaseModel):
    """Immutable carry network; `outputs[i]` is the node producing span (i:0)"""
    model_config = ConfigDict(frozen=True)

    width: int = Field(ge=1)
    topology: TopologyKind
    nodes: Tuple[PrefixNode, ...]
    outputs: Tuple[int, ...]

    def node_map(self) -> Dict[int, PrefixNode]:
        return {node.id: node for node in self.nodes}

    def leaves(self) -> List[PrefixNode]:
        return [node for node in self.nodes if node.kind == NodeKind.LEAF]

    def to_json(self, indent: Optional[int] = 2) -> str:
        return self.model_dump_json(indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "PrefixNetwork":
        return cls.model_validate_json(text)


def save_network(net: PrefixNetwork, filename: Union[str, Path]) -> Path:
    """Write the JSON interchange document"""
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(net.to_json() + "\n", encoding="utf-8", newline="\n")
    logger.info(f"Saved {net.topology.value} width {net.width} network to {path}")
    return path


def load_network(filename: Union[str, Path]) -> PrefixNetwork:
    """Read a network written by save_network"""
    path = Path(filename)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidArgumentError(f"Cannot read network file {path}: {e}")
    return PrefixNetwork.model_validate(data)


class ViolationKind(str, Enum):
    DUPLICATE_ID = "duplicate-id"
    DANGLING_INPUT = "dangling-input"
    ARITY = "arity"
    BAD_SPAN = "bad-span"
    MISSING_LEAF = "missing-leaf"
    CYCLE = "cycle"
    UNREACHABLE = "unreachable"
    LEVEL_ORDER = "level-order"
    SPAN_MISMATCH = "span-mismatch"
    GRAY_PROPAGATE_USED = "gray-propagate-used"
    DANGLING_OUTPUT = "dangling-output"
    MISSING_OUTPUT = "missing-output"


# Violations that make a network impossible to evaluate at all
BLOCKING_VIOLATIONS = frozenset({
    ViolationKind.DUPLICATE_ID,
    ViolationKind.DANGLING_INPUT,
    ViolationKind.ARITY,
    ViolationKind.BAD_SPAN,
    ViolationKind.MISSING_LEAF,
    ViolationKind.CYCLE,
    ViolationKind.GRAY_PROPAGATE_USED,
    ViolationKind.DANGLING_OUTPUT,
})


class Violation(BaseModel):
    kind: ViolationKind
    node_id: Optional[int] = None
    message: str


class ValidationReport(BaseModel):
    violations: List[Violation] = []

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def evaluable(self) -> bool:
        return not any(v.kind in BLOCKING_VIOLATIONS for v in self.violations)

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def summary(self) -> str:
        """One line listing every violation"""
        if self.valid:
            return "valid"
        return "; ".join(f"{v.kind.value}: {v.message}" for v in self.violations)


def network_graph(net: PrefixNetwork) -> nx.DiGraph:
    """Directed graph with an edge input -> consumer for every resolvable input"""
    graph = nx.DiGraph()
    ids = {node.id for node in net.nodes}
    graph.add_nodes_from(sorted(ids))
    for node in net.nodes:
        for source in node.inputs:
            if source in ids:
                graph.add_edge(source, node.id)
    return graph


def propagate_consumers(net: PrefixNetwork) -> Dict[int, int]:
    """Count the readers of each node's group propagate.

    Operators read the propagate of their hi input, Black nodes also of their
    lo input, and the carry stage reads it for every output. A buffer forwards
    its source's propagate net, so its readers are charged to the source.
    """
    nodes = net.node_map()
    counts = {node_id: 0 for node_id in nodes}
    for node in net.nodes:
        if node.kind in OPERATOR_KINDS and len(node.inputs) == 2:
            hi, lo = node.inputs
            if hi in counts:
                counts[hi] += 1
            if node.kind == NodeKind.BLACK and lo in counts:
                counts[lo] += 1
    for node_id in net.outputs:
        if node_id in counts:
            counts[node_id] += 1

    graph = network_graph(net)
    if not nx.is_directed_acyclic_graph(graph):
        return counts
    for node_id in reversed(list(nx.lexicographical_topological_sort(graph))):
        node = nodes[node_id]
        if node.kind == NodeKind.BUFFER and node.inputs and node.inputs[0] in counts:
            counts[node.inputs[0]] += counts[node_id]
    return counts


def validate_network(net: PrefixNetwork) -> ValidationReport:
    """Check structure and semantics; an empty violation list means valid"""
    violations: List[Violation] = []

    def add(kind: ViolationKind, message: str, node_id: Optional[int] = None):
        violations.append(Violation(kind=kind, node_id=node_id, message=message))

    nodes: Dict[int, PrefixNode] = {}
    for node in net.nodes:
        if node.id in nodes:
            add(ViolationKind.DUPLICATE_ID, f"node id {node.id} used more than once", node.id)
        nodes[node.id] = node

    # Per-node shape
    for node in net.nodes:
        expected = NODE_ARITY[node.kind]
        if len(node.inputs) != expected:
            add(ViolationKind.ARITY,
                f"{node.kind.value} node {node.id} has {len(node.inputs)} inputs, expected {expected}",
                node.id)
        for source in node.inputs:
            if source not in nodes:
                add(ViolationKind.DANGLING_INPUT, f"node {node.id} reads unknown node {source}", node.id)
        hi, lo = node.span
        if not (hi >= lo >= 0) or hi >= net.width:
            add(ViolationKind.BAD_SPAN, f"node {node.id} has span {node.span} outside width {net.width}", node.id)
        if node.kind == NodeKind.LEAF and hi != lo:
            add(ViolationKind.BAD_SPAN, f"leaf {node.id} spans {node.span}, expected a single bit", node.id)

    # One leaf per bit
    leaf_bits: Dict[int, int] = {}
    for node in net.nodes:
        if node.kind == NodeKind.LEAF:
            leaf_bits[node.span.hi] = leaf_bits.get(node.span.hi, 0) + 1
    for bit in range(net.width):
        if leaf_bits.get(bit, 0) != 1:
            add(ViolationKind.MISSING_LEAF, f"bit {bit} has {leaf_bits.get(bit, 0)} leaves, expected 1")

    # Acyclicity and reachability
    graph = network_graph(net)
    acyclic = nx.is_directed_acyclic_graph(graph)
    if not acyclic:
        cycle = [edge[0] for edge in nx.find_cycle(graph)]
        add(ViolationKind.CYCLE, f"cycle through nodes {cycle}", cycle[0])
    reached = set()
    for node in net.nodes:
        if node.kind == NodeKind.LEAF:
            reached.add(node.id)
            reached |= nx.descendants(graph, node.id)
    for node in net.nodes:
        if node.id not in reached:
            add(ViolationKind.UNREACHABLE, f"node {node.id} is not reachable from any leaf", node.id)

    # Levels and span concatenation
    for node in net.nodes:
        if node.kind == NodeKind.LEAF and node.level != 0:
            add(ViolationKind.LEVEL_ORDER, f"leaf {node.id} sits at level {node.level}", node.id)
        sources = [nodes[s] for s in node.inputs if s in nodes]
        for source in sources:
            if source.level >= node.level:
                add(ViolationKind.LEVEL_ORDER,
                    f"node {node.id} (level {node.level}) reads node {source.id} (level {source.level})",
                    node.id)
        if len(sources) != len(node.inputs) or len(node.inputs) != NODE_ARITY[node.kind]:
            continue
        if node.kind in OPERATOR_KINDS:
            hi_src, lo_src = sources
            adjacent = hi_src.span.lo == lo_src.span.hi + 1
            joined = Span(hi_src.span.hi, lo_src.span.lo)
            if not adjacent or node.span != joined:
                add(ViolationKind.SPAN_MISMATCH,
                    f"node {node.id} declares {node.span} but combines {hi_src.span} with {lo_src.span}",
                    node.id)
        elif node.kind == NodeKind.BUFFER and sources[0].span != node.span:
            add(ViolationKind.SPAN_MISMATCH,
                f"buffer {node.id} declares {node.span} but forwards {sources[0].span}", node.id)

    # Gray nodes have no propagate output to read
    if acyclic:
        readers = propagate_consumers(net)
        for node in net.nodes:
            if node.kind == NodeKind.GRAY and readers.get(node.id, 0) > 0:
                add(ViolationKind.GRAY_PROPAGATE_USED,
                    f"gray node {node.id} has {readers[node.id]} propagate readers", node.id)

    # One (i:0) output per bit
    for bit in range(net.width):
        expected = Span(bit, 0)
        if bit >= len(net.outputs) or net.outputs[bit] not in nodes:
            add(ViolationKind.DANGLING_OUTPUT, f"missing {expected}: no output node for bit {bit}")
            continue
        node = nodes[net.outputs[bit]]
        if node.span != expected:
            add(ViolationKind.MISSING_OUTPUT,
                f"missing {expected}: bit {bit} output node {node.id} spans {node.span}", node.id)
    if len(net.outputs) > net.width:
        add(ViolationKind.DANGLING_OUTPUT, f"{len(net.outputs)} outputs declared for width {net.width}")

    if violations:
        logger.debug(f"Network {net.topology.value}/{net.width}: {len(violations)} violations")
    return ValidationReport(violations=violations)


def require_valid(net: PrefixNetwork) -> None:
    """Raise InvalidNetworkError unless the network validates cleanly"""
    report = validate_network(net)
    if not report.valid:
        raise InvalidNetworkError(f"Invalid prefix network: {report.summary()}", report)


class OperatorCounts(BaseModel):
    black: int = 0
    gray: int = 0
    buffer: int = 0

    @property
    def operators(self) -> int:
        return self.black + self.gray


def longest_path(net: PrefixNetwork) -> Tuple[int, List[int]]:
    """Longest leaf-to-output path counted in operator nodes (buffers weigh 0).

    Among equally long paths the lexicographically smallest node-id list wins.
    """
    require_valid(net)
    nodes = net.node_map()
    graph = network_graph(net)
    best: Dict[int, Tuple[int, List[int]]] = {}
    for node_id in nx.lexicographical_topological_sort(graph):
        node = nodes[node_id]
        weight = 1 if node.kind in OPERATOR_KINDS else 0
        if not node.inputs:
            best[node_id] = (weight, [node_id])
            continue
        depth = max(best[s][0] for s in node.inputs)
        path = min(best[s][1] + [node_id] for s in node.inputs if best[s][0] == depth)
        best[node_id] = (depth + weight, path)

    depth = max(best[o][0] for o in net.outputs)
    path = min(best[o][1] for o in net.outputs if best[o][0] == depth)
    return depth, path


def network_depth(net: PrefixNetwork) -> int:
    """Operator count along the longest leaf-to-output path"""
    return longest_path(net)[0]


def operator_counts(net: PrefixNetwork) -> OperatorCounts:
    """Census by node kind"""
    counts = OperatorCounts()
    for node in net.nodes:
        if node.kind == NodeKind.BLACK:
            counts.black += 1
        elif node.kind == NodeKind.GRAY:
            counts.gray += 1
        elif node.kind == NodeKind.BUFFER:
            counts.buffer += 1
    return counts


def fanout_map(net: PrefixNetwork) -> Dict[int, int]:
    """Consumers per node: node inputs reading it plus one tap per output designation"""
    fanout = {node.id: 0 for node in net.nodes}
    for node in net.nodes:
        for source in node.inputs:
            if source in fanout:
                fanout[source] += 1
    for node_id in net.outputs:
        if node_id in fanout:
            fanout[node_id] += 1
    return fanout


def max_fanout(net: PrefixNetwork) -> int:
    """Largest consumer count of any node, leaves included"""
    return max(fanout_map(net).values())
