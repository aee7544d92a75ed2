"""
Topologies - Deterministic generators for prefix carry networks

Each generator combines spans level by level through a builder that memoizes
spans, so a given (topology, width) always yields the same node list.
"""

import logging
from typing import Callable, Dict, List, Optional, Tuple, Union

from prefix.core import (
    NodeKind,
    OPERATOR_KINDS,
    PrefixNetwork,
    PrefixNode,
    Span,
    TopologyKind,
    parse_topology,
    propagate_consumers,
    require_valid,
)
from prefix.errors import InvalidArgumentError


logger = logging.getLogger(__name__)

# Ordering of kinds when two nodes share level and span
_KIND_ORDER = {NodeKind.LEAF: 0, NodeKind.BUFFER: 1, NodeKind.GRAY: 2, NodeKind.BLACK: 3}


class _NetworkBuilder:
    """Accumulates nodes keyed by span while a generator runs"""

    def __init__(self, width: int):
        self.width = width
        self.kinds: Dict[int, NodeKind] = {}
        self.spans: Dict[int, Span] = {}
        self.levels: Dict[int, int] = {}
        self.inputs: Dict[int, Tuple[int, ...]] = {}
        self._by_span: Dict[Span, int] = {}
        for bit in range(width):
            self._add(NodeKind.LEAF, Span(bit, bit), 0, ())

    def _add(self, kind: NodeKind, span: Span, level: int, inputs: Tuple[int, ...]) -> int:
        node_id = len(self.kinds)
        self.kinds[node_id] = kind
        self.spans[node_id] = span
        self.levels[node_id] = level
        self.inputs[node_id] = inputs
        if kind != NodeKind.BUFFER:
            self._by_span[span] = node_id
        return node_id

    def leaf(self, bit: int) -> int:
        return bit

    def combine(self, hi: int, lo: int) -> int:
        """Operator node for span(hi) joined with the adjacent lower span(lo)"""
        hi_span, lo_span = self.spans[hi], self.spans[lo]
        if hi_span.lo != lo_span.hi + 1:
            raise AssertionError(f"Non-adjacent spans {hi_span} and {lo_span}")
        span = Span(hi_span.hi, lo_span.lo)
        if span in self._by_span:
            return self._by_span[span]
        level = max(self.levels[hi], self.levels[lo]) + 1
        return self._add(NodeKind.BLACK, span, level, (hi, lo))

    def prefix(self, bit: int) -> int:
        return self._by_span[Span(bit, 0)]


def _ripple(b: _NetworkBuilder) -> None:
    """Serial chain: (i:0) from (i:i) and (i-1:0)"""
    current = b.leaf(0)
    for bit in range(1, b.width):
        current = b.combine(b.leaf(bit), current)


def _kogge_stone(b: _NetworkBuilder) -> None:
    """Every bit combines at distances 1, 2, 4, ... until it reaches bit 0"""
    current = [b.leaf(bit) for bit in range(b.width)]
    distance = 1
    while distance < b.width:
        previous = list(current)
        for bit in range(distance, b.width):
            current[bit] = b.combine(previous[bit], previous[bit - distance])
        distance *= 2


def _sklansky(b: _NetworkBuilder) -> None:
    """Upper half of each block reads the top prefix of its lower half"""
    current = [b.leaf(bit) for bit in range(b.width)]
    step = 2
    while step // 2 < b.width:
        half = step // 2
        previous = list(current)
        for bit in range(b.width):
            block_start = (bit // step) * step
            if bit - block_start >= half:
                current[bit] = b.combine(previous[bit], previous[block_start + half - 1])
        step *= 2


def _han_carlson(b: _NetworkBuilder) -> None:
    current = [b.leaf(bit) for bit in range(b.width)]
    # Odd bits pair with their even neighbour
    for bit in range(1, b.width, 2):
        current[bit] = b.combine(current[bit], current[bit - 1])
    # Kogge-Stone over the odd bits
    distance = 2
    while distance < b.width:
        previous = list(current)
        for bit in range(1, b.width, 2):
            if b.spans[previous[bit]].lo > 0:
                current[bit] = b.combine(previous[bit], previous[bit - distance])
        distance *= 2
    # Even bits pick up the finished odd prefix below them
    for bit in range(2, b.width, 2):
        current[bit] = b.combine(current[bit], current[bit - 1])


def _brent_kung(b: _NetworkBuilder) -> None:
    # Built for the next power of two; spans reaching past width-1 are skipped
    stages = max(0, (b.width - 1).bit_length())
    size = 1 << stages
    top: Dict[int, int] = {bit: b.leaf(bit) for bit in range(b.width)}

    # Up-sweep: (i : i-2^l+1) at i = 2^l-1, 2^(l+1)-1, ...
    for level in range(1, stages + 1):
        stride = 1 << level
        half = stride >> 1
        for bit in range(stride - 1, size, stride):
            if bit >= b.width:
                break
            top[bit] = b.combine(top[bit], top[bit - half])

    # Down-sweep: fill (i:0) at i = k*2^l + 2^(l-1) - 1
    for level in range(stages - 1, 0, -1):
        stride = 1 << level
        half = stride >> 1
        for bit in range(stride + half - 1, size, stride):
            if bit >= b.width:
                break
            top[bit] = b.combine(top[bit], b.prefix(bit - half))


_GENERATORS: Dict[TopologyKind, Callable[[_NetworkBuilder], None]] = {
    TopologyKind.BRENT_KUNG: _brent_kung,
    TopologyKind.KOGGE_STONE: _kogge_stone,
    TopologyKind.SKLANSKY: _sklansky,
    TopologyKind.HAN_CARLSON: _han_carlson,
    TopologyKind.RIPPLE_SERIAL: _ripple,
}


def _prune_dead(b: _NetworkBuilder, outputs: List[int]) -> None:
    """Drop operator nodes that feed neither an output nor a live node"""
    live = set(range(b.width)) | set(outputs)
    stack = list(outputs)
    while stack:
        node_id = stack.pop()
        for source in b.inputs[node_id]:
            if source not in live:
                live.add(source)
                stack.append(source)
    for node_id in [n for n in b.kinds if n not in live]:
        del b.kinds[node_id], b.spans[node_id], b.levels[node_id], b.inputs[node_id]


def _align_levels(b: _NetworkBuilder) -> None:
    """Insert buffer chains so every operator input comes from the level just below"""
    chains: Dict[Tuple[int, int], int] = {}
    for node_id in sorted(b.kinds, key=lambda n: (b.levels[n], n)):
        if b.kinds[node_id] not in OPERATOR_KINDS:
            continue
        rewired = []
        for source in b.inputs[node_id]:
            target_level = b.levels[node_id] - 1
            current = source
            for level in range(b.levels[source] + 1, target_level + 1):
                key = (source, level)
                if key not in chains:
                    chains[key] = b._add(NodeKind.BUFFER, b.spans[source], level, (current,))
                current = chains[key]
            rewired.append(current)
        b.inputs[node_id] = tuple(rewired)


def _freeze(b: _NetworkBuilder, topology: TopologyKind, outputs: List[int]) -> Tuple[PrefixNetwork, Dict[int, int]]:
    """Renumber (leaves first, then by level, span, kind) and build the immutable network"""
    order = sorted(
        b.kinds,
        key=lambda n: (b.kinds[n] != NodeKind.LEAF, b.levels[n], b.spans[n].hi, b.spans[n].lo,
                       _KIND_ORDER[b.kinds[n]], n),
    )
    renumber = {old: new for new, old in enumerate(order)}
    nodes = tuple(
        PrefixNode(
            id=renumber[old],
            kind=b.kinds[old],
            level=b.levels[old],
            span=b.spans[old],
            inputs=tuple(renumber[s] for s in b.inputs[old]),
        )
        for old in order
    )
    net = PrefixNetwork(
        width=b.width,
        topology=topology,
        nodes=nodes,
        outputs=tuple(renumber[o] for o in outputs),
    )
    return net, renumber


def build_network(topology: Union[str, TopologyKind], width: int, align_levels: bool = False) -> PrefixNetwork:
    """Construct the prefix network of a topology at the given width"""
    topology = parse_topology(topology)
    if not isinstance(width, int) or width < 1:
        raise InvalidArgumentError(f"Width must be a positive integer, got {width}")

    builder = _NetworkBuilder(width)
    _GENERATORS[topology](builder)
    outputs = [builder.prefix(bit) for bit in range(width)]
    _prune_dead(builder, outputs)

    # Gray iff nothing reads the group propagate
    draft, renumber = _freeze(builder, topology, outputs)
    readers = propagate_consumers(draft)
    for old_id, new_id in renumber.items():
        if builder.kinds[old_id] == NodeKind.BLACK and readers[new_id] == 0:
            builder.kinds[old_id] = NodeKind.GRAY

    if align_levels:
        _align_levels(builder)

    net, _ = _freeze(builder, topology, outputs)
    require_valid(net)
    logger.debug(f"Built {topology.value} network: width {width}, {len(net.nodes)} nodes")
    return net


def available_topologies() -> List[TopologyKind]:
    """Every topology build_network accepts"""
    return list(TopologyKind)
