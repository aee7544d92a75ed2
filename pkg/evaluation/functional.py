"""
Functional Evaluation - Word-level evaluation of a prefix network as an adder

Preprocessing, the carry tree, the carry stage and postprocessing are applied
to numpy bool arrays, one element per vector, so the single-vector `evaluate`
and the batched `evaluate_batch` share one engine. The integer oracle is kept
apart from all of it.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from prefix.core import (
    GroupGP,
    NodeKind,
    PrefixNetwork,
    PrefixNode,
    combine_gp,
    gray_combine,
    network_graph,
    require_valid,
    validate_network,
)
from prefix.errors import InvalidArgumentError, InvalidNetworkError


logger = logging.getLogger(__name__)

MAX_BATCH_WIDTH = 64

BitArray = np.ndarray
WordArray = np.ndarray


@dataclass(frozen=True)
class Operand:
    """Unsigned operand as bits, index 0 = LSB"""
    width: int
    bits: Tuple[bool, ...]

    def __post_init__(self):
        if self.width < 1:
            raise InvalidArgumentError(f"Operand width must be >= 1, got {self.width}")
        if len(self.bits) != self.width:
            raise InvalidArgumentError(f"Operand has {len(self.bits)} bits, expected {self.width}")

    @classmethod
    def from_int(cls, value: int, width: int) -> "Operand":
        if value < 0 or value >> width:
            raise InvalidArgumentError(f"Value {value} does not fit in {width} bits")
        return cls(width=width, bits=tuple(bool((value >> i) & 1) for i in range(width)))

    @property
    def value(self) -> int:
        return sum(1 << i for i, bit in enumerate(self.bits) if bit)


@dataclass(frozen=True)
class AdditionResult:
    sum: Operand
    carry_out: bool

    @property
    def sum_value(self) -> int:
        return self.sum.value


def preprocess(a_bit, b_bit) -> GroupGP:
    """Per-bit generate and propagate: g = a AND b, p = a XOR b"""
    return GroupGP(g=a_bit & b_bit, p=a_bit ^ b_bit)


def postprocess(carry_in_bit, p):
    """Sum bit: carry into the bit XOR its propagate"""
    return carry_in_bit ^ p


def evaluation_order(net: PrefixNetwork) -> List[int]:
    """Deterministic topological order of node ids"""
    return list(nx.lexicographical_topological_sort(network_graph(net)))


def _check_network(net: PrefixNetwork, strict: bool) -> None:
    if strict:
        require_valid(net)
        return
    report = validate_network(net)
    if not report.evaluable:
        raise InvalidNetworkError(f"Network cannot be evaluated: {report.summary()}", report)
    if not report.valid:
        logger.warning(f"Evaluating invalid {net.topology.value} network in fault-injection mode: {report.summary()}")


def _node_value(node: PrefixNode, values: Dict[int, GroupGP], leaves: List[GroupGP]) -> GroupGP:
    if node.kind == NodeKind.LEAF:
        if not 0 <= node.span.hi < len(leaves):
            raise InvalidNetworkError(f"Leaf {node.id} names bit {node.span.hi} outside width {len(leaves)}")
        return leaves[node.span.hi]
    if node.kind == NodeKind.BUFFER:
        return values[node.inputs[0]]
    hi, lo = (values[source] for source in node.inputs)
    if node.kind == NodeKind.GRAY:
        return GroupGP(g=gray_combine(hi, lo.g))
    return combine_gp(hi, lo)


def _run(net: PrefixNetwork, a_bits: List[BitArray], b_bits: List[BitArray],
         cin: BitArray) -> Tuple[List[BitArray], BitArray]:
    """Sum bits and carry-out for per-bit operand arrays"""
    leaves = [preprocess(a, b) for a, b in zip(a_bits, b_bits)]
    nodes = net.node_map()
    values: Dict[int, GroupGP] = {}
    for node_id in evaluation_order(net):
        values[node_id] = _node_value(nodes[node_id], values, leaves)

    # c0 = cin, c(i+1) = G(i:0) | (P(i:0) & cin)
    carries = [cin]
    for output in net.outputs:
        carries.append(gray_combine(values[output], cin))
    sums = [postprocess(carries[i], leaves[i].p) for i in range(net.width)]
    return sums, carries[net.width]


def _as_words(values, name: str, width: int) -> WordArray:
    try:
        words = np.atleast_1d(np.asarray(values, dtype=np.uint64))
    except (OverflowError, ValueError, TypeError) as e:
        raise InvalidArgumentError(f"Operand {name} is not a valid unsigned word array: {e}")
    if width < 64 and np.any(words >> np.uint64(width)):
        raise InvalidArgumentError(f"Operand {name} has values that do not fit in {width} bits")
    return words


def _split_bits(words: WordArray, width: int) -> List[BitArray]:
    return [((words >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(width)]


def _join_bits(bits: Sequence[BitArray]) -> WordArray:
    words = np.zeros(len(bits[0]), dtype=np.uint64)
    for i, bit in enumerate(bits):
        words |= bit.astype(np.uint64) << np.uint64(i)
    return words


def _batch_inputs(width: int, a, b, cin) -> Tuple[WordArray, WordArray, BitArray]:
    if width > MAX_BATCH_WIDTH:
        raise InvalidArgumentError(f"Batch evaluation supports widths up to {MAX_BATCH_WIDTH}, got {width}")
    a_words = _as_words(a, "a", width)
    b_words = _as_words(b, "b", width)
    if a_words.shape != b_words.shape:
        raise InvalidArgumentError(f"Operand arrays differ in length: {a_words.shape} vs {b_words.shape}")
    cin_bits = np.broadcast_to(np.asarray(cin, dtype=bool), a_words.shape)
    return a_words, b_words, cin_bits


def evaluate_batch(net: PrefixNetwork, a, b, cin, strict: bool = True) -> Tuple[WordArray, BitArray]:
    """Evaluate many vectors at once; returns (sum words, carry-out flags)"""
    _check_network(net, strict)
    a_words, b_words, cin_bits = _batch_inputs(net.width, a, b, cin)
    sums, cout = _run(net, _split_bits(a_words, net.width), _split_bits(b_words, net.width), cin_bits)
    return _join_bits(sums), cout


def evaluate(net: PrefixNetwork, a: Union[Operand, int], b: Union[Operand, int], cin: bool = False,
             strict: bool = True) -> AdditionResult:
    """Add two operands through the network; any width is accepted"""
    a = a if isinstance(a, Operand) else Operand.from_int(a, net.width)
    b = b if isinstance(b, Operand) else Operand.from_int(b, net.width)
    if a.width != net.width or b.width != net.width:
        raise InvalidArgumentError(f"Operand widths {a.width}/{b.width} do not match network width {net.width}")
    _check_network(net, strict)

    a_bits = [np.array([bit]) for bit in a.bits]
    b_bits = [np.array([bit]) for bit in b.bits]
    sums, cout = _run(net, a_bits, b_bits, np.array([bool(cin)]))
    return AdditionResult(
        sum=Operand(width=net.width, bits=tuple(bool(bit[0]) for bit in sums)),
        carry_out=bool(cout[0]),
    )


def oracle_add(a: int, b: int, cin: bool, width: int) -> AdditionResult:
    """Reference addition in Python's unbounded integers"""
    if width < 1:
        raise InvalidArgumentError(f"Width must be >= 1, got {width}")
    for name, value in (("a", a), ("b", b)):
        if value < 0 or value >> width:
            raise InvalidArgumentError(f"Operand {name}={value} does not fit in {width} bits")
    total = a + b + int(bool(cin))
    return AdditionResult(
        sum=Operand.from_int(total & ((1 << width) - 1), width),
        carry_out=bool(total >> width),
    )


def oracle_add_batch(a, b, cin, width: int) -> Tuple[WordArray, BitArray]:
    """Vectorized reference addition on uint64 words.

    Validates its own inputs and shares no code with evaluate_batch.
    """
    if not 1 <= width <= 64:
        raise InvalidArgumentError(f"Reference batch addition supports widths 1..64, got {width}")
    a_words = np.atleast_1d(np.asarray(a, dtype=np.uint64))
    b_words = np.atleast_1d(np.asarray(b, dtype=np.uint64))
    if a_words.shape != b_words.shape:
        raise InvalidArgumentError(f"Operand arrays differ in length: {a_words.shape} vs {b_words.shape}")
    if width < 64:
        limit = np.uint64(1 << width)
        if np.any(a_words >= limit) or np.any(b_words >= limit):
            raise InvalidArgumentError(f"Operands do not fit in {width} bits")
    carry_in = np.broadcast_to(np.asarray(cin, dtype=bool), a_words.shape).astype(np.uint64)
    if width < 64:
        total = a_words + b_words + carry_in
        sums = total & np.uint64((1 << width) - 1)
        cout = (total >> np.uint64(width)).astype(bool)
        return sums, cout
    # Full 64-bit words: detect the carry from wraparound
    partial = a_words + b_words
    sums = partial + carry_in
    cout = (partial < a_words) | (sums < partial)
    return sums, cout


def corrupt_network(net: PrefixNetwork, node_id: Optional[int] = None) -> PrefixNetwork:
    """Rewire the lo input of a Black node to the wrong span, keeping its declared span.

    Defaults to the highest-numbered Black node that drives an output. The
    result is still evaluable, so verification in fault-injection mode
    reports mismatches instead of refusing the network.
    """
    nodes = net.node_map()
    if node_id is None:
        candidates = [o for o in net.outputs if nodes[o].kind == NodeKind.BLACK]
        if not candidates:
            raise InvalidArgumentError(f"Network of width {net.width} has no Black output node to corrupt")
        node_id = max(candidates)
    target = nodes.get(node_id)
    if target is None or target.kind != NodeKind.BLACK:
        raise InvalidArgumentError(f"Node {node_id} is not a Black node")

    hi, lo = target.inputs
    lo_node = nodes[lo]
    wrong_bit = lo_node.span.hi if lo_node.kind != NodeKind.LEAF else target.span.hi
    wrong_leaf = next(n.id for n in net.leaves() if n.span.hi == wrong_bit)

    rewired = target.model_copy(update={"inputs": (hi, wrong_leaf)})
    logger.info(f"Corrupted node {node_id} {target.span}: lo input {lo} -> leaf {wrong_leaf}")
    return PrefixNetwork(
        width=net.width,
        topology=net.topology,
        nodes=tuple(rewired if n.id == node_id else n for n in net.nodes),
        outputs=net.outputs,
    )
