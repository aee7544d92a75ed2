"""
Gate Netlist - Cell library and expansion of a prefix network into primitive gates

Every gate belongs to a cell instance (preprocessing, black/gray/white cell,
postprocessing); the carry stage is a row of gray cells whose lower generate
is cin. Net names:

  a{i}, b{i}, cin          input ports
  g_{L}_{hi}_{lo}          group generate of the node at level L over (hi:lo)
  p_{L}_{hi}_{lo}          group propagate (a white cell reuses its source's)
  t_{L}_{hi}_{lo}, cp{i}   internal AND terms of tree and carry cells
  c{i}                     carry into bit i, c{n} drives cout
  s{i}                     sum bit i
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from prefix.core import NodeKind, PrefixNetwork, PrefixNode, require_valid
from prefix.errors import StructuralError


logger = logging.getLogger(__name__)


class GateKind(str, Enum):
    AND = "and"
    OR = "or"
    XOR = "xor"
    BUF = "buf"


GATE_ARITY = {GateKind.AND: 2, GateKind.OR: 2, GateKind.XOR: 2, GateKind.BUF: 1}


class CellKind(str, Enum):
    PREPROCESSING = "preprocessing"
    BLACK_CELL = "black_cell"
    GRAY_CELL = "gray_cell"
    WHITE_CELL = "white_cell"
    POSTPROCESSING = "postprocessing"


@dataclass(frozen=True)
class GateTemplate:
    name: str
    kind: GateKind
    inputs: Tuple[str, ...]
    output: str


@dataclass(frozen=True)
class CellTemplate:
    kind: CellKind
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    gates: Tuple[GateTemplate, ...]
    wires: Tuple[str, ...] = ()

    @property
    def ports(self) -> Tuple[str, ...]:
        return self.inputs + self.outputs


CELL_LIBRARY: Dict[CellKind, CellTemplate] = {
    CellKind.PREPROCESSING: CellTemplate(
        kind=CellKind.PREPROCESSING,
        inputs=("a", "b"),
        outputs=("g", "p"),
        gates=(
            GateTemplate("g_and", GateKind.AND, ("a", "b"), "g"),
            GateTemplate("p_xor", GateKind.XOR, ("a", "b"), "p"),
        ),
    ),
    CellKind.BLACK_CELL: CellTemplate(
        kind=CellKind.BLACK_CELL,
        inputs=("g_hi", "p_hi", "g_lo", "p_lo"),
        outputs=("g", "p"),
        wires=("t",),
        gates=(
            GateTemplate("t_and", GateKind.AND, ("p_hi", "g_lo"), "t"),
            GateTemplate("g_or", GateKind.OR, ("g_hi", "t"), "g"),
            GateTemplate("p_and", GateKind.AND, ("p_hi", "p_lo"), "p"),
        ),
    ),
    CellKind.GRAY_CELL: CellTemplate(
        kind=CellKind.GRAY_CELL,
        inputs=("g_hi", "p_hi", "g_lo"),
        outputs=("g",),
        wires=("t",),
        gates=(
            GateTemplate("t_and", GateKind.AND, ("p_hi", "g_lo"), "t"),
            GateTemplate("g_or", GateKind.OR, ("g_hi", "t"), "g"),
        ),
    ),
    CellKind.WHITE_CELL: CellTemplate(
        kind=CellKind.WHITE_CELL,
        inputs=("g_in",),
        outputs=("g",),
        gates=(GateTemplate("g_buf", GateKind.BUF, ("g_in",), "g"),),
    ),
    CellKind.POSTPROCESSING: CellTemplate(
        kind=CellKind.POSTPROCESSING,
        inputs=("c", "p"),
        outputs=("s",),
        gates=(GateTemplate("s_xor", GateKind.XOR, ("c", "p"), "s"),),
    ),
}


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    inputs: Tuple[str, ...]
    output: str
    cell: str = ""  # owning cell instance


@dataclass(frozen=True)
class CellInstance:
    name: str
    kind: CellKind
    bindings: Tuple[Tuple[str, str], ...]  # (cell port or wire, netlist net)

    def net(self, port: str) -> str:
        return dict(self.bindings)[port]


@dataclass(frozen=True)
class GateNetlist:
    name: str
    width: int
    gates: Tuple[Gate, ...]
    sum_nets: Tuple[str, ...]
    cout_net: str
    cells: Tuple[CellInstance, ...] = ()
    topology: str = ""

    @property
    def input_ports(self) -> Tuple[str, ...]:
        return (tuple(f"a{i}" for i in range(self.width)) + tuple(f"b{i}" for i in range(self.width))
                + ("cin",))

    @property
    def output_nets(self) -> Tuple[str, ...]:
        return self.sum_nets + (self.cout_net,)

    @property
    def nets(self) -> FrozenSet[str]:
        names = set(self.input_ports)
        for gate in self.gates:
            names.add(gate.output)
            names.update(gate.inputs)
        return frozenset(names)

    def drivers(self) -> Dict[str, Gate]:
        """Net name -> the gate driving it"""
        return {gate.output: gate for gate in self.gates}

    def census(self) -> Dict[str, int]:
        """Gate count per kind, in GateKind order"""
        counts = {kind.name: 0 for kind in GateKind}
        for gate in self.gates:
            counts[gate.kind.name] += 1
        return counts


def instantiate(kind: CellKind, name: str, bindings: Dict[str, str]) -> Tuple[CellInstance, List[Gate]]:
    """Bind a library cell's ports and wires to nets and produce its gates"""
    template = CELL_LIBRARY[kind]
    ordered = tuple((port, bindings[port]) for port in template.ports + template.wires)
    instance = CellInstance(name=name, kind=kind, bindings=ordered)
    nets = dict(ordered)
    gates = [
        Gate(
            id=f"{name}.{g.name}",
            kind=g.kind,
            inputs=tuple(nets[port] for port in g.inputs),
            output=nets[g.output],
            cell=name,
        )
        for g in template.gates
    ]
    return instance, gates


_CELL_FOR_NODE = {
    NodeKind.BLACK: CellKind.BLACK_CELL,
    NodeKind.GRAY: CellKind.GRAY_CELL,
    NodeKind.BUFFER: CellKind.WHITE_CELL,
}


def _node_tags(net: PrefixNetwork) -> Dict[int, str]:
    """`{level}_{hi}_{lo}` per node, with the id appended where two nodes would collide"""
    tags = {node.id: f"{node.level}_{node.span.hi}_{node.span.lo}" for node in net.nodes}
    seen: Dict[str, int] = {}
    for tag in tags.values():
        seen[tag] = seen.get(tag, 0) + 1
    return {node_id: tag if seen[tag] == 1 else f"{tag}_n{node_id}" for node_id, tag in tags.items()}


def expand_to_gates(net: PrefixNetwork, name: str = "prefix_adder") -> GateNetlist:
    """Gate-level netlist of the whole adder built from the cell library"""
    require_valid(net)
    width = net.width
    tags = _node_tags(net)
    g_net: Dict[int, str] = {}
    p_net: Dict[int, str] = {}
    cells: List[CellInstance] = []
    gates: List[Gate] = []

    def add(kind: CellKind, instance_name: str, bindings: Dict[str, str]):
        instance, new_gates = instantiate(kind, instance_name, bindings)
        cells.append(instance)
        gates.extend(new_gates)

    ordered: List[PrefixNode] = sorted(net.nodes, key=lambda n: (n.level, n.id))
    for node in ordered:
        tag = tags[node.id]
        if node.kind == NodeKind.LEAF:
            bit = node.span.hi
            g_net[node.id], p_net[node.id] = f"g_{tag}", f"p_{tag}"
            add(CellKind.PREPROCESSING, f"pre{bit}",
                {"a": f"a{bit}", "b": f"b{bit}", "g": g_net[node.id], "p": p_net[node.id]})
            continue

        kind = _CELL_FOR_NODE[node.kind]
        g_net[node.id] = f"g_{tag}"
        if node.kind == NodeKind.BUFFER:
            source = node.inputs[0]
            p_net[node.id] = p_net[source]
            add(kind, f"white_{tag}", {"g_in": g_net[source], "g": g_net[node.id]})
            continue

        hi, lo = node.inputs
        bindings = {"g_hi": g_net[hi], "p_hi": p_net[hi], "g_lo": g_net[lo], "t": f"t_{tag}",
                    "g": g_net[node.id]}
        if node.kind == NodeKind.BLACK:
            p_net[node.id] = f"p_{tag}"
            bindings.update({"p_lo": p_net[lo], "p": p_net[node.id]})
            add(kind, f"black_{tag}", bindings)
        else:
            add(kind, f"gray_{tag}", bindings)

    # Carry stage: c(i+1) = G(i:0) | (P(i:0) & cin)
    for bit, output in enumerate(net.outputs):
        add(CellKind.GRAY_CELL, f"carry{bit}",
            {"g_hi": g_net[output], "p_hi": p_net[output], "g_lo": "cin", "t": f"cp{bit}", "g": f"c{bit + 1}"})

    leaf_p = {node.span.hi: p_net[node.id] for node in net.leaves()}
    for bit in range(width):
        add(CellKind.POSTPROCESSING, f"post{bit}",
            {"c": "cin" if bit == 0 else f"c{bit}", "p": leaf_p[bit], "s": f"s{bit}"})

    netlist = GateNetlist(
        name=name,
        width=width,
        gates=tuple(gates),
        sum_nets=tuple(f"s{bit}" for bit in range(width)),
        cout_net=f"c{width}",
        cells=tuple(cells),
        topology=net.topology.value,
    )
    problems = check_netlist(netlist)
    if problems:
        raise StructuralError(f"Expansion produced a broken netlist: {'; '.join(problems)}")
    logger.debug(f"Expanded {net.topology.value}/{width} into {len(gates)} gates, {len(cells)} cells")
    return netlist


def flatten_cells(netlist: GateNetlist) -> GateNetlist:
    """Rebuild the gate list from the cell instances alone"""
    gates: List[Gate] = []
    for instance in netlist.cells:
        _, cell_gates = instantiate(instance.kind, instance.name, dict(instance.bindings))
        gates.extend(cell_gates)
    return GateNetlist(
        name=netlist.name,
        width=netlist.width,
        gates=tuple(gates),
        sum_nets=netlist.sum_nets,
        cout_net=netlist.cout_net,
        cells=netlist.cells,
        topology=netlist.topology,
    )


def gate_graph(netlist: GateNetlist) -> nx.DiGraph:
    """Gate-to-gate dependency graph (edge driver -> reader)"""
    graph = nx.DiGraph()
    graph.add_nodes_from(gate.id for gate in netlist.gates)
    drivers = netlist.drivers()
    for gate in netlist.gates:
        for net_name in gate.inputs:
            driver = drivers.get(net_name)
            if driver is not None:
                graph.add_edge(driver.id, gate.id)
    return graph


def find_cycle(netlist: GateNetlist) -> Optional[List[str]]:
    """Gate ids along one combinational cycle, or None"""
    graph = gate_graph(netlist)
    try:
        return [edge[0] for edge in nx.find_cycle(graph)]
    except nx.NetworkXNoCycle:
        return None


def check_netlist(netlist: GateNetlist) -> List[str]:
    """Problems with arity, drivers, port binding and acyclicity; empty means sound"""
    problems: List[str] = []
    ports = set(netlist.input_ports)

    seen_ids = set()
    driven: Dict[str, str] = {}
    for gate in netlist.gates:
        if gate.id in seen_ids:
            problems.append(f"gate id {gate.id} used more than once")
        seen_ids.add(gate.id)
        if len(gate.inputs) != GATE_ARITY[gate.kind]:
            problems.append(f"gate {gate.id} ({gate.kind.value}) has {len(gate.inputs)} inputs")
        if gate.output in ports:
            problems.append(f"gate {gate.id} drives input port {gate.output}")
        if gate.output in driven:
            problems.append(f"net {gate.output} driven by {driven[gate.output]} and {gate.id}")
        driven.setdefault(gate.output, gate.id)

    for gate in netlist.gates:
        for net_name in gate.inputs:
            if net_name not in ports and net_name not in driven:
                problems.append(f"gate {gate.id} reads undriven net {net_name}")

    if len(netlist.sum_nets) != netlist.width:
        problems.append(f"{len(netlist.sum_nets)} sum nets bound for width {netlist.width}")
    for net_name in netlist.output_nets:
        if net_name not in ports and net_name not in driven:
            problems.append(f"output net {net_name} is undriven")

    cycle = find_cycle(netlist)
    if cycle:
        problems.append(f"combinational cycle through gates {cycle}")
    return problems
