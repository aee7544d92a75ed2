"""
Gate Simulator - Levelized two-value simulation of a gate netlist

The netlist is levelized once; each evaluation walks the gates in that order
over numpy bool arrays, one element per vector. Zero-delay semantics: delays
only enter through critical_path.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from costing.cost_model import DelayModel
from netlist.gates import CellKind, Gate, GateKind, GateNetlist, check_netlist, find_cycle, gate_graph
from prefix.errors import InvalidArgumentError, StructuralError
from reports.schemas import PathReport, PathStep, ToggleReport
from simulation.waveform import SimTrace


logger = logging.getLogger(__name__)

Vector = Tuple[int, int, bool]

_OPERATIONS = {
    GateKind.AND: lambda x, y: x & y,
    GateKind.OR: lambda x, y: x | y,
    GateKind.XOR: lambda x, y: x ^ y,
}


@dataclass(frozen=True)
class SimResult:
    sum: int
    cout: bool
    nets: Dict[str, bool]


class GateSimulator:
    """Levelized simulator bound to one netlist"""

    def __init__(self, netlist: GateNetlist):
        cycle = find_cycle(netlist)
        if cycle:
            raise StructuralError(f"Combinational cycle through gates {cycle}", cycle)
        problems = check_netlist(netlist)
        if problems:
            raise StructuralError(f"Netlist is not simulatable: {'; '.join(problems)}")

        self.netlist = netlist
        by_id = {gate.id: gate for gate in netlist.gates}
        self.order: List[Gate] = [by_id[g] for g in nx.lexicographical_topological_sort(gate_graph(netlist))]

        # Input pins per net, plus one for each primary output
        self.fanout: Dict[str, int] = {}
        for gate in netlist.gates:
            for net in gate.inputs:
                self.fanout[net] = self.fanout.get(net, 0) + 1
        for net in netlist.output_nets:
            self.fanout[net] = self.fanout.get(net, 0) + 1

        cell_kinds = {cell.name: cell.kind for cell in netlist.cells}
        self.stage: Dict[str, str] = {gate.id: _stage_of(gate, cell_kinds) for gate in netlist.gates}
        logger.debug(f"Levelized {len(self.order)} gates of {netlist.name}")

    def run(self, inputs: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Evaluate every net for per-port bool arrays"""
        values = dict(inputs)
        for gate in self.order:
            if gate.kind == GateKind.BUF:
                values[gate.output] = values[gate.inputs[0]].copy()
            else:
                x, y = (values[net] for net in gate.inputs)
                values[gate.output] = _OPERATIONS[gate.kind](x, y)
        return values

    def _port_inputs(self, a_bits: List[np.ndarray], b_bits: List[np.ndarray], cin: np.ndarray):
        inputs = {f"a{i}": bit for i, bit in enumerate(a_bits)}
        inputs.update({f"b{i}": bit for i, bit in enumerate(b_bits)})
        inputs["cin"] = cin
        return inputs

    def simulate(self, a: int, b: int, cin: bool) -> SimResult:
        """Sum and carry-out of one vector, with every net value"""
        width = self.netlist.width
        for name, value in (("a", a), ("b", b)):
            if value < 0 or value >> width:
                raise InvalidArgumentError(f"Operand {name}={value} does not fit in {width} bits")
        a_bits = [np.array([bool((a >> i) & 1)]) for i in range(width)]
        b_bits = [np.array([bool((b >> i) & 1)]) for i in range(width)]
        values = self.run(self._port_inputs(a_bits, b_bits, np.array([bool(cin)])))
        total = sum(1 << i for i, net in enumerate(self.netlist.sum_nets) if values[net][0])
        return SimResult(
            sum=total,
            cout=bool(values[self.netlist.cout_net][0]),
            nets={net: bool(v[0]) for net, v in sorted(values.items())},
        )

    def simulate_batch(self, a, b, cin) -> Tuple[np.ndarray, np.ndarray, Dict[str, np.ndarray]]:
        """Batched simulation: (sum words, carry-out flags, net values)"""
        width = self.netlist.width
        if width > 64:
            raise InvalidArgumentError(f"Batch simulation supports widths up to 64, got {width}")
        a_words = np.atleast_1d(np.asarray(a, dtype=np.uint64))
        b_words = np.atleast_1d(np.asarray(b, dtype=np.uint64))
        if a_words.shape != b_words.shape:
            raise InvalidArgumentError(f"Operand arrays differ in length: {a_words.shape} vs {b_words.shape}")
        if width < 64 and (np.any(a_words >> np.uint64(width)) or np.any(b_words >> np.uint64(width))):
            raise InvalidArgumentError(f"Operands do not fit in {width} bits")
        cin_bits = np.broadcast_to(np.asarray(cin, dtype=bool), a_words.shape)

        a_bits = [((a_words >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(width)]
        b_bits = [((b_words >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(width)]
        values = self.run(self._port_inputs(a_bits, b_bits, cin_bits))

        sums = np.zeros(a_words.shape, dtype=np.uint64)
        for i, net in enumerate(self.netlist.sum_nets):
            sums |= values[net].astype(np.uint64) << np.uint64(i)
        return sums, values[self.netlist.cout_net], values

    def _sequence(self, vectors: Sequence[Vector]) -> Dict[str, np.ndarray]:
        """Net values for an ordered vector list, one array element per vector"""
        if self.netlist.width <= 64:
            _, _, values = self.simulate_batch([v[0] for v in vectors], [v[1] for v in vectors],
                                               [bool(v[2]) for v in vectors])
            return values
        results = [self.simulate(a, b, cin).nets for a, b, cin in vectors]
        return {net: np.array([r[net] for r in results]) for net in results[0]}

    def critical_path(self, model: DelayModel) -> PathReport:
        """Longest weighted port-to-port path; ties resolve to the earlier input / output"""
        arrival: Dict[str, float] = {net: 0.0 for net in self.netlist.input_ports}
        via: Dict[str, Tuple[Gate, str, float]] = {}
        for gate in self.order:
            source = max(gate.inputs, key=lambda net: arrival[net])
            delay = model.gate_delay(gate.kind, self.fanout.get(gate.output, 0))
            arrival[gate.output] = arrival[source] + delay
            via[gate.output] = (gate, source, delay)

        end = max(self.netlist.output_nets, key=lambda net: arrival[net])
        steps: List[PathStep] = []
        net = end
        while net in via:
            gate, source, delay = via[net]
            steps.append(PathStep(gate=gate.id, kind=gate.kind.value, output=net, delay=delay, arrival=arrival[net]))
            net = source
        steps.reverse()
        return PathReport(start=_port_label(net, self.netlist), end=_port_label(end, self.netlist),
                          steps=steps, delay=arrival[end])

    def toggle_count(self, vectors: Sequence[Vector]) -> ToggleReport:
        """Output transitions per gate between consecutive vectors"""
        if len(vectors) < 2:
            raise InvalidArgumentError(f"Toggle counting needs at least 2 vectors, got {len(vectors)}")
        values = self._sequence(vectors)
        per_gate: Dict[str, int] = {}
        per_stage: Dict[str, int] = {}
        for gate in self.netlist.gates:
            trace = values[gate.output]
            toggles = int(np.count_nonzero(trace[1:] != trace[:-1]))
            per_gate[gate.id] = toggles
            stage = self.stage[gate.id]
            per_stage[stage] = per_stage.get(stage, 0) + toggles
        return ToggleReport(vectors=len(vectors), per_gate=per_gate, per_stage=per_stage,
                            total=sum(per_gate.values()))

    def build_trace(self, schedule: Sequence[Tuple[int, int, int, bool]], include_internal: bool = False) -> SimTrace:
        """Value changes of the port buses (and optionally every internal net) over a schedule"""
        if not schedule:
            raise InvalidArgumentError("Trace schedule is empty")
        times = [step[0] for step in schedule]
        if any(t < 0 for t in times) or any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise InvalidArgumentError(f"Schedule times must be non-negative and strictly increasing, got {times}")

        netlist = self.netlist
        width = netlist.width
        signals = {"a": width, "b": width, "cin": 1, "sum": width, "cout": 1}
        internal: List[str] = []
        if include_internal:
            outputs = set(netlist.output_nets)
            internal = sorted(g.output for g in netlist.gates if g.output not in outputs)
            signals.update({net: 1 for net in internal})

        values = self._sequence([(a, b, cin) for _, a, b, cin in schedule])
        trace = SimTrace(signals=signals, schedule=[(t, a, b, bool(cin)) for t, a, b, cin in schedule])
        previous: Dict[str, Optional[int]] = {name: None for name in signals}
        for index, (time_ns, a, b, cin) in enumerate(schedule):
            current = {
                "a": a, "b": b, "cin": int(bool(cin)),
                "sum": sum(1 << i for i, net in enumerate(netlist.sum_nets) if values[net][index]),
                "cout": int(values[netlist.cout_net][index]),
            }
            current.update({net: int(values[net][index]) for net in internal})
            for name in sorted(current):
                if current[name] != previous[name]:
                    trace.changes.append((time_ns, name, current[name]))
                    previous[name] = current[name]
        return trace


def _stage_of(gate: Gate, cell_kinds: Dict[str, CellKind]) -> str:
    kind = cell_kinds.get(gate.cell)
    if kind is None:
        return "unassigned"
    if kind == CellKind.PREPROCESSING:
        return "preprocessing"
    if kind == CellKind.POSTPROCESSING:
        return "postprocessing"
    if gate.cell.startswith("carry"):
        return "carry"
    return "prefix_tree"


def _port_label(net: str, netlist: GateNetlist) -> str:
    if net in netlist.sum_nets:
        return f"sum[{netlist.sum_nets.index(net)}]"
    if net == netlist.cout_net:
        return "cout"
    if net != "cin" and net[:1] in ("a", "b") and net[1:].isdigit():
        return f"{net[0]}[{net[1:]}]"
    return net


def simulate(netlist: GateNetlist, a: int, b: int, cin: bool) -> SimResult:
    return GateSimulator(netlist).simulate(a, b, cin)


def simulate_batch(netlist: GateNetlist, a, b, cin) -> Tuple[np.ndarray, np.ndarray, Dict[str, np.ndarray]]:
    return GateSimulator(netlist).simulate_batch(a, b, cin)


def critical_path(netlist: GateNetlist, model: DelayModel) -> PathReport:
    return GateSimulator(netlist).critical_path(model)


def toggle_count(netlist: GateNetlist, vectors: Sequence[Vector]) -> ToggleReport:
    return GateSimulator(netlist).toggle_count(vectors)


def build_trace(netlist: GateNetlist, schedule: Sequence[Tuple[int, int, int, bool]],
                include_internal: bool = False) -> SimTrace:
    return GateSimulator(netlist).build_trace(schedule, include_internal)
