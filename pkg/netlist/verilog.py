"""
Verilog Emission - Structural Verilog-2001 for a gate netlist, plus a self-checking testbench

Flat style instantiates gate primitives directly in the top module; the
hierarchical style emits one module per cell kind and instantiates cells.
Output is byte-deterministic and uses LF line endings.
"""

import logging
import re
from enum import Enum
from typing import Dict, List, Sequence

from pydantic import BaseModel, Field

from netlist.gates import CELL_LIBRARY, CellKind, CellTemplate, GateNetlist
from prefix.errors import InvalidArgumentError
from reports.schemas import TestVector


logger = logging.getLogger(__name__)

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_$]*$")
_RESERVED = {
    "always", "and", "assign", "begin", "buf", "case", "default", "else", "end", "endcase",
    "endmodule", "endtask", "for", "function", "if", "initial", "inout", "input", "integer",
    "module", "nand", "nor", "not", "or", "output", "reg", "task", "wire", "xnor", "xor",
}
_PORT_BUS = re.compile(r"^([ab])(\d+)$")


class EmitStyle(str, Enum):
    FLAT = "flat"
    HIERARCHICAL = "hierarchical"


class EmitOptions(BaseModel):
    style: EmitStyle = EmitStyle.FLAT
    module_name: str = "prefix_adder"
    indent: int = Field(default=4, ge=1, le=8)


def check_identifier(name: str) -> str:
    """Return the name if it is a legal, non-reserved Verilog identifier"""
    if not _IDENTIFIER.match(name) or name in _RESERVED:
        raise InvalidArgumentError(f"'{name}' is not a valid Verilog identifier")
    return name


class _NetNames:
    """Netlist net -> Verilog expression (ports become bus bits)"""

    def __init__(self, netlist: GateNetlist):
        self.outputs: Dict[str, str] = {net: f"sum[{bit}]" for bit, net in enumerate(netlist.sum_nets)}
        self.outputs[netlist.cout_net] = "cout"
        self.ports = set(netlist.input_ports)

    def __call__(self, net: str) -> str:
        if net in self.outputs:
            return self.outputs[net]
        match = _PORT_BUS.match(net)
        if match and net in self.ports:
            return f"{match.group(1)}[{match.group(2)}]"
        return net

    def is_wire(self, net: str) -> bool:
        return net not in self.outputs and net not in self.ports


def _port_list(width: int, pad: str) -> List[str]:
    bus = f"[{width - 1}:0]"
    return [
        f"{pad}input  wire {bus} a,",
        f"{pad}input  wire {bus} b,",
        f"{pad}input  wire {' ' * len(bus)} cin,",
        f"{pad}output wire {bus} sum,",
        f"{pad}output wire {' ' * len(bus)} cout",
    ]


def _header(netlist: GateNetlist, module_name: str) -> List[str]:
    census = netlist.census()
    counts = ", ".join(f"{count} {kind.lower()}" for kind, count in census.items())
    lines = [f"// {module_name}: {netlist.topology or 'prefix'} adder, width {netlist.width}"]
    lines.append(f"// gates: {counts}")
    return lines


def _cell_module(template: CellTemplate, pad: str) -> List[str]:
    ports = [f"{pad}input  wire {name}" for name in template.inputs]
    ports += [f"{pad}output wire {name}" for name in template.outputs]
    lines = [f"module {template.kind.value} ("]
    lines += [port + ("," if i < len(ports) - 1 else "") for i, port in enumerate(ports)]
    lines.append(");")
    for wire in template.wires:
        lines.append(f"{pad}wire {wire};")
    for gate in template.gates:
        lines.append(f"{pad}{gate.kind.value} {gate.name} ({', '.join((gate.output,) + gate.inputs)});")
    lines.append("endmodule")
    return lines


def _wire_block(nets: Sequence[str], pad: str) -> List[str]:
    return [f"{pad}wire {net};" for net in nets]


def _ordered_wires(nets: Sequence[str], names: _NetNames) -> List[str]:
    seen: Dict[str, None] = {}
    for net in nets:
        if names.is_wire(net):
            seen.setdefault(net, None)
    return list(seen)


def _emit_flat(netlist: GateNetlist, opts: EmitOptions) -> List[str]:
    """Top module instantiating gate primitives directly"""
    pad = " " * opts.indent
    names = _NetNames(netlist)
    lines = _header(netlist, opts.module_name)
    lines.append(f"module {opts.module_name} (")
    lines += _port_list(netlist.width, pad)
    lines.append(");")
    lines += _wire_block(_ordered_wires([g.output for g in netlist.gates], names), pad)
    lines.append("")
    for gate in netlist.gates:
        pins = ", ".join(names(net) for net in (gate.output,) + gate.inputs)
        lines.append(f"{pad}{gate.kind.value} {gate.id.replace('.', '_')} ({pins});")
    lines.append("endmodule")
    return lines


def _emit_hierarchical(netlist: GateNetlist, opts: EmitOptions) -> List[str]:
    """Cell modules followed by a top module instantiating them"""
    pad = " " * opts.indent
    used = {cell.kind for cell in netlist.cells}
    if opts.module_name in {kind.value for kind in CellKind}:
        raise InvalidArgumentError(f"Module name '{opts.module_name}' clashes with a cell module")

    lines = _header(netlist, opts.module_name)
    for kind in CellKind:
        # white_cell only appears when the network carries buffers
        if kind == CellKind.WHITE_CELL and kind not in used:
            continue
        lines += _cell_module(CELL_LIBRARY[kind], pad)
        lines.append("")

    names = _NetNames(netlist)
    driven = []
    for cell in netlist.cells:
        template = CELL_LIBRARY[cell.kind]
        driven += [cell.net(port) for port in template.outputs]
    lines.append(f"module {opts.module_name} (")
    lines += _port_list(netlist.width, pad)
    lines.append(");")
    lines += _wire_block(_ordered_wires(driven, names), pad)
    lines.append("")
    for cell in netlist.cells:
        template = CELL_LIBRARY[cell.kind]
        pins = ", ".join(f".{port}({names(cell.net(port))})" for port in template.ports)
        lines.append(f"{pad}{cell.kind.value} {cell.name} ({pins});")
    lines.append("endmodule")
    return lines


def emit_verilog(netlist: GateNetlist, opts: EmitOptions = EmitOptions()) -> str:
    """Structural Verilog text for the netlist"""
    check_identifier(opts.module_name)
    if opts.style == EmitStyle.HIERARCHICAL:
        if not netlist.cells:
            raise InvalidArgumentError("Hierarchical emission needs a netlist with cell instances")
        lines = _emit_hierarchical(netlist, opts)
    else:
        lines = _emit_flat(netlist, opts)
    logger.debug(f"Emitted {opts.style.value} Verilog for {opts.module_name} ({len(lines)} lines)")
    return "\n".join(lines) + "\n"


def emit_testbench(width: int, vectors: Sequence[TestVector], module_name: str = "prefix_adder",
                   indent: int = 4) -> str:
    """Self-checking testbench applying each vector at its time label.

    Outputs are checked 1 ns after each vector is applied, so labels must be
    strictly increasing.
    """
    check_identifier(module_name)
    if width < 1:
        raise InvalidArgumentError(f"Width must be >= 1, got {width}")
    if not vectors:
        raise InvalidArgumentError("Testbench needs at least one vector")
    for vector in vectors:
        if max(vector.a, vector.b, vector.expected_sum) >> width:
            raise InvalidArgumentError(f"Vector {vector.test} does not fit in {width} bits")
    labels = [v.time_label_ns for v in vectors]
    if any(later <= earlier for earlier, later in zip(labels, labels[1:])):
        raise InvalidArgumentError(f"Time labels must be strictly increasing, got {labels}")

    pad = " " * indent
    pad2 = pad * 2
    pad3 = pad * 3
    bus = f"[{width - 1}:0]"
    blank = " " * len(bus)
    tb_name = f"{module_name}_tb"

    def word(value: int) -> str:
        return f"{width}'d{value}"

    lines = [
        "`timescale 1ns/1ps",
        "",
        f"module {tb_name};",
        f"{pad}reg  {bus} a;",
        f"{pad}reg  {bus} b;",
        f"{pad}reg  {blank} cin;",
        f"{pad}wire {bus} sum;",
        f"{pad}wire {blank} cout;",
        f"{pad}integer failures;",
        "",
        f"{pad}{module_name} dut (.a(a), .b(b), .cin(cin), .sum(sum), .cout(cout));",
        "",
        f"{pad}task check;",
        f"{pad2}input integer test;",
        f"{pad2}input {bus} expected_sum;",
        f"{pad2}input expected_cout;",
        f"{pad2}begin",
        f"{pad3}if (sum === expected_sum && cout === expected_cout)",
        f'{pad3}{pad}$display("PASS test %0d: a=%0d b=%0d cin=%0d sum=%0d cout=%0d", test, a, b, cin, sum, cout);',
        f"{pad3}else begin",
        f'{pad3}{pad}$display("FAIL test %0d: a=%0d b=%0d cin=%0d sum=%0d cout=%0d expected sum=%0d cout=%0d",',
        f"{pad3}{pad}         test, a, b, cin, sum, cout, expected_sum, expected_cout);",
        f"{pad3}{pad}failures = failures + 1;",
        f"{pad3}end",
        f"{pad2}end",
        f"{pad}endtask",
        "",
        f"{pad}initial begin",
        f'{pad2}$monitor("%0t a=%0d b=%0d cin=%0d sum=%0d cout=%0d", $time, a, b, cin, sum, cout);',
        f"{pad2}failures = 0;",
    ]

    now = 0
    for vector in vectors:
        lines.append(f"{pad2}// test {vector.test} @ {vector.time_label_ns} ns")
        wait = vector.time_label_ns - now
        delay = f"#{wait} " if wait > 0 else ""
        lines.append(f"{pad2}{delay}a = {word(vector.a)}; b = {word(vector.b)}; cin = 1'b{int(vector.cin)};")
        lines.append(f"{pad2}#1 check({vector.test}, {word(vector.expected_sum)}, 1'b{int(vector.expected_cout)});")
        now = vector.time_label_ns + 1

    total = len(vectors)
    lines += [
        f"{pad2}if (failures == 0)",
        f'{pad3}$display("ALL {total} TESTS PASSED");',
        f"{pad2}else",
        f'{pad3}$display("%0d OF {total} TESTS FAILED", failures);',
        f"{pad2}$finish;",
        f"{pad}end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"
