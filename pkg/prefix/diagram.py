"""
Diagram - ASCII picture of a prefix carry network

One row per level, one column per bit with the MSB on the left.
B = black cell, G = gray cell, W = white cell (buffer), | = pass-through.
"""

from typing import Dict, Tuple

from prefix.core import NodeKind, PrefixNetwork


_SYMBOLS = {NodeKind.BLACK: "B", NodeKind.GRAY: "G", NodeKind.BUFFER: "W"}
_PRIORITY = {"B": 3, "G": 2, "W": 1}


def render_diagram(net: PrefixNetwork) -> str:
    cells: Dict[Tuple[int, int], str] = {}
    for node in net.nodes:
        symbol = _SYMBOLS.get(node.kind)
        if symbol is None:
            continue
        key = (node.level, node.span.hi)
        # An operator wins over a buffer sharing its column and level
        if _PRIORITY[symbol] > _PRIORITY.get(cells.get(key, ""), 0):
            cells[key] = symbol

    cell_width = len(str(net.width - 1)) + 1
    levels = max((node.level for node in net.nodes), default=0)
    label_width = len(f"L{levels}") + 1
    bits = range(net.width - 1, -1, -1)

    lines = [" " * label_width + "".join(str(bit).rjust(cell_width) for bit in bits)]
    for level in range(1, levels + 1):
        row = "".join(cells.get((level, bit), "|").rjust(cell_width) for bit in bits)
        lines.append(f"L{level}".ljust(label_width) + row)
    return "\n".join(line.rstrip() for line in lines) + "\n"
