"""
Waveform - Simulation traces and their value change dump (VCD) output
"""

import io
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from vcd import VCDWriter

from prefix.errors import InvalidArgumentError
from reports.schemas import TOOL_NAME, TOOL_VERSION


logger = logging.getLogger(__name__)


@dataclass
class SimTrace:
    """Time-ordered value changes; consecutive values recorded for a signal differ"""
    signals: Dict[str, int]                                       # name -> bit width
    changes: List[Tuple[int, str, int]] = field(default_factory=list)
    schedule: List[Tuple[int, int, int, bool]] = field(default_factory=list)  # (time_ns, a, b, cin)


def write_vcd(trace: SimTrace, module_name: str = "prefix_adder") -> str:
    """VCD text with a 1 ns timescale; identifiers follow sorted signal names"""
    if not trace.signals:
        raise InvalidArgumentError("Cannot write a VCD for a trace without signals")
    buffer = io.StringIO()
    # Fixed date and version keep the output byte-deterministic
    with VCDWriter(buffer, timescale="1 ns", date="", version=f"{TOOL_NAME} {TOOL_VERSION}") as writer:
        variables = {
            name: writer.register_var(module_name, name, "wire", size=trace.signals[name])
            for name in sorted(trace.signals)
        }
        for time_ns, name, value in trace.changes:
            writer.change(variables[name], time_ns, value)
    text = buffer.getvalue()
    logger.debug(f"Wrote VCD: {len(trace.signals)} signals, {len(trace.changes)} changes")
    return text
