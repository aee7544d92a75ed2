"""
Argument Parser - Command-line surface of the toolkit
"""

import argparse
from typing import List

from prefix.core import TopologyKind
from reports.schemas import OutputFormat


DEFAULT_TOPOLOGY = TopologyKind.BRENT_KUNG.value
DEFAULT_COUNT = 100_000
DEFAULT_SEED = 1

DELAY_FLAGS = {
    "xor_delay": "--xor-delay",
    "and_delay": "--and-delay",
    "or_delay": "--or-delay",
    "buffer_delay": "--buffer-delay",
    "fanout_penalty_alpha": "--fanout-alpha",
}
AREA_FLAGS = {
    "and_area": "--and-area",
    "or_area": "--or-area",
    "xor_area": "--xor-area",
    "buf_area": "--buf-area",
}


def _topology_list(value: str) -> List[str]:
    return [name.strip() for name in value.split(",") if name.strip()]


def _add_network_args(parser: argparse.ArgumentParser, required_width: bool = True,
                      width_help: str = "adder width in bits"):
    """--topology and --width"""
    names = ", ".join(t.value for t in TopologyKind)
    parser.add_argument("--topology", default=DEFAULT_TOPOLOGY, help=f"one of: {names}")
    parser.add_argument("--width", type=int, required=required_width, help=width_help)


def _add_weight_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("cost model weights")
    for field, flag in {**DELAY_FLAGS, **AREA_FLAGS}.items():
        group.add_argument(flag, dest=field, type=float, default=None, metavar="UNITS")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="out", help="directory for written files (default ./out)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.TEXT.value)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Build, verify, score, emit and simulate parallel-prefix adders",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[common], help="build a network and save its JSON")
    _add_network_args(generate)
    generate.add_argument("--align-levels", action="store_true", help="insert white cells (buffers)")
    generate.add_argument("--diagram", action="store_true", help="print an ASCII diagram")

    verify = commands.add_parser("verify", parents=[common], help="check a network against the oracle")
    _add_network_args(verify, required_width=False)
    verify.add_argument("--network", help="network JSON file instead of --topology/--width")
    verify.add_argument("--random", action="store_true", help="random vectors even for small widths")
    verify.add_argument("--count", type=int, default=DEFAULT_COUNT, help="random vector count")
    verify.add_argument("--seed", type=int, default=DEFAULT_SEED, help="64-bit PRNG seed")
    source = verify.add_mutually_exclusive_group()
    source.add_argument("--paper-testbench", action="store_true", help="the seven-row 32-bit testbench")
    source.add_argument("--vectors", metavar="SUITE", help="vector suite name or JSON path")

    compare = commands.add_parser("compare", parents=[common], help="rank topologies by cost")
    compare.add_argument("--width", type=int, required=True)
    chosen = compare.add_mutually_exclusive_group(required=True)
    chosen.add_argument("--all", action="store_true", help="every topology")
    chosen.add_argument("--topologies", type=_topology_list, help="comma-separated topology names")
    _add_weight_args(compare)

    emit = commands.add_parser("emit", parents=[common], help="write structural Verilog")
    _add_network_args(emit)
    emit.add_argument("--style", choices=["flat", "hierarchical"], default="flat")
    emit.add_argument("--module-name", help="top module name")
    emit.add_argument("--align-levels", action="store_true")
    emit.add_argument("--testbench", action="store_true", help="also write a self-checking testbench")
    emit.add_argument("--paper", action="store_true", help="testbench uses the 32-bit rows verbatim")

    sim = commands.add_parser("sim", parents=[common], help="gate-level simulation with VCD output")
    _add_network_args(sim, width_help="adder width in bits, at most 64 (batched simulation)")
    stimulus = sim.add_mutually_exclusive_group(required=True)
    stimulus.add_argument("--paper-testbench", action="store_true")
    stimulus.add_argument("--random", type=int, metavar="N", help="N seeded random vectors")
    stimulus.add_argument("--vectors", metavar="SUITE")
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--vcd", metavar="PATH", help="VCD file (relative paths land in --out-dir)")
    sim.add_argument("--toggles", action="store_true", help="per-gate toggle report")
    sim.add_argument("--internal", action="store_true", help="dump internal nets into the VCD")

    return parser
