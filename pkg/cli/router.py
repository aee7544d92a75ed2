"""
Command Router - Routes parsed command lines to their handlers
Each handler returns a process exit code: 0 success, 1 mismatch, 2 usage/config error
"""

import argparse
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from cli.parser import AREA_FLAGS, DELAY_FLAGS
from costing.cost_model import AreaWeights, DelayModel, compare_topologies
from evaluation.functional import oracle_add_batch
from evaluation.verification import (
    EXHAUSTIVE_MAX_WIDTH,
    MAX_LISTED_MISMATCHES,
    PAPER_SUITE,
    PAPER_WIDTH,
    load_vector_suite,
    random_vectors,
    run_paper_testbench,
    scaled_paper_vectors,
    verify_exhaustive,
    verify_random,
    verify_vectors,
)
from netlist.gates import expand_to_gates
from netlist.verilog import EmitOptions, EmitStyle, check_identifier, emit_testbench, emit_verilog
from prefix.core import (
    PrefixNetwork,
    load_network,
    max_fanout,
    network_depth,
    operator_counts,
    save_network,
    validate_network,
)
from prefix.diagram import render_diagram
from prefix.errors import InvalidArgumentError, InvalidNetworkError, StructuralError
from prefix.topologies import available_topologies, build_network
from reports.schemas import (
    Mismatch,
    OutputFormat,
    ReportEnvelope,
    RunConfig,
    SimSummary,
    TestbenchRow,
    VerificationReport,
)
from simulation.engine import GateSimulator
from simulation.waveform import write_vcd


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2

SIM_STEP_NS = 10
_TEXT_MISMATCHES = 10

# Flags that RunConfig carries as first-class fields
_CONFIG_FIELDS = {"command", "topology", "width", "seed", "count", "out_dir", "format", "verbose", "quiet"}


def module_name_for(topology: str, width: int) -> str:
    """Default Verilog module name, e.g. brent_kung_adder_32"""
    return f"{topology.replace('-', '_')}_adder_{width}"


class CommandRouter:
    """Routes commands to handlers and turns failures into exit codes"""

    def __init__(self):
        self.command_handlers: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
            "generate": self._handle_generate,
            "verify": self._handle_verify,
            "compare": self._handle_compare,
            "emit": self._handle_emit,
            "sim": self._handle_sim,
        }

    def handle_command(self, args: argparse.Namespace) -> int:
        """Run the handler for args.command"""
        if args.command not in self.command_handlers:
            logger.error(f"Unknown command: {args.command}")
            return EXIT_USAGE
        try:
            config = self._build_config(args)
            return self.command_handlers[args.command](args, config)
        except (InvalidArgumentError, InvalidNetworkError, StructuralError, ValidationError) as e:
            logger.error(f"{args.command}: {e}")
            return EXIT_USAGE
        except OSError as e:
            logger.error(f"{args.command}: cannot access {e.filename or 'file'}: {e.strerror or e}")
            return EXIT_USAGE

    def _build_config(self, args: argparse.Namespace) -> RunConfig:
        """Validated RunConfig from the parsed arguments"""
        values = vars(args)
        overrides = {
            name: values[name]
            for name in list(DELAY_FLAGS) + list(AREA_FLAGS)
            if values.get(name) is not None
        }
        options = {
            key: value for key, value in values.items()
            if key not in _CONFIG_FIELDS and key not in DELAY_FLAGS and key not in AREA_FLAGS
        }
        from_file = bool(values.get("network"))
        return RunConfig(
            command=args.command,
            topology=None if from_file else values.get("topology"),
            width=None if from_file else values.get("width"),
            seed=values.get("seed"),
            count=values.get("count"),
            model_overrides=overrides,
            out_dir=values.get("out_dir", "out"),
            format=values.get("format", OutputFormat.TEXT.value),
            options=options,
        )

    def _write_text(self, path: Path, text: str) -> Path:
        """Write text with LF line endings under the output directory"""
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Wrote {path}")
        return path

    def _write_report(self, config: RunConfig, filename: str, report: Any, seed: Optional[int] = None) -> Path:
        """Write a payload wrapped in the report envelope"""
        envelope = ReportEnvelope(
            command=config.command,
            config=config.model_dump(mode="json"),
            seed=seed,
            report=report,
        )
        return self._write_text(Path(config.out_dir) / filename, envelope.model_dump_json(indent=2) + "\n")

    def _print(self, config: RunConfig, payload: Any, text: str):
        """Print the payload as JSON or as its text rendering"""
        if config.format == OutputFormat.JSON:
            print(json.dumps(payload, indent=2))
        else:
            print(text.rstrip("\n"))

    def _require_width(self, config: RunConfig) -> int:
        if config.width is None:
            raise InvalidArgumentError(f"{config.command} needs --width (or --network)")
        return config.width

    def _handle_generate(self, args: argparse.Namespace, config: RunConfig) -> int:
        """Handle generate command"""
        width = self._require_width(config)
        net = build_network(config.topology, width, align_levels=args.align_levels)
        path = save_network(net, Path(config.out_dir) / f"{config.topology}_{width}.json")

        counts = operator_counts(net)
        depth = network_depth(net)
        fanout = max_fanout(net)
        payload = {
            "network": str(path),
            "topology": config.topology,
            "width": width,
            "depth": depth,
            "operators": counts.operators,
            "operator_counts": counts.model_dump(),
            "max_fanout": fanout,
        }
        text = (f"{config.topology} width {width}: {counts.operators} operators "
                f"(black {counts.black}, gray {counts.gray}, buffer {counts.buffer}), "
                f"depth {depth}, max fanout {fanout}\nwrote {path}\n")
        if args.diagram:
            diagram = render_diagram(net)
            payload["diagram"] = diagram
            text += "\n" + diagram
        self._print(config, payload, text)
        return EXIT_OK

    def _load_for_verify(self, args: argparse.Namespace, config: RunConfig):
        """Network to verify and whether to evaluate it strictly"""
        if not args.network:
            return build_network(config.topology, self._require_width(config)), True
        net = load_network(args.network)
        report = validate_network(net)
        if report.valid:
            return net, True
        if not report.evaluable:
            raise InvalidNetworkError(f"{args.network} cannot be evaluated: {report.summary()}", report)
        logger.warning(f"{args.network} fails validation ({report.summary()}); verifying in fault-injection mode")
        return net, False

    def _handle_verify(self, args: argparse.Namespace, config: RunConfig) -> int:
        """Handle verify command"""
        net, strict = self._load_for_verify(args, config)
        stem = f"verify_{net.topology.value}_{net.width}"

        if args.paper_testbench:
            rows = run_paper_testbench(net, strict=strict)
            payload = [row.model_dump(mode="json") for row in rows]
            self._write_report(config, f"{stem}_testbench.json", payload)
            self._print(config, payload, _testbench_text(net, rows))
            return EXIT_OK if all(row.passed for row in rows) else EXIT_MISMATCH

        if args.vectors:
            report = verify_vectors(net, load_vector_suite(args.vectors), strict=strict)
        elif net.width <= EXHAUSTIVE_MAX_WIDTH and not args.random:
            report = verify_exhaustive(net, strict=strict)
        else:
            report = verify_random(net, args.count, args.seed, strict=strict)

        payload = report.model_dump(mode="json")
        self._write_report(config, f"{stem}.json", payload, seed=report.seed)
        self._print(config, payload, _verification_text(report))
        if not report.passed:
            logger.error(f"{report.mismatch_count} mismatches against the oracle")
            return EXIT_MISMATCH
        return EXIT_OK

    def _handle_compare(self, args: argparse.Namespace, config: RunConfig) -> int:
        """Handle compare command"""
        width = self._require_width(config)
        model = DelayModel(**{k: v for k, v in config.model_overrides.items() if k in DELAY_FLAGS})
        weights = AreaWeights(**{k: v for k, v in config.model_overrides.items() if k in AREA_FLAGS})
        topologies = args.topologies or [kind.value for kind in available_topologies()]

        table = compare_topologies(width, topologies, model, weights)
        text = table.to_text()
        self._write_report(config, f"compare_{width}.json", table.model_dump(mode="json"))
        self._write_text(Path(config.out_dir) / f"compare_{width}.txt", text)
        self._print(config, [row.model_dump(mode="json") for row in table.rows], text)
        return EXIT_OK

    def _handle_emit(self, args: argparse.Namespace, config: RunConfig) -> int:
        """Handle emit command"""
        width = self._require_width(config)
        if args.paper and not args.testbench:
            raise InvalidArgumentError("--paper only applies together with --testbench")
        if args.testbench and args.paper and width != PAPER_WIDTH:
            raise InvalidArgumentError(f"--testbench --paper needs width {PAPER_WIDTH}, got {width}")
        module = check_identifier(args.module_name or module_name_for(config.topology, width))

        net = build_network(config.topology, width, align_levels=args.align_levels)
        netlist = expand_to_gates(net, name=module)
        opts = EmitOptions(style=EmitStyle(args.style), module_name=module)
        out_dir = Path(config.out_dir)
        files = [self._write_text(out_dir / f"{module}.v", emit_verilog(netlist, opts))]

        if args.testbench:
            vectors = load_vector_suite(PAPER_SUITE) if args.paper else scaled_paper_vectors(width)
            bench = emit_testbench(width, vectors, module_name=module)
            files.append(self._write_text(out_dir / f"{module}_tb.v", bench))

        payload = {
            "module": module,
            "style": opts.style.value,
            "files": [str(f) for f in files],
            "gates": netlist.census(),
        }
        text = f"{module} ({opts.style.value}, {len(netlist.gates)} gates)\n" + "".join(f"wrote {f}\n" for f in files)
        self._print(config, payload, text)
        return EXIT_OK

    def _sim_schedule(self, args: argparse.Namespace, width: int):
        """(schedule, source label, seed) for the chosen stimulus"""
        if args.paper_testbench:
            if width != PAPER_WIDTH:
                raise InvalidArgumentError(f"--paper-testbench needs width {PAPER_WIDTH}, got {width}")
            vectors = load_vector_suite(PAPER_SUITE)
            return [(v.time_label_ns, v.a, v.b, v.cin) for v in vectors], "paper-testbench", None
        if args.vectors:
            vectors = load_vector_suite(args.vectors)
            return [(v.time_label_ns, v.a, v.b, v.cin) for v in vectors], args.vectors, None

        schedule = []
        for a, b, cin in random_vectors(width, args.random, args.seed):
            for x, y, c in zip(a.tolist(), b.tolist(), cin.tolist()):
                schedule.append((len(schedule) * SIM_STEP_NS, x, y, c))
        return schedule, "random", args.seed

    def _handle_sim(self, args: argparse.Namespace, config: RunConfig) -> int:
        """Handle sim command"""
        width = self._require_width(config)
        schedule, source, seed = self._sim_schedule(args, width)
        if not schedule:
            raise InvalidArgumentError("No vectors to simulate")

        net = build_network(config.topology, width)
        netlist = expand_to_gates(net, name=module_name_for(config.topology, width))
        simulator = GateSimulator(netlist)

        a = np.array([step[1] for step in schedule], dtype=np.uint64)
        b = np.array([step[2] for step in schedule], dtype=np.uint64)
        cin = np.array([step[3] for step in schedule], dtype=bool)
        got_sum, got_cout, _ = simulator.simulate_batch(a, b, cin)
        want_sum, want_cout = oracle_add_batch(a, b, cin, width)
        bad = np.flatnonzero((got_sum != want_sum) | (got_cout != want_cout))
        mismatches = sorted(
            (Mismatch(a=int(a[i]), b=int(b[i]), cin=bool(cin[i]),
                      got_sum=int(got_sum[i]), got_cout=bool(got_cout[i]),
                      expected_sum=int(want_sum[i]), expected_cout=bool(want_cout[i])) for i in bad),
            key=lambda m: (m.a, m.b, m.cin),
        )

        vcd_path = None
        if args.vcd:
            vcd_path = Path(args.vcd)
            if not vcd_path.is_absolute():
                vcd_path = Path(config.out_dir) / vcd_path
            trace = simulator.build_trace(schedule, include_internal=args.internal)
            self._write_text(vcd_path, write_vcd(trace, netlist.name))

        toggles = None
        if args.toggles:
            toggles = simulator.toggle_count([(x, y, c) for _, x, y, c in schedule])

        summary = SimSummary(
            topology=net.topology.value,
            width=width,
            source=source,
            vectors_run=len(schedule),
            mismatch_count=len(mismatches),
            mismatches=mismatches[:MAX_LISTED_MISMATCHES],
            seed=seed,
            vcd=str(vcd_path) if vcd_path else None,
            toggles=toggles,
        )
        payload = summary.model_dump(mode="json")
        self._write_report(config, f"sim_{net.topology.value}_{width}.json", payload, seed=seed)
        self._print(config, payload, _sim_text(summary))
        if mismatches:
            logger.error(f"Gate-level simulation disagrees with the oracle on {len(mismatches)} vectors")
            return EXIT_MISMATCH
        return EXIT_OK


def _mismatch_lines(mismatches: List[Mismatch]) -> List[str]:
    return [
        f"  a={m.a} b={m.b} cin={int(m.cin)}: got sum={m.got_sum} cout={int(m.got_cout)}, "
        f"expected sum={m.expected_sum} cout={int(m.expected_cout)}"
        for m in mismatches[:_TEXT_MISMATCHES]
    ]


def _verification_text(report: VerificationReport) -> str:
    """PASS/FAIL summary of a verification report"""
    status = "PASS" if report.passed else "FAIL"
    seed = f", seed {report.seed}" if report.seed is not None else ""
    lines = [f"{status} {report.topology} width {report.width}: {report.vectors_run} vectors "
             f"({report.mode.value}{seed}), {report.mismatch_count} mismatches"]
    lines += _mismatch_lines(report.mismatches)
    return "\n".join(lines) + "\n"


def _testbench_text(net: PrefixNetwork, rows: List[TestbenchRow]) -> str:
    """One line per testbench row plus the pass count"""
    header = f"{'Test':>4}  {'A':>10}  {'B':>10}  {'Cin':>3}  {'Sum':>10}  {'Cout':>4}  {'Time (ns)':>9}  Result"
    lines = [f"{net.topology.value} width {net.width} testbench", header]
    for row in rows:
        v = row.vector
        lines.append(f"{v.test:>4}  {v.a:>10}  {v.b:>10}  {int(v.cin):>3}  {row.sum:>10}  {int(row.cout):>4}  "
                     f"{v.time_label_ns:>9}  {'PASS' if row.passed else 'FAIL'}")
    passed = sum(row.passed for row in rows)
    lines.append(f"{passed}/{len(rows)} passed")
    return "\n".join(lines) + "\n"


def _sim_text(summary: SimSummary) -> str:
    """PASS/FAIL summary of a simulation run"""
    status = "PASS" if summary.passed else "FAIL"
    lines = [f"{status} {summary.topology} width {summary.width}: {summary.vectors_run} vectors "
             f"({summary.source}) at gate level, {summary.mismatch_count} mismatches"]
    lines += _mismatch_lines(summary.mismatches)
    if summary.vcd:
        lines.append(f"wrote {summary.vcd}")
    if summary.toggles is not None:
        stages = ", ".join(f"{stage} {count}" for stage, count in summary.toggles.per_stage.items())
        lines.append(f"toggles: {summary.toggles.total} ({stages})")
    return "\n".join(lines) + "\n"
