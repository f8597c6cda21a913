"""Command-line entry point: discover, evaluate, genlog, and bench.

Exit codes: 0 success, 2 unreadable or unparseable input, 3 empty or
fully filtered log, 4 structural discovery failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .bpmn import parse_bpmn_xml, serialize_bpmn_xml
from .concurrency import ConcurrencyRelation
from .dfg import dfg_to_dot
from .discovery import DiscoveryResult, discover
from .errors import AllTracesFiltered, DiscoveryError, EmptyLog, MalformedXml
from .eventlog import filter_infrequent_traces, load_xes, log_stats, save_xes
from .loggen import PATTERNS, SimulationConfig, canonical_pattern, simulate
from .loops import LoopBlock
from .petri import MetricsReport, bpmn_to_petri, evaluate_model, serialize_pnml

REPORT_FORMATS = ("csv", "markdown", "json")

_METRIC_COLUMNS = [
    "fitness",
    "precision",
    "f_score",
    "generalization",
    "size",
    "cfc",
    "structuredness",
    "time_s",
]
_BENCH_COLUMNS = [
    "log",
    "traces",
    "variants",
    "events",
    "activities",
    "min_len",
    "avg_len",
    "max_len",
    *_METRIC_COLUMNS,
    "error",
]


@dataclass(frozen=True)
class RunConfig:
    """Validated shared knobs for one CLI invocation."""

    input_path: str
    output_path: str | None = None
    noise: float = 0.0
    trace_filter: float = 0.05
    epsilon: float = 0.3
    report_format: str = "markdown"

    def __post_init__(self) -> None:
        for name in ("noise", "trace_filter", "epsilon"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")
        if self.report_format not in REPORT_FORMATS:
            raise ValueError(f"unknown report format {self.report_format!r}")


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be within [0, 1]: {text}")
    return value


def _fraction(text: str) -> float:
    value = _threshold(text)
    if value >= 1.0:
        raise argparse.ArgumentTypeError(f"must be below 1: {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return value


def _sibling(path_text: str, suffix: str) -> str:
    """Path next to the input, with .xes/.xes.gz/.bpmn swapped for suffix."""
    name = Path(path_text).name
    for ending in (".xes.gz", ".xes", ".bpmn", ".xml"):
        if name.endswith(ending):
            name = name[: -len(ending)]
            break
    return str(Path(path_text).with_name(name + suffix))


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _render_table(header: list[str], rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in header])
        return buffer.getvalue()
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("| " + " | ".join("---" for _ in header) + " |")
    for row in rows:
        lines.append("| " + " | ".join(_cell(row.get(column)) for column in header) + " |")
    return "\n".join(lines) + "\n"


def _report_row(report: MetricsReport) -> dict:
    return {
        "fitness": report.fitness,
        "precision": report.precision,
        "f_score": report.f_score,
        "generalization": report.generalization,
        "size": report.size,
        "cfc": report.cfc,
        "structuredness": report.structuredness,
        "time_s": report.discovery_time_seconds,
    }


def render_report(report: MetricsReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_report_row(report), indent=2) + "\n"
    return _render_table(_METRIC_COLUMNS, [_report_row(report)], fmt)


def _relation_text(relation: ConcurrencyRelation) -> str:
    lines = [f"{a} || {b}" for a, b in relation.sorted_pairs()]
    return "\n".join(lines) + ("\n" if lines else "")


def _blocks_json(blocks: tuple[LoopBlock, ...]) -> str:
    payload = [
        {
            "kind": block.kind.value,
            "back_edges": sorted([source, target] for source, target in block.back_edges),
            "entries": sorted(block.entry_nodes),
            "exits": sorted(block.exit_nodes),
            "body": sorted(block.body),
        }
        for block in blocks
    ]
    return json.dumps(payload, indent=2) + "\n"


def _write_emissions(args: argparse.Namespace, result: DiscoveryResult) -> None:
    if args.emit_dfg:
        _write_text(args.emit_dfg, dfg_to_dot(result.dfg))
    if args.emit_relations:
        _write_text(args.emit_relations, _relation_text(result.relation))
    if args.emit_loops:
        _write_text(args.emit_loops, _blocks_json(result.blocks))
    if args.emit_pnml:
        Path(args.emit_pnml).write_bytes(serialize_pnml(bpmn_to_petri(result.model)))


def cmd_discover(args: argparse.Namespace) -> int:
    config = RunConfig(
        input_path=args.log,
        output_path=args.out,
        noise=args.noise,
        trace_filter=args.trace_filter,
        epsilon=args.epsilon,
    )
    event_log = load_xes(config.input_path)
    event_log = filter_infrequent_traces(event_log, config.trace_filter)
    started = time.perf_counter()
    result = discover(event_log, noise=config.noise, epsilon=config.epsilon)
    xml = serialize_bpmn_xml(result.model)
    elapsed = time.perf_counter() - started
    out_path = config.output_path or _sibling(config.input_path, ".bpmn")
    Path(out_path).write_bytes(xml)
    _write_emissions(args, result)
    print(
        f"{out_path}: {len(result.model.nodes)} nodes, {len(result.model.flows)} flows, "
        f"{len(result.blocks)} loop block(s), {elapsed:.4f}s after parsing"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = RunConfig(input_path=args.log, output_path=args.out, report_format=args.format)
    model = parse_bpmn_xml(Path(args.model).read_bytes())
    event_log = load_xes(config.input_path)
    report = evaluate_model(model, event_log, include_joins=args.cfc_include_joins)
    _write_text(config.output_path, render_report(report, config.report_format))
    return 0


def cmd_genlog(args: argparse.Namespace) -> int:
    sim = SimulationConfig(
        pattern=args.pattern,
        traces=args.traces,
        max_loop_iterations=args.max_iterations,
        loop_continue_probability=args.continue_prob,
        seed=args.seed,
    )
    if args.pattern.upper() in PATTERNS:
        model = canonical_pattern(args.pattern)
        out_path = args.out or f"{args.pattern.lower()}.xes"
    else:
        model = parse_bpmn_xml(Path(args.pattern).read_bytes())
        out_path = args.out or _sibling(args.pattern, ".xes")
    event_log = simulate(model, sim)
    save_xes(event_log, out_path)
    print(
        f"{out_path}: {event_log.total_traces} traces, "
        f"{len(event_log.variants)} variants, seed {sim.seed}"
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = RunConfig(
        input_path=args.directory,
        output_path=args.out,
        noise=args.noise,
        trace_filter=args.trace_filter,
        epsilon=args.epsilon,
        report_format=args.format,
    )
    directory = Path(config.input_path)
    names = sorted(
        entry.name
        for entry in directory.iterdir()
        if entry.is_file() and entry.name.endswith((".xes", ".xes.gz"))
    )
    rows: list[dict] = []
    for name in names:
        row: dict = {"log": name}
        rows.append(row)
        try:
            event_log = load_xes(str(directory / name))
            stats = log_stats(event_log)
            row.update(
                traces=stats.total_traces,
                variants=stats.distinct_traces,
                events=stats.total_events,
                activities=stats.distinct_events,
                min_len=stats.min_trace_length,
                avg_len=stats.avg_trace_length,
                max_len=stats.max_trace_length,
            )
            filtered = filter_infrequent_traces(event_log, config.trace_filter)
            started = time.perf_counter()
            result = discover(filtered, noise=config.noise, epsilon=config.epsilon)
            serialize_bpmn_xml(result.model)
            elapsed = time.perf_counter() - started
            report = evaluate_model(
                result.model,
                filtered,
                include_joins=args.cfc_include_joins,
                discovery_time_seconds=elapsed,
            )
            row.update(_report_row(report))
        except (DiscoveryError, OSError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
    _write_text(config.output_path, _render_table(_BENCH_COLUMNS, rows, config.report_format))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopminer",
        description="Loop-aware process discovery: XES event logs to BPMN 2.0 models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="discover a BPMN model from an XES log")
    d.add_argument("log", help="path to a .xes or .xes.gz event log")
    d.add_argument("-o", "--out", help="output BPMN path (default: next to the log)")
    d.add_argument("--noise", type=_threshold, default=0.0, help="DFG noise threshold [0, 1]")
    d.add_argument(
        "--trace-filter",
        type=_threshold,
        default=0.05,
        help="drop trace variants below this relative frequency",
    )
    d.add_argument(
        "--epsilon", type=_threshold, default=0.3, help="concurrency balance tolerance"
    )
    d.add_argument("--emit-dfg", metavar="PATH", help="write the filtered DFG as DOT")
    d.add_argument("--emit-loops", metavar="PATH", help="write detected loop blocks as JSON")
    d.add_argument(
        "--emit-relations", metavar="PATH", help="write concurrency pairs as text"
    )
    d.add_argument(
        "--emit-pnml", metavar="PATH", help="write the converted Petri net as PNML"
    )
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("evaluate", help="score a BPMN model against an XES log")
    e.add_argument("model", help="path to a BPMN XML file")
    e.add_argument("log", help="path to a .xes or .xes.gz event log")
    e.add_argument("-o", "--out", help="output report path (default: stdout)")
    e.add_argument("--format", choices=REPORT_FORMATS, default="markdown")
    e.add_argument(
        "--cfc-include-joins",
        action="store_true",
        help="count converging gateways in CFC as well",
    )
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("genlog", help="simulate a model into a synthetic XES log")
    g.add_argument("pattern", help="one of L1..L4, or a path to a BPMN file")
    g.add_argument("-o", "--out", help="output XES path")
    g.add_argument("--traces", type=_positive_int, default=100)
    g.add_argument("--max-iterations", type=_nonneg_int, default=3)
    g.add_argument("--continue-prob", type=_fraction, default=0.3)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_genlog)

    b = sub.add_parser("bench", help="discover and score every log in a directory")
    b.add_argument("directory", help="directory containing .xes/.xes.gz files")
    b.add_argument("-o", "--out", help="output table path (default: stdout)")
    b.add_argument("--noise", type=_threshold, default=0.0)
    b.add_argument("--trace-filter", type=_threshold, default=0.05)
    b.add_argument("--epsilon", type=_threshold, default=0.3)
    b.add_argument("--format", choices=REPORT_FORMATS, default="markdown")
    b.add_argument("--cfc-include-joins", action="store_true")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MalformedXml, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EmptyLog, AllTracesFiltered) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DiscoveryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
