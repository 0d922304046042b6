"""Command-line driver: microbenchmarks, error sweeps, simulations, the
queue-selection guide, and CSV-to-SVG plotting.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import (BenchConfig, emit_plot, rows_to_csv, run_bench,
                    run_error_sweep, select_queue_guide)
from .config import load_policy_tree, single_level_config
from .errors import ConfigError, PktschedError
from .sim import Workload, run_sim

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _write(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _apply_config_file(args: argparse.Namespace) -> None:
    """Values from --config override the flags (the file wins)."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError(f"{args.config}: top level must be an object")
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)


def _cmd_bench(args) -> int:
    rows = []
    for queue in args.queue:
        for seed in range(args.seed, args.seed + args.seeds):
            cfg = BenchConfig(
                queue=queue,
                num_buckets=args.buckets,
                pkts_per_bucket=None if args.occupancy is not None else args.pkts_per_bucket,
                occupancy=args.occupancy,
                repetitions=args.repetitions,
                warmup=args.warmup,
                seed=seed,
            )
            rows.append(run_bench(cfg))
    _write(rows_to_csv(rows), args.output)
    return EXIT_OK


def _cmd_error_sweep(args) -> int:
    occupancies = args.occupancies or None
    rows = run_error_sweep(alpha=args.alpha, occupancies=occupancies,
                           seeds=range(args.seeds))
    _write(rows_to_csv(rows, columns=list(rows[0])), args.output)
    return EXIT_OK


def _cmd_sim(args) -> int:
    if args.tree:
        config = load_policy_tree(args.tree)
    else:
        flow_ids = [f"f{i}" for i in range(args.flows)]
        config = single_level_config(args.policy, flow_ids,
                                     flow_cap=args.flow_cap)
        if args.policy == "hclock":
            config = {"policy": "hclock", "flow_params": {}}
    workload = Workload(
        num_flows=args.flows,
        packet_size=args.packet_size,
        duration_ns=args.duration_ns,
        seed=args.seed,
        link_rate=args.link_rate,
        flow_cap=args.flow_cap,
        batch_bytes=args.batch_bytes,
        arrival_rate=args.arrival_rate,
    )
    metrics = run_sim(config, workload)
    summary = {
        "duration_ns": metrics.duration_ns,
        "enqueued": metrics.enqueued,
        "dequeued": metrics.dequeued,
        "deferred": metrics.deferred,
        "pending": metrics.pending,
        "conserved": metrics.conserved(),
        "per_flow_bytes": metrics.per_flow_bytes,
        "throughput_bps": {fid: metrics.throughput_bps(fid)
                           for fid in metrics.per_flow_bytes},
    }
    _write(json.dumps(summary, indent=2) + "\n", args.output)
    return EXIT_OK


def _cmd_guide(args) -> int:
    rec = select_queue_guide(args.levels, args.range, args.occupancy)
    _write(rec + "\n", args.output)
    return EXIT_OK


def _cmd_plot(args) -> int:
    emit_plot(args.csv, args.svg, x_col=args.x, y_col=args.y,
              series_col=args.series)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pktsched",
        description="Bucketed priority queue benchmarks and scheduler simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="drain-throughput microbenchmark")
    bench.add_argument("--queue", nargs="+", default=["cffs"],
                       help="queue kinds: cffs hffs approx bh heap tw")
    bench.add_argument("--buckets", type=int, default=10_000)
    bench.add_argument("--pkts-per-bucket", type=float, default=1.0)
    bench.add_argument("--occupancy", type=float, default=None)
    bench.add_argument("--repetitions", type=int, default=10)
    bench.add_argument("--warmup", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--seeds", type=int, default=1,
                       help="number of consecutive seeds per queue kind")
    bench.add_argument("--config", help="JSON file overriding these flags")
    bench.add_argument("--output", help="CSV path (default stdout)")
    bench.set_defaults(func=_cmd_bench)

    sweep = sub.add_parser("error-sweep",
                           help="approximate-queue error vs occupancy")
    sweep.add_argument("--alpha", type=int, default=16)
    sweep.add_argument("--occupancies", nargs="*", type=float, default=None)
    sweep.add_argument("--seeds", type=int, default=10)
    sweep.add_argument("--config", help="JSON file overriding these flags")
    sweep.add_argument("--output", help="CSV path (default stdout)")
    sweep.set_defaults(func=_cmd_error_sweep)

    sim = sub.add_parser("sim", help="discrete-event scheduler simulation")
    sim.add_argument("--policy", default="fifo",
                     choices=["fifo", "lqf", "pfabric", "hclock"])
    sim.add_argument("--tree", help="policy-tree JSON file (overrides --policy)")
    sim.add_argument("--flows", type=int, default=2)
    sim.add_argument("--packet-size", type=int, default=1500)
    sim.add_argument("--duration-ns", type=int, default=100_000_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--link-rate", type=float, default=10_000_000.0,
                     help="bytes per second")
    sim.add_argument("--flow-cap", type=int, default=32)
    sim.add_argument("--batch-bytes", type=int, default=0)
    sim.add_argument("--arrival-rate", type=float, default=None,
                     help="bytes/sec per flow; omit for a backlogged source")
    sim.add_argument("--config", help="JSON file overriding these flags")
    sim.add_argument("--output", help="JSON summary path (default stdout)")
    sim.set_defaults(func=_cmd_sim)

    guide = sub.add_parser("guide", help="queue-selection decision tree")
    guide.add_argument("--levels", type=int, required=True)
    guide.add_argument("--range", choices=["fixed", "moving"], default="fixed")
    guide.add_argument("--occupancy", choices=["sparse", "dense"],
                       default="sparse")
    guide.add_argument("--output", help="path (default stdout)")
    guide.set_defaults(func=_cmd_guide)

    plot = sub.add_parser("plot", help="render a benchmark CSV as SVG")
    plot.add_argument("csv")
    plot.add_argument("svg")
    plot.add_argument("--x", default=None)
    plot.add_argument("--y", default="mops")
    plot.add_argument("--series", default="queue")
    plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PktschedError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
