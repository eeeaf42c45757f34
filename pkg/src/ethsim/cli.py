"""``ethsim`` command line: ``bench``, ``loopback`` and ``trace`` subcommands."""

import argparse
import sys

from . import bench
from .errors import ConfigurationError


def _common_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("experiment settings (override --config)")
    g.add_argument("--config", metavar="FILE",
                   help="'key = value' settings file; explicit flags take precedence")
    g.add_argument("--payloads", metavar="N[,N...]", help="payload sizes in bytes")
    g.add_argument("--designs", choices=("buffered", "bufferless", "both"))
    g.add_argument("--sys-clk-mhz", type=float, dest="sys_clk_mhz")
    g.add_argument("--bus-width", type=int, dest="bus_width", help="system bus width in bytes")
    g.add_argument("--cdc-depth", type=int, dest="cdc_depth")
    g.add_argument("--threshold", type=int, help="cut-through start threshold in bytes")
    g.add_argument("--copy-overhead", type=int, dest="cpu_copy_overhead",
                   help="extra cycles per CPU word access to a packet buffer")
    g.add_argument("--dma-setup", type=int, dest="dma_setup_cycles")
    g.add_argument("--seed", type=int)
    g.add_argument("--csv", dest="csv_path", metavar="PATH")
    g.add_argument("--copy-as-payload-phase", action="store_const", const=True,
                   dest="copy_as_payload_phase",
                   help="count the buffered design's CPU copy as payload time")
    return p


def build_parser():
    common = _common_flags()
    ap = argparse.ArgumentParser(
        prog="ethsim",
        description="Cycle-level Ethernet controller simulator: buffered vs bufferless.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("bench", parents=[common],
                   help="phase latencies per design and payload, as CSV")
    lb = sub.add_parser("loopback", parents=[common],
                        help="echo random frames through the bufferless TX/RX path")
    lb.add_argument("--frames", type=int, default=1000)
    tr = sub.add_parser("trace", parents=[common], help="write a per-edge CSV trace")
    tr.add_argument("scenario", choices=bench.SCENARIOS)
    tr.add_argument("out_path", metavar="OUT")
    return ap


_SETTINGS = ("payloads", "designs", "sys_clk_mhz", "bus_width", "cdc_depth", "threshold",
             "cpu_copy_overhead", "dma_setup_cycles", "seed", "csv_path",
             "copy_as_payload_phase")


def config_from_args(args):
    file_values = bench.load_config(args.config) if args.config else {}
    return bench.make_config(file_values, {k: getattr(args, k) for k in _SETTINGS})


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"ethsim: error: {exc}", file=sys.stderr)
        return bench.EXIT_USAGE
    if args.command == "bench":
        return bench.cmd_bench(cfg)
    if args.command == "loopback":
        return bench.cmd_loopback(args.frames, cfg.seed, cfg)
    return bench.cmd_trace(args.scenario, args.out_path, cfg)


if __name__ == "__main__":
    sys.exit(main())
