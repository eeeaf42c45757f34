"""Benchmark harness: phase-latency tables, loopback verification and traces.

Each ``cmd_*`` function returns a process exit code (see ``EXIT_*``) and
writes its human-readable report to ``out``.
"""

import csv
import dataclasses
import random
import sys
from dataclasses import dataclass

from .axis import CdcFifo, StreamBeat
from .controllers import (
    BufferlessController, BufferOverflow, ControllerConfig, Underrun, build, savings,
)
from .errors import ConfigurationError, SimulationError
from .frame import encode
from .kernel import ETH_DOMAIN, Kernel, RunOutcome

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2

DESIGN_ORDER = ("buffered", "bufferless")
CSV_COLUMNS = ("design", "payload_bytes", "phase", "cycles", "status", "savings_pct")
SCENARIOS = ("tx_256", "tx_1024", "rx_1024", "cdc_stress")


# -- configuration -------------------------------------------------------------


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_payloads(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(p) for p in text)
    return tuple(int(p) for p in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class BenchConfig:
    """Everything one harness invocation needs.

    Parameters
    ----------
    payloads : tuple of int
        Payload sizes in bytes, each at least 1.
    designs : str
        ``buffered``, ``bufferless`` or ``both``.
    cpu_copy_overhead, dma_setup_cycles : int
        Calibration knobs passed through to :class:`ControllerConfig`.
    csv_path : str or None
        Where ``cmd_bench`` writes its CSV; ``None`` or ``-`` means stdout.
    """

    payloads: tuple = (256, 512, 1024)
    designs: str = "both"
    sys_clk_mhz: float = 50
    bus_width: int = 8
    cdc_depth: int = 32
    threshold: int = 16
    cpu_copy_overhead: int = 4
    dma_setup_cycles: int = 4
    seed: int = 0
    csv_path: str = None
    copy_as_payload_phase: bool = False

    def __post_init__(self):
        if not self.payloads:
            raise ConfigurationError("at least one payload size is required")
        if any(p < 1 for p in self.payloads):
            raise ConfigurationError("payload sizes must be >= 1 byte")
        if self.designs not in ("buffered", "bufferless", "both"):
            raise ConfigurationError(f"unknown design selection {self.designs!r}")
        self.controller_config()  # validates clock and sizing

    def design_list(self):
        return DESIGN_ORDER if self.designs == "both" else (self.designs,)

    def controller_config(self):
        return ControllerConfig(
            sys_clk_mhz=self.sys_clk_mhz,
            bus_width=self.bus_width,
            cdc_depth=self.cdc_depth,
            threshold=self.threshold,
            cpu_copy_overhead=self.cpu_copy_overhead,
            dma_setup_cycles=self.dma_setup_cycles,
            copy_as_payload_phase=self.copy_as_payload_phase,
        )


# config-file key (and its aliases) -> (field, parser)
_KEYS = {
    "payloads": ("payloads", _parse_payloads),
    "designs": ("designs", str),
    "sys_clk_mhz": ("sys_clk_mhz", float),
    "bus_width": ("bus_width", int),
    "cdc_depth": ("cdc_depth", int),
    "threshold": ("threshold", int),
    "cut_through_threshold": ("threshold", int),
    "copy_overhead": ("cpu_copy_overhead", int),
    "cpu_copy_overhead": ("cpu_copy_overhead", int),
    "dma_setup": ("dma_setup_cycles", int),
    "dma_setup_cycles": ("dma_setup_cycles", int),
    "seed": ("seed", int),
    "csv": ("csv_path", str),
    "csv_path": ("csv_path", str),
    "copy_as_payload_phase": ("copy_as_payload_phase", _parse_bool),
}


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into BenchConfig field values.

    Blank lines and ``#`` comments are ignored; keys may use ``-`` or ``_``.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in _KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        field_name, parse = _KEYS[key]
        try:
            values[field_name] = parse(value.strip())
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def make_config(file_values=None, overrides=None):
    """Defaults, then config-file values, then explicit overrides (flags)."""
    values = {}
    values.update(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in dataclasses.fields(BenchConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown settings: {', '.join(sorted(unknown))}")
    if "payloads" in values:
        values["payloads"] = _parse_payloads(values["payloads"])
    return BenchConfig(**values)


# -- bench ---------------------------------------------------------------------


@dataclass(frozen=True)
class BenchResult:
    design: str
    payload: int
    status: str  # ok | buffer_overflow | underrun
    phases: object = None  # PhaseLatencies, absent on buffer_overflow


def run_one(design, payload, cfg):
    """Fresh kernel and controller for one (design, payload) measurement."""
    rng = random.Random(f"{cfg.seed}:{payload}")
    data = rng.randbytes(payload)
    ctrl = build(design, cfg.controller_config())
    try:
        phases = ctrl.tx_transaction(data)
    except BufferOverflow:
        return BenchResult(design, payload, "buffer_overflow")
    except Underrun as exc:
        return BenchResult(design, payload, "underrun", exc.phases)
    return BenchResult(design, payload, "ok", phases)


def bench_rows(results):
    """CSV rows: four phase rows and one total row per measurement."""
    by_key = {(r.design, r.payload): r for r in results}
    rows = []
    for r in results:
        if r.phases is None:
            rows.append((r.design, r.payload, "total", "", r.status, ""))
            continue
        for phase, cycles in r.phases.items():
            rows.append((r.design, r.payload, phase, cycles, r.status, ""))
        pct = ""
        base = by_key.get(("buffered", r.payload))
        if (r.design == "bufferless" and base is not None and base.phases is not None
                and base.status == "ok" and r.status == "ok"):
            pct = f"{savings(base.phases, r.phases):.2f}"
        rows.append((r.design, r.payload, "total", r.phases.total_cycles, r.status, pct))
    return rows


def write_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)


def format_report(results):
    by_key = {(r.design, r.payload): r for r in results}
    payloads = sorted({r.payload for r in results})
    lines = [f"{'payload':>8} {'buffered':>15} {'bufferless':>15} {'savings':>8}"]
    for p in payloads:
        cells = []
        for d in DESIGN_ORDER:
            r = by_key.get((d, p))
            if r is None:
                cells.append("-")
            elif r.phases is None or r.status != "ok":
                cells.append(r.status)
            else:
                cells.append(str(r.phases.total_cycles))
        b, l = by_key.get(("buffered", p)), by_key.get(("bufferless", p))
        pct = "-"
        if b and l and b.status == "ok" and l.status == "ok":
            pct = f"{savings(b.phases, l.phases):.2f}%"
        lines.append(f"{p:>8} {cells[0]:>15} {cells[1]:>15} {pct:>8}")
    return "\n".join(lines)


def cmd_bench(cfg, out=None):
    """Measure every (design, payload) pair and write CSV plus a savings table.

    A buffered overflow is an expected outcome and is only recorded; an
    underrun in either design is a verification failure (exit 1).
    """
    out = out or sys.stdout
    results = [run_one(d, p, cfg) for d in cfg.design_list() for p in cfg.payloads]
    rows = bench_rows(results)
    if cfg.csv_path in (None, "-"):
        write_csv(rows, out)
    else:
        try:
            with open(cfg.csv_path, "w", newline="", encoding="utf-8") as fh:
                write_csv(rows, fh)
        except OSError as exc:
            print(f"error: cannot write {cfg.csv_path}: {exc.strerror}", file=sys.stderr)
            return EXIT_USAGE
    print(format_report(results), file=out)
    return EXIT_VERIFY if any(r.status == "underrun" for r in results) else EXIT_OK


# -- loopback ------------------------------------------------------------------


@dataclass
class LoopbackReport:
    frames: int = 0
    mismatches: int = 0
    fcs_failures: int = 0
    lost: int = 0
    underruns: int = 0

    @property
    def failures(self):
        return self.mismatches + self.fcs_failures + self.lost

    def summary(self):
        verdict = "PASS" if self.failures == 0 else "FAIL"
        return (f"{verdict}: {self.frames} frames, {self.mismatches} mismatched, "
                f"{self.fcs_failures} FCS failures, {self.lost} lost, "
                f"{self.underruns} TX underruns")


def run_loopback(frames, seed, cfg, min_payload=46, max_payload=1500):
    """Echo ``frames`` random frames through one looped-back bufferless controller."""
    ctrl = BufferlessController(cfg.controller_config(), external_phy=False)
    ctrl.loopback()
    rng = random.Random(seed)
    rep = LoopbackReport()
    for _ in range(frames):
        payload = rng.randbytes(rng.randint(min_payload, max_payload))
        expected = ctrl.frame_for(payload).body()
        data, ok = ctrl.echo(payload)
        rep.frames += 1
        if not data:
            rep.lost += 1
        elif not ok:
            rep.fcs_failures += 1
        elif data != expected:
            rep.mismatches += 1
    rep.underruns = ctrl.mac_tx.underruns
    return rep


def cmd_loopback(frames, seed, cfg, out=None):
    out = out or sys.stdout
    if frames < 0:
        print("error: frame count must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    rep = run_loopback(frames, seed, cfg)
    print(rep.summary(), file=out)
    return EXIT_OK if rep.failures == 0 else EXIT_VERIFY


# -- trace ---------------------------------------------------------------------


class _StressWriter:
    """Pushes a numbered sequence into a CDC FIFO with random idle edges."""

    def __init__(self, fifo, count, rng, duty):
        self.name = "stress.writer"
        self.fifo, self.count, self.rng, self.duty = fifo, count, rng, duty
        self.sent = 0

    def tick(self):
        if self.sent < self.count and self.rng.random() < self.duty and self.fifo.can_push():
            self.fifo.push(StreamBeat(self.sent.to_bytes(8, "little"), 0xFF,
                                      self.sent == self.count - 1))
            self.sent += 1


class _StressReader:
    """Drains the FIFO with a random ready pattern, checking sequence order."""

    def __init__(self, port, rng, duty):
        self.name = "stress.reader"
        self.port, self.rng, self.duty = port, rng, duty
        self.received = []

    def tick(self):
        port = self.port
        if port.valid and port.ready:
            self.received.append(int.from_bytes(port.data.data, "little"))
        port.set_ready(self.rng.random() < self.duty)


def run_cdc_stress(kernel, cfg, items=2000, seed=None):
    """Random-stall sys->eth FIFO run; returns (received sequence, fifo)."""
    rng = random.Random(cfg.seed if seed is None else seed)
    sys_dom = cfg.controller_config().sys_domain()
    fifo = CdcFifo("stress.cdc", cfg.cdc_depth)
    fifo.bind(kernel, sys_dom, ETH_DOMAIN)
    writer = _StressWriter(fifo, items, rng, 0.7)
    reader = _StressReader(fifo.reader, rng, 0.25)
    kernel.register(writer, sys_dom)
    kernel.register(reader, ETH_DOMAIN)
    limit = kernel.now + items * sys_dom.period_ps * 20 + 10**7
    outcome = kernel.run_until(lambda _k: len(reader.received) == items, limit)
    if outcome is RunOutcome.TIMED_OUT:
        raise SimulationError("cdc_stress did not drain in time")
    return reader.received, fifo


def run_scenario(scenario, kernel, cfg):
    """Drive one trace scenario on ``kernel``; returns True when it verified."""
    ccfg = cfg.controller_config()
    rng = random.Random(cfg.seed)
    if scenario in ("tx_256", "tx_1024"):
        size = int(scenario.split("_")[1])
        ctrl = BufferlessController(ccfg, kernel=kernel)
        ctrl.tx_transaction(rng.randbytes(size))
        return True
    if scenario == "rx_1024":
        ctrl = BufferlessController(ccfg, kernel=kernel)
        frame = ctrl.frame_for(rng.randbytes(1024))
        result = ctrl.rx_transaction(encode(frame).octets)
        return result.data == frame.body() and result.fcs_ok
    if scenario == "cdc_stress":
        received, fifo = run_cdc_stress(kernel, cfg)
        return received == list(range(len(received))) and fifo.max_occupancy <= fifo.depth
    raise ConfigurationError(f"unknown scenario {scenario!r}")


def cmd_trace(scenario, out_path, cfg, out=None):
    out = out or sys.stdout
    if scenario not in SCENARIOS:
        print(f"error: unknown scenario {scenario!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        fh = open(out_path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    with fh:
        try:
            ok = run_scenario(scenario, Kernel(trace=fh), cfg)
        except SimulationError as exc:
            print(f"error: {scenario}: {exc}", file=sys.stderr)
            ok = False
    print(f"{scenario}: {'ok' if ok else 'FAILED'}, trace written to {out_path}", file=out)
    return EXIT_OK if ok else EXIT_VERIFY


__all__ = [
    "BenchConfig", "BenchResult", "CSV_COLUMNS", "EXIT_OK", "EXIT_USAGE", "EXIT_VERIFY",
    "LoopbackReport", "SCENARIOS", "bench_rows", "cmd_bench",
    "cmd_loopback", "cmd_trace", "load_config", "make_config", "parse_config_text",
    "run_cdc_stress", "run_loopback", "run_one",
]
