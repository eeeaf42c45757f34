"""Two-clock, cycle-stepped simulation kernel.

Time is an integer number of picoseconds. Every clock domain has a period and a
phase; rising edge ``n`` (``n >= 1``) of a domain happens at
``phase + n * period``. On each edge the kernel calls ``tick()`` on every
component bound to that domain (registration order) and then ``commit()`` on
the same components. Components must only read committed state of their peers
during ``tick`` and publish new state in ``commit``; that keeps results
independent of registration order.
"""

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigurationError

PS_PER_SECOND = 10**12

#: Simulation timestamps are plain ints in picoseconds.
SimTime = int


@dataclass(frozen=True)
class ClockDomain:
    name: str
    period_ps: int
    phase_ps: int = 0

    def __post_init__(self):
        if not isinstance(self.period_ps, int) or self.period_ps <= 0:
            raise ConfigurationError(f"{self.name}: period must be a positive integer of ps")
        if not 0 <= self.phase_ps < self.period_ps:
            raise ConfigurationError(f"{self.name}: phase must lie in [0, period)")

    @classmethod
    def from_mhz(cls, name, mhz, phase_ps=0):
        """Build a domain from a frequency; the period must be a whole number of ps."""
        freq_hz = Fraction(str(mhz)) * 1_000_000
        if freq_hz <= 0:
            raise ConfigurationError(f"{name}: frequency must be positive")
        period = Fraction(PS_PER_SECOND) / freq_hz
        if period.denominator != 1:
            raise ConfigurationError(
                f"{name}: {mhz} MHz does not divide 10^12 ps evenly")
        return cls(name, int(period), phase_ps)

    @property
    def mhz(self):
        return PS_PER_SECOND / self.period_ps / 1e6

    def edge_time(self, n):
        return self.phase_ps + n * self.period_ps

    def edges_through(self, t):
        """Number of rising edges with timestamp <= t."""
        if t < self.phase_ps + self.period_ps:
            return 0
        return (t - self.phase_ps) // self.period_ps


#: Ethernet side is pinned to 125 MHz (one octet per cycle = 1 Gb/s).
ETH_DOMAIN = ClockDomain("eth", 8000)
SYS_DOMAIN = ClockDomain("sys", 20000)


class RunOutcome(enum.Enum):
    SATISFIED = "satisfied"
    TIMED_OUT = "timed_out"


@dataclass(slots=True)
class _DomainState:
    domain: ClockDomain
    index: int
    edges: int = 0
    next_time: int = 0
    components: list = field(default_factory=list)
    ticks: list = field(default_factory=list)
    commits: list = field(default_factory=list)
    calls: list = field(default_factory=list)
    period: int = field(init=False)

    def __post_init__(self):
        self.period = self.domain.period_ps


class Kernel:
    """Deterministic edge scheduler for up to two clock domains.

    Parameters
    ----------
    trace : file-like, optional
        Text stream receiving the CSV trace
        ``time_ps,domain,edge_index,component,event,value``.
    """

    TRACE_HEADER = ("time_ps", "domain", "edge_index", "component", "event", "value")
    MAX_DOMAINS = 2

    def __init__(self, trace=None):
        self.now = 0
        self.started = False
        self._domains = {}
        self._order = []
        self._components = []
        self._current = None
        self._writer = None
        self.tracing = False
        if trace is not None:
            self._writer = csv.writer(trace, lineterminator="\n")
            self._writer.writerow(self.TRACE_HEADER)
            self.tracing = True

    # -- configuration ------------------------------------------------------

    def add_domain(self, domain):
        state = self._domains.get(domain.name)
        if state is not None:
            if state.domain != domain:
                raise ConfigurationError(f"domain {domain.name!r} registered twice")
            return state
        if self.started:
            raise ConfigurationError("cannot add a clock domain after the run started")
        if len(self._order) >= self.MAX_DOMAINS:
            raise ConfigurationError("at most two clock domains are supported")
        state = _DomainState(domain, len(self._order), next_time=domain.edge_time(1))
        self._domains[domain.name] = state
        self._order.append(state)
        return state

    def register(self, component, domain):
        """Bind ``component`` to ``domain``; returns a stable integer id."""
        if self.started:
            raise ConfigurationError("cannot register components after the run started")
        state = self.add_domain(domain)
        cid = len(self._components)
        self._components.append((component, state.domain))
        state.components.append(component)
        tick = getattr(component, "tick", None)
        if tick is not None:
            state.ticks.append(tick)
        commit = getattr(component, "commit", None)
        if commit is not None:
            state.commits.append(commit)
        state.calls = state.ticks + state.commits
        return cid

    def domain(self, name):
        return self._lookup(name).domain

    def _lookup(self, domain):
        name = domain if isinstance(domain, str) else domain.name
        try:
            return self._domains[name]
        except KeyError:
            raise ConfigurationError(f"unknown clock domain {name!r}") from None

    # -- queries ------------------------------------------------------------

    def edge_count(self, domain):
        return self._lookup(domain).edges

    @property
    def current_domain(self):
        """Domain whose edge is being processed, or None between edges."""
        return None if self._current is None else self._current.domain

    def edges_since(self, domain, t):
        """Edges of ``domain`` processed strictly after time ``t``."""
        state = self._lookup(domain)
        return state.edges - state.domain.edges_through(t)

    def trace(self, component, event, value=""):
        if self._writer is None:
            return
        cur = self._current
        if cur is None:
            self._writer.writerow((self.now, "", "", component, event, value))
        else:
            self._writer.writerow((self.now, cur.domain.name, cur.edges, component, event, value))

    # -- execution ----------------------------------------------------------

    def run_until(self, predicate, max_time, domain=None):
        """Advance edge by edge until ``predicate(kernel)`` holds after an edge.

        With ``domain`` given, the predicate is only evaluated after edges of
        that domain (cheaper when it depends on that domain's state alone).
        Returns ``RunOutcome.TIMED_OUT`` (with ``now == max_time``) when no edge
        up to and including ``max_time`` satisfies the predicate.
        """
        if max_time < self.now:
            raise ConfigurationError(f"max_time {max_time} is before current time {self.now}")
        if not self._order:
            self.now = max_time
            return RunOutcome.TIMED_OUT
        self.started = True
        watch = None if domain is None else self._lookup(domain)
        start, span, plan = self._edge_plan()
        # edges of this window that already happened are skipped on the first pass
        steps = [(off, st) for off, st in plan if start + off >= st.next_time]
        try:
            while True:
                for offset, state in steps:
                    t = start + offset
                    if t > max_time:
                        self.now = max_time
                        return RunOutcome.TIMED_OUT
                    self.now = t
                    state.edges += 1
                    state.next_time = t + state.period
                    self._current = state
                    for call in state.calls:
                        call()
                    if (watch is None or watch is state) and predicate(self):
                        return RunOutcome.SATISFIED
                start += span
                steps = plan
        finally:
            self._current = None

    def _edge_plan(self):
        """Upcoming edges over one common period of all domains, in processing order.

        The pattern repeats every ``span`` ps, so the run loop can walk it
        cyclically instead of searching for the next edge each time.
        """
        order = self._order
        start = min(s.next_time for s in order)
        span = 1
        for s in order:
            span = math.lcm(span, s.period)
        plan = []
        for s in order:
            t = s.next_time - (s.next_time - start) // s.period * s.period
            while t < start + span:
                plan.append((t - start, s.index, s))
                t += s.period
        plan.sort(key=lambda e: (e[0], e[1]))
        return start, span, [(off, s) for off, _, s in plan]

    def run_for(self, duration_ps):
        return self.run_until(_never, self.now + duration_ps)

    def run_edges(self, domain, n):
        """Process edges until ``n`` more edges of ``domain`` have happened."""
        state = self._lookup(domain)
        target = state.edges + n
        last = state.domain.edge_time(target)
        return self.run_until(lambda k: state.edges >= target, last)


def _never(_kernel):
    return False


def ceil_div(a, b):
    return -(-a // b)
