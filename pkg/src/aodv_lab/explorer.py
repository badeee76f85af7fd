"""Breadth-first exploration of every interleaving of a small scenario.

The scripted statements before the first ``free``/``ordered`` block form a
fixed prefix.  After it, events from ``free`` blocks may fire at any point,
while events of ``ordered`` blocks and later loose events fire in script
order; protocol transitions interleave freely with both.  A scenario without
blocks has an empty prefix and all its events form the ordered chain.
"""

from __future__ import annotations

import hashlib
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .config import InterpretationConfig
from .invariants import Violation, check_state, check_step, check_transition, detect_routing_loop
from .network import NetworkState, initial_network, internal_choices, replay, step
from .scenario import Block, Event, Scenario, run_scenario


def canonical_hash(net: NetworkState) -> str:
    """Structural hash: routing tables, precursor sets and ranges sorted, queues in order."""
    return hashlib.blake2b(repr(net.canonical()).encode(), digest_size=16).hexdigest()


@dataclass
class Finding:
    violation: Violation
    witness: tuple  # full choice sequence from the scenario's initial state
    replayed: bool = False

    def text(self) -> str:
        tag = "replayed" if self.replayed else "NOT REPLAYED"
        return f"{self.violation.text()} [witness {len(self.witness)} steps, {tag}]"


@dataclass
class ExploreReport:
    states: int = 0
    transitions: int = 0
    findings: list = field(default_factory=list)
    truncated: bool = False
    max_depth_seen: int = 0
    seconds: float = 0.0
    prefix_length: int = 0

    @property
    def loops(self) -> list:
        return [f for f in self.findings if f.violation.inv == "routing-loop"]

    def summary(self) -> dict:
        return {
            "states": self.states,
            "transitions": self.transitions,
            "violations": len(self.findings),
            "loops": len(self.loops),
            "truncated": self.truncated,
            "depth": self.max_depth_seen,
            "seconds": round(self.seconds, 2),
        }


@dataclass(frozen=True)
class Shape:
    prefix: Scenario
    free: tuple
    ordered: tuple


def scenario_shape(scn: Scenario) -> Shape:
    first = next((i for i, s in enumerate(scn.statements) if isinstance(s, Block)), None)
    if first is None:
        prefix, rest = (), scn.statements
    else:
        prefix, rest = scn.statements[:first], scn.statements[first:]
    free, ordered = [], []
    for st in rest:
        if isinstance(st, Block):
            (free if st.kind == "free" else ordered).extend(st.events)
        elif isinstance(st, Event):
            ordered.append(st)
    return Shape(Scenario(scn.nodes, scn.edges, prefix), tuple(free), tuple(ordered))


def explore(scn: Scenario, cfg: InterpretationConfig, *, checks: str = "all",
            max_depth: Optional[int] = None, max_states: int = 2_000_000,
            stop_at_first: bool = False, time_limit: Optional[float] = None) -> ExploreReport:
    t0 = time.monotonic()
    shape = scenario_shape(scn)
    report = ExploreReport()
    if shape.prefix.statements:
        pre = run_scenario(shape.prefix, cfg)
        start_net, prefix_choices = pre.final, tuple(pre.trace.choices())
        initial = pre.trace.initial
    else:
        initial = initial_network(scn.nodes, scn.edges, cfg)
        start_net, prefix_choices = initial, ()
    report.prefix_length = len(prefix_choices)
    free_all = frozenset(range(len(shape.free)))
    start = (start_net, free_all, 0)
    parent: dict = {start: None}
    seen_inv: set = set()
    frontier = deque([(start, 0)])
    report.states = 1
    for v in check_state(start_net, cfg, checks):
        seen_inv.add((v.inv, v.nodes, v.dip))
        report.findings.append(Finding(v, prefix_choices))

    def record(vs, key, choice) -> bool:
        hit_loop = False
        for v in vs:
            k = (v.inv, v.nodes, v.dip)
            if k in seen_inv:
                continue
            seen_inv.add(k)
            report.findings.append(Finding(v, path_to(key) + (choice,)))
            hit_loop = hit_loop or v.inv == "routing-loop"
        return hit_loop and stop_at_first

    def path_to(key) -> tuple:
        out = []
        while parent[key] is not None:
            key, choice = parent[key]
            out.append(choice)
        return prefix_choices + tuple(reversed(out))

    done = False
    while frontier and not done:
        key, depth = frontier.popleft()
        net, free, idx = key
        if max_depth is not None and depth >= max_depth:
            if internal_choices(net) or free or idx < len(shape.ordered):
                report.truncated = True
            continue
        moves = [(c, free, idx) for c in internal_choices(net)]
        moves += [(shape.free[i].choice(), free - {i}, idx) for i in sorted(free)]
        if idx < len(shape.ordered):
            moves.append((shape.ordered[idx].choice(), free, idx + 1))
        for choice, free2, idx2 in moves:
            after, label = step(net, choice, cfg)
            report.transitions += 1
            if checks != "loops" and record(check_transition(net, after, label, cfg, checks), key, choice):
                done = True
            nkey = (after, free2, idx2)
            if nkey in parent:
                continue
            parent[nkey] = (key, choice)
            if record(check_state(after, cfg, checks), key, choice):
                done = True
            report.states += 1
            report.max_depth_seen = max(report.max_depth_seen, depth + 1)
            if report.states >= max_states or (time_limit and time.monotonic() - t0 > time_limit):
                report.truncated = True
                done = True
                break
            frontier.append((nkey, depth + 1))
            if done:
                break
    for f in report.findings:
        f.replayed = replays(initial, f, cfg, checks)
    report.seconds = time.monotonic() - t0
    return report


def replays(initial: NetworkState, finding: Finding, cfg: InterpretationConfig, checks: str = "all") -> bool:
    """Re-execute a witness and confirm its last transition shows the violation."""
    trace = replay(initial, finding.witness, cfg)
    if not trace.steps:
        return any(v.inv == finding.violation.inv for v in check_state(initial, cfg, checks))
    v = finding.violation
    if v.inv == "routing-loop":
        found = detect_routing_loop(trace.final)
        return found is not None and found[0] == v.dip
    before = trace.steps[-2].state if len(trace.steps) > 1 else trace.initial
    last = trace.steps[-1]
    return any((w.inv, w.nodes, w.dip) == (v.inv, v.nodes, v.dip)
               for w in check_step(before, last.state, last.label, cfg, checks))


def witness_lines(initial: NetworkState, finding: Finding, cfg: InterpretationConfig) -> list:
    return replay(initial, finding.witness, cfg).lines()


def initial_of(scn: Scenario, cfg: InterpretationConfig) -> NetworkState:
    return initial_network(scn.nodes, scn.edges, cfg)
