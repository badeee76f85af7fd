"""Executable state and transition invariants: loop freedom, route correctness and friends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import DEFAULT, InterpretationConfig
from .core import KNOWN, UNKNOWN, VALID, Rrep, Rreq, entry_nsqn, quality_key
from .engine import own_sn
from .network import Label, NetworkState


@dataclass(frozen=True)
class Violation:
    inv: str
    nodes: tuple
    dip: Optional[str]
    detail: str
    index: Optional[int] = None

    def at(self, index: int) -> "Violation":
        return Violation(self.inv, self.nodes, self.dip, self.detail, index)

    def text(self) -> str:
        where = f"step {self.index}: " if self.index is not None else ""
        dip = f" dip={self.dip}" if self.dip is not None else ""
        return f"{where}{self.inv} at {','.join(self.nodes)}{dip}: {self.detail}"


def check_state_invariants(net: NetworkState, cfg: InterpretationConfig = DEFAULT) -> list:
    out = []
    self_entries = cfg.amb6 == "6b"
    nodes = {n.ip: n for n in net.nodes}
    for n in net.nodes:
        ip = n.ip
        if own_sn(n, cfg) < 1:
            out.append(Violation("sn-positive", (ip,), None, f"own sequence number {own_sn(n, cfg)}"))
        for e in n.rt:
            if self_entries and e.dip == ip:
                if not (e.hops == 0 and e.nhip == ip and e.flag == VALID and e.dsk == KNOWN):
                    out.append(Violation("optimal-self-entry", (ip,), e.dip, e.text()))
                continue
            if self_entries and (e.hops == 0 or e.nhip == ip):
                out.append(Violation("only-self-entries-optimal", (ip,), e.dip, e.text()))
            if e.hops < 1:
                out.append(Violation("hops-positive", (ip,), e.dip, e.text()))
            if e.dsn == 0 and e.dsk != UNKNOWN:
                out.append(Violation("zero-sqn-unknown", (ip,), e.dip, e.text()))
            if e.dsk == UNKNOWN and e.hops != 1:
                out.append(Violation("unknown-sqn-one-hop", (ip,), e.dip, e.text()))
            if e.hops == 1 and e.dip != e.nhip:
                out.append(Violation("one-hop-direct", (ip,), e.dip, e.text()))
            if e.nhip != e.dip:
                nh = nodes.get(e.nhip)
                other = nh.rt.get(e.dip) if nh is not None else None
                if other is None:
                    out.append(Violation("next-hop-knows-dest", (ip, e.nhip), e.dip,
                                         f"{ip} has {e.text()} but {e.nhip} has no entry"))
                elif entry_nsqn(e) > entry_nsqn(other):
                    out.append(Violation("next-hop-nsqn", (ip, e.nhip), e.dip,
                                         f"{e.text()} at {ip} fresher than {other.text()} at {e.nhip}"))
        for dip, flag, q in n.store.queues:
            if not q:
                out.append(Violation("store-nonempty-queue", (ip,), dip, "empty queue"))
            if dip == ip:
                out.append(Violation("store-not-own", (ip,), dip, "data queued for the node itself"))
    out.extend(check_quality_chain(net))
    return out


def check_quality_chain(net: NetworkState) -> list:
    """Quality strictly increases along valid routes until the destination."""
    out = []
    nodes = {n.ip: n for n in net.nodes}
    for n in net.nodes:
        for e in n.rt:
            if e.flag != VALID or e.nhip == e.dip:
                continue
            nh = nodes.get(e.nhip)
            if nh is None or not nh.rt.is_valid(e.dip):
                continue
            if not quality_key(n.rt, e.dip) < quality_key(nh.rt, e.dip):
                out.append(Violation("quality-chain", (n.ip, nh.ip), e.dip,
                                     f"{e.text()} at {n.ip} not worse than {nh.rt.get(e.dip).text()} at {nh.ip}"))
    return out


def check_transition_monotone(before: NetworkState, after: NetworkState,
                              cfg: InterpretationConfig = DEFAULT) -> list:
    out = []
    nsqn_rule = cfg.amb2 == "2e"
    for a, b in zip(before.nodes, after.nodes):
        ip = a.ip
        if a.rt is b.rt and a.rreqs is b.rreqs and a.sn == b.sn:
            continue
        if own_sn(b, cfg) < own_sn(a, cfg):
            out.append(Violation("sn-monotone", (ip,), None, f"{own_sn(a, cfg)} -> {own_sn(b, cfg)}"))
        if not a.rreqs <= b.rreqs:
            out.append(Violation("rreqs-monotone", (ip,), None, f"lost {sorted(a.rreqs - b.rreqs, key=repr)}"))
        for e in a.rt:
            f = b.rt.get(e.dip)
            if f is None:
                out.append(Violation("known-monotone", (ip,), e.dip, f"entry {e.text()} removed"))
                continue
            if e == f:
                continue
            if nsqn_rule:
                if entry_nsqn(f) < entry_nsqn(e):
                    out.append(Violation("nsqn-monotone", (ip,), e.dip, f"{e.text()} -> {f.text()}"))
            elif f.dsn < e.dsn:
                out.append(Violation("sqn-monotone", (ip,), e.dip, f"{e.text()} -> {f.text()}"))
            if (entry_nsqn(f), -f.hops) < (entry_nsqn(e), -e.hops):
                out.append(Violation("quality-monotone", (ip,), e.dip, f"{e.text()} -> {f.text()}"))
    return out


def routing_graph(net: NetworkState, dip: str) -> dict:
    return {n.ip: n.rt.nhop(dip) for n in net.nodes if n.ip != dip and n.rt.is_valid(dip)}


def detect_routing_loop(net: NetworkState) -> Optional[tuple]:
    """Return (dip, cycle) for the first destination whose routing graph has a cycle."""
    dests = sorted({e.dip for n in net.nodes for e in n.rt if e.flag == VALID})
    for dip in dests:
        succ = routing_graph(net, dip)
        done: set = set()
        for start in sorted(succ):
            path, pos = [], {}
            x = start
            while x in succ and x not in done and x not in pos:
                pos[x] = len(path)
                path.append(x)
                x = succ[x]
            if x in pos:
                return dip, tuple(path[pos[x]:])
            done.update(path)
    return None


def loop_violation(net: NetworkState) -> list:
    found = detect_routing_loop(net)
    if found is None:
        return []
    dip, cycle = found
    return [Violation("routing-loop", cycle, dip, "cycle " + "->".join(cycle + cycle[:1]))]


def _walk_exists(adj: dict, src: str, dst: str, hops: int, first: Optional[str]) -> bool:
    if hops == 0:
        return src == dst
    if first is not None:
        if first not in adj.get(src, ()):
            return False
        frontier = {first}
        hops -= 1
    else:
        frontier = {src}
    for _ in range(hops):
        nxt = set()
        for x in frontier:
            nxt |= adj.get(x, set())
        frontier = nxt
        if not frontier:
            return False
    return dst in frontier


def _adjacency(net: NetworkState) -> dict:
    adj: dict = {}
    for a, b in net.history:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def check_route_correctness(net: NetworkState) -> list:
    """Every entry matches a path of exactly hops hops via nhip in the history graph."""
    out = []
    adj = _adjacency(net)
    for n in net.nodes:
        for e in n.rt:
            if not _walk_exists(adj, n.ip, e.dip, e.hops, e.nhip if e.hops > 0 else None):
                out.append(Violation("route-correct", (n.ip,), e.dip,
                                     f"no {e.hops}-hop path via {e.nhip} for {e.text()}"))
    return out


def check_message_paths(net: NetworkState, label: Label) -> list:
    """Sent requests and replies describe paths of the history graph."""
    msg = label.msg
    if not label.is_cast:
        return []
    if isinstance(msg, Rreq):
        src, dst = msg.sip, msg.oip
    elif isinstance(msg, Rrep):
        src, dst = msg.sip, msg.dip
    else:
        return []
    if _walk_exists(_adjacency(net), src, dst, msg.hops, None):
        return []
    return [Violation("route-correct-message", (src,), dst, f"{msg.text()} has no matching path")]


def check_provenance(before: NetworkState, label: Label) -> list:
    """Control messages carry the sender's own address."""
    msg = label.msg
    if label.is_cast and hasattr(msg, "sip") and not hasattr(msg, "data") and msg.sip != label.src:
        return [Violation("sender-identity", (label.src,), None, msg.text())]
    return []


CHECKS = ("all", "loops", "monotone", "route-correct", "state")


def check_state(net: NetworkState, cfg: InterpretationConfig, which: str = "all") -> list:
    """The checks that depend on a single state only."""
    out = []
    if which in ("all", "loops"):
        out += loop_violation(net)
    if which in ("all", "state"):
        out += check_state_invariants(net, cfg)
    if which in ("all", "route-correct"):
        out += check_route_correctness(net)
    return out


def check_transition(before: NetworkState, after: NetworkState, label: Label, cfg: InterpretationConfig,
                     which: str = "all") -> list:
    """The checks that relate a state to its predecessor or inspect the transition label."""
    out = []
    if which in ("all", "state"):
        out += check_provenance(before, label)
    if which in ("all", "monotone"):
        out += check_transition_monotone(before, after, cfg)
    if which in ("all", "route-correct"):
        out += check_message_paths(after, label)
    return out


def check_step(before: NetworkState, after: NetworkState, label: Label, cfg: InterpretationConfig,
               which: str = "all") -> list:
    return check_state(after, cfg, which) + check_transition(before, after, label, cfg, which)


def check_trace(trace, cfg: InterpretationConfig, which: str = "all") -> list:
    out = []
    prev = trace.initial
    for i, s in enumerate(trace.steps):
        out.extend(v.at(i) for v in check_step(prev, s.state, s.label, cfg, which))
        prev = s.state
    return out
