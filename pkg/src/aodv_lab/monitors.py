"""Finite-trace verdicts for route discovery and packet delivery properties.

Runs are complete when they end quiescent; a run cut off by the budget gives
an inconclusive verdict instead of a guess.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import PENDING, Rrep, Rreq
from .network import QUIESCENT, Trace, connected_star

SATISFIED = "satisfied"
VIOLATED = "violated"
VACUOUS = "vacuous"
INCONCLUSIVE = "budget-inconclusive"

PROPERTIES = ("route-discovery", "reply-issued", "pd1", "pd2", "pd3")


@dataclass
class Verdict:
    prop: str
    outcome: str
    witness: tuple = ()
    detail: str = ""

    def text(self) -> str:
        w = f" at steps {','.join(map(str, self.witness))}" if self.witness else ""
        d = f" ({self.detail})" if self.detail else ""
        return f"{self.prop}: {self.outcome}{w}{d}"


def _combine(prop: str, results: list) -> Verdict:
    """Aggregate per-obligation outcomes: any violation wins, then inconclusive."""
    if not results:
        return Verdict(prop, VACUOUS, detail="no qualifying event")
    for outcome in (VIOLATED, INCONCLUSIVE):
        bad = [i for o, i in results if o == outcome]
        if bad:
            return Verdict(prop, outcome, tuple(bad))
    sat = [i for o, i in results if o == SATISFIED]
    if sat:
        return Verdict(prop, SATISFIED, tuple(sat))
    return Verdict(prop, VACUOUS, tuple(i for _, i in results))


def _disconnect_after(trace: Trace, i: int) -> bool:
    return any(s.label.kind == "disconnect" for s in trace.steps[i + 1:])


def _state_before(trace: Trace, i: int):
    return trace.steps[i - 1].state if i > 0 else trace.initial


def _initiated_requests(trace: Trace, oip=None, dip=None):
    for i, s in enumerate(trace.steps):
        m = s.label.msg
        if (s.label.kind == "broadcast" and isinstance(m, Rreq) and m.oip == m.sip == s.label.src
                and (oip is None or m.oip == oip) and (dip is None or m.dip == dip)):
            yield i, m


def route_discovery(trace: Trace, end: str = QUIESCENT, oip=None, dip=None) -> Verdict:
    """A request issued while a path exists ends with a valid route at the originator."""
    results = []
    for i, m in _initiated_requests(trace, oip, dip):
        if not connected_star(_state_before(trace, i), m.oip, m.dip):
            continue
        found = any(s.state.node(m.oip).rt.is_valid(m.dip) for s in trace.steps[i:])
        if found or _disconnect_after(trace, i):
            results.append((SATISFIED, i))
        else:
            results.append((VIOLATED if end == QUIESCENT else INCONCLUSIVE, i))
    return _combine("route-discovery", results)


def reply_issued(trace: Trace, end: str = QUIESCENT, oip=None, dip=None) -> Verdict:
    """Some node answers every request that is issued while a path exists."""
    results = []
    for i, m in _initiated_requests(trace, oip, dip):
        if not connected_star(_state_before(trace, i), m.oip, m.dip):
            continue
        replied = any(s.label.kind == "unicast" and isinstance(s.label.msg, Rrep)
                      and s.label.msg.dip == m.dip and s.label.msg.oip == m.oip
                      for s in trace.steps[i:])
        if replied or _disconnect_after(trace, i):
            results.append((SATISFIED, i))
        else:
            results.append((VIOLATED if end == QUIESCENT else INCONCLUSIVE, i))
    return _combine("reply-issued", results)


def _injections(trace: Trace, oip=None, dip=None, data=None):
    for i, s in enumerate(trace.steps):
        lb = s.label
        if (lb.kind == "newpkt" and (oip is None or lb.src == oip)
                and (dip is None or lb.receivers[0] == dip) and (data is None or lb.detail == data)):
            yield i, lb.src, lb.receivers[0], lb.detail


def _delivered_after(trace: Trace, i: int, dip, data) -> bool:
    return any(s.label.kind == "deliver" and s.label.src == dip and s.label.detail == data
               for s in trace.steps[i + 1:])


def packet_delivery_pd1(trace: Trace, end: str = QUIESCENT, oip=None, dip=None, data=None) -> Verdict:
    """Each packet injected while a path exists is delivered (or a link breaks)."""
    results = []
    for i, o, d, p in _injections(trace, oip, dip, data):
        if not connected_star(_state_before(trace, i), o, d):
            continue
        if _delivered_after(trace, i, d, p) or _disconnect_after(trace, i):
            results.append((SATISFIED, i))
        else:
            results.append((VIOLATED if end == QUIESCENT else INCONCLUSIVE, i))
    return _combine("pd1", results)


def _rrf_precondition_broken(trace: Trace, o, d) -> bool:
    """At the end the data waits for a route and no new request will ever be made."""
    n = trace.final.node(o)
    return d in n.store and not n.rt.is_valid(d) and n.store.flag(d) == PENDING


def _repeated_delivery(prop: str, trace: Trace, end: str, oip, dip, data, with_rrf: bool) -> Verdict:
    """The last injection of each repeatedly injected packet stands for the infinite tail."""
    last: dict = {}
    for i, o, d, p in _injections(trace, oip, dip, data):
        last[(o, d, p)] = i
    results = []
    for (o, d, p), i in sorted(last.items(), key=lambda kv: kv[1]):
        if not connected_star(_state_before(trace, i), o, d):
            continue
        if _delivered_after(trace, i, d, p) or _disconnect_after(trace, i):
            results.append((SATISFIED, i))
        elif end != QUIESCENT:
            results.append((INCONCLUSIVE, i))
        elif with_rrf and _rrf_precondition_broken(trace, o, d):
            results.append((VACUOUS, i))
        else:
            results.append((VIOLATED, i))
    return _combine(prop, results)


def packet_delivery_pd2(trace: Trace, end: str = QUIESCENT, oip=None, dip=None, data=None) -> Verdict:
    return _repeated_delivery("pd2", trace, end, oip, dip, data, with_rrf=False)


def packet_delivery_pd3(trace: Trace, end: str = QUIESCENT, oip=None, dip=None, data=None) -> Verdict:
    return _repeated_delivery("pd3", trace, end, oip, dip, data, with_rrf=True)


MONITORS = {
    "route-discovery": route_discovery,
    "reply-issued": reply_issued,
    "pd1": packet_delivery_pd1,
    "pd2": packet_delivery_pd2,
    "pd3": packet_delivery_pd3,
}


def evaluate(prop: str, trace: Trace, end: str = QUIESCENT, **filters) -> Verdict:
    try:
        fn = MONITORS[prop]
    except KeyError:
        raise ValueError(f"unknown property {prop!r}") from None
    return fn(trace, end, **filters)


def fairness_certificate(trace: Trace) -> Optional[tuple]:
    """Longest stretch a task class stayed enabled without being served.

    Returns (task, length, bound) for the worst stretch when it exceeds the
    bound, else None.  The bound is nodes x task classes, which a round-robin
    over nodes and over each node's classes never exceeds.
    """
    from .network import internal_choices

    states = trace.states()
    n = len(trace.initial.nodes)
    bound = n * (1 + 2 * n)
    waiting: dict = {}
    worst = None
    for i, s in enumerate(trace.steps):
        enabled = set(internal_choices(states[i]))
        if s.choice not in enabled:
            # environment events do not count towards the scheduler's obligations
            continue
        for c in list(waiting):
            if c not in enabled:
                del waiting[c]
        for c in enabled:
            if c == s.choice:
                waiting.pop(c, None)
            else:
                waiting[c] = waiting.get(c, 0) + 1
                if waiting[c] > bound and (worst is None or waiting[c] > worst[1]):
                    worst = (c, waiting[c], bound)
    return worst
