"""The AODV processes as deterministic handlers over immutable node states.

A node is either idle (empty frame) or busy with a tuple of pending operations.
Starting a task runs every guard and assignment of the handler at once and
leaves the remaining casts in the frame.  Internal operations in the frame are
evaluated eagerly by :func:`run_internal`, so the first operation of a busy
frame is always an observable one (a cast or a deliver).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .config import DEFAULT, InterpretationConfig
from .core import (
    EMPTY_RT, EMPTY_STORE, INVALID, KNOWN, NON_PENDING, UNKNOWN, VALID,
    Address, Newpkt, Pkt, Rerr, Rrep, Rreq, RouteEntry, RoutingTable, Store,
    add_precursors_if_known, inc_sqn, invalidate_routes, make_rerr, new_rreq_id,
    set_rrf, store_add, store_drop, unset_rrf, update_route,
)


# pending operations


@dataclass(frozen=True)
class Broadcast:
    msg: object


@dataclass(frozen=True)
class Groupcast:
    dests: tuple
    msg: object


@dataclass(frozen=True)
class Unicast:
    dest: Address
    msg: object
    ok: tuple = ()
    fail: tuple = ()


@dataclass(frozen=True)
class Deliver:
    data: str


@dataclass(frozen=True)
class LinkBreak:
    """Error handling after a failed unicast to next hop nh."""
    nh: Address


@dataclass(frozen=True)
class DropHead:
    dip: Address


VISIBLE = (Broadcast, Groupcast, Unicast, Deliver)


@dataclass(frozen=True)
class Node:
    ip: Address
    sn: int = 1
    rt: RoutingTable = EMPTY_RT
    rreqs: frozenset = frozenset()
    store: Store = EMPTY_STORE
    msgq: tuple = ()
    frame: tuple = ()

    def __hash__(self) -> int:
        # states are hashed many times during exploration, so cache it
        try:
            return self._hash
        except AttributeError:
            h = hash((self.ip, self.sn, self.rt, self.rreqs, self.store, self.msgq, self.frame))
            object.__setattr__(self, "_hash", h)
            return h

    @property
    def idle(self) -> bool:
        return not self.frame

    def canonical(self) -> tuple:
        return (self.ip, self.sn, self.rt.canonical(), tuple(sorted(self.rreqs, key=repr)),
                self.store.queues, self.msgq, self.frame)


def initial_node(ip: Address, cfg: InterpretationConfig = DEFAULT) -> Node:
    if cfg.amb6 == "6b":
        return Node(ip, 1, RoutingTable([RouteEntry(ip, 1, KNOWN, VALID, 0, ip, frozenset())]))
    return Node(ip)


# configuration-dependent helpers


def _update(rt: RoutingTable, r: RouteEntry, cfg: InterpretationConfig, *, in_rrep=False) -> RoutingTable:
    overlay = cfg.rrep_overlay_everywhere or (in_rrep and cfg.rrep_overlay)
    return update_route(rt, r, cfg.update_variant, rrep=overlay,
                        skip_invalid_clause=cfg.amb4 == "4b")


def _set_own_sn(node: Node, value: int, cfg: InterpretationConfig) -> Node:
    """Own sequence number: a variable, or the self-entry under resolution 6b."""
    if cfg.amb6 == "6b":
        ip = node.ip
        rt = _update(node.rt, RouteEntry(ip, value, KNOWN, VALID, 0, ip, frozenset()), cfg)
        return replace(node, rt=rt, sn=rt.sqn(ip))
    return replace(node, sn=value)


def own_sn(node: Node, cfg: InterpretationConfig) -> int:
    if cfg.amb6 == "6b":
        return node.rt.sqn(node.ip)
    return node.sn


def _rreq_key(msg: Rreq, cfg: InterpretationConfig):
    if cfg.has("skip-rreqid"):
        return (msg.oip, msg.osn)
    return (msg.oip, msg.rreqid)


def _rerr_op(pre, dests, ip: Address, cfg: InterpretationConfig, *, forward_if_any=None) -> tuple:
    """The cast that reports broken routes: groupcast to precursors or broadcast."""
    if cfg.has("bcast-rerr"):
        ds = dests if forward_if_any is None else forward_if_any
        if not ds:
            return ()
        return (Broadcast(make_rerr(ds, ip)),)
    if not pre:
        return ()
    return (Groupcast(tuple(sorted(pre)), make_rerr(dests, ip)),)


def _break_dests(rt: RoutingTable, nh: Address, cfg: InterpretationConfig) -> dict:
    dests = {}
    for e in rt:
        if e.flag == VALID and e.nhip == nh:
            if cfg.amb7 == "7b" and e.dsk == UNKNOWN:
                dests[e.dip] = e.dsn
            else:
                dests[e.dip] = inc_sqn(e.dsn)
    return dests


def _report_broken(node: Node, dests: dict, cfg: InterpretationConfig) -> tuple[Node, tuple]:
    """Invalidate dests, re-enable route requests for them and report the breakage."""
    rt = invalidate_routes(node.rt, dests, cfg.amb8)
    store = set_rrf(node.store, dests)
    pre = set()
    for rip in dests:
        pre |= rt.precs(rip) or frozenset()
    thinned = {rip: rsn for rip, rsn in dests.items() if rt.precs(rip)}
    node = replace(node, rt=rt, store=store)
    return node, _rerr_op(pre, thinned, node.ip, cfg, forward_if_any=dests)


def link_break(node: Node, nh: Address, cfg: InterpretationConfig) -> tuple[Node, tuple]:
    return _report_broken(node, _break_dests(node.rt, nh, cfg), cfg)


def run_internal(node: Node, cfg: InterpretationConfig) -> Node:
    """Evaluate leading internal operations until an observable one is next."""
    frame = node.frame
    while frame and not isinstance(frame[0], VISIBLE):
        op, rest = frame[0], frame[1:]
        if isinstance(op, LinkBreak):
            node, ops = link_break(replace(node, frame=()), op.nh, cfg)
            frame = ops + rest
        elif isinstance(op, DropHead):
            node = replace(node, store=store_drop(op.dip, node.store))
            frame = rest
        else:
            raise TypeError(f"unknown operation {op!r}")
    if frame is not node.frame:
        node = replace(node, frame=frame)
    return node


# tasks of the main process

RECV = "recv"
SEND = "send"
RREQ = "rreq"
CONT = "cont"


def enabled_tasks(node: Node) -> list:
    if node.frame:
        return [(CONT,)]
    tasks = []
    if node.msgq:
        tasks.append((RECV,))
    if node.store.queues:
        rt = node.rt
        for dip, flag, _ in node.store.queues:
            if rt.is_valid(dip):
                tasks.append((SEND, dip))
        for dip, flag, _ in node.store.queues:
            if not rt.is_valid(dip) and flag == NON_PENDING:
                tasks.append((RREQ, dip))
    return tasks


def start_task(node: Node, task: tuple, cfg: InterpretationConfig) -> tuple[Node, Optional[object]]:
    """Run an idle node's task; returns the new node and the handled message (if any)."""
    kind = task[0]
    if not node.idle:
        raise RuntimeError(f"node {node.ip} is busy")
    if kind == RECV:
        if not node.msgq:
            raise RuntimeError(f"node {node.ip} has no message")
        msg, node = node.msgq[0], replace(node, msgq=node.msgq[1:])
        return handle_message(node, msg, cfg), msg
    if kind == SEND:
        return send_data(node, task[1], cfg), None
    if kind == RREQ:
        return initiate_rreq(node, task[1], cfg), None
    raise ValueError(f"unknown task {task!r}")


def send_data(node: Node, dip: Address, cfg: InterpretationConfig) -> Node:
    rt = node.rt
    if dip not in node.store or not rt.is_valid(dip):
        raise RuntimeError(f"send_data({dip}) not enabled at {node.ip}")
    nh = rt.nhop(dip)
    op = Unicast(nh, Pkt(node.store.head(dip), dip, node.ip), ok=(DropHead(dip),), fail=(LinkBreak(nh),))
    return replace(node, frame=(op,))


def initiate_rreq(node: Node, dip: Address, cfg: InterpretationConfig) -> Node:
    if dip not in node.store or node.rt.is_valid(dip) or node.store.flag(dip) != NON_PENDING:
        raise RuntimeError(f"initiate_rreq({dip}) not enabled at {node.ip}")
    node = replace(node, store=unset_rrf(node.store, dip))
    node = _set_own_sn(node, inc_sqn(own_sn(node, cfg)), cfg)
    sn = own_sn(node, cfg)
    if cfg.has("skip-rreqid"):
        rreqid, key = None, (node.ip, sn)
    else:
        rreqid = new_rreq_id(node.rreqs, node.ip)
        key = (node.ip, rreqid)
    rt = node.rt
    msg = Rreq(0, rreqid, dip, rt.sqn(dip), rt.sqnf(dip), node.ip, sn, node.ip,
               False if cfg.has("fwd-rreq") else None)
    return replace(node, rreqs=node.rreqs | {key}, frame=(Broadcast(msg),))


def handle_message(node: Node, msg, cfg: InterpretationConfig) -> Node:
    if isinstance(msg, Newpkt):
        return process_newpkt(node, msg, cfg)
    if isinstance(msg, Pkt):
        return process_pkt(node, msg, cfg)
    sip = msg.sip
    node = replace(node, rt=_update(node.rt, RouteEntry(sip, 0, UNKNOWN, VALID, 1, sip, frozenset()), cfg))
    if isinstance(msg, Rreq):
        return process_rreq(node, msg, cfg)
    if isinstance(msg, Rrep):
        return process_rrep(node, msg, cfg)
    if isinstance(msg, Rerr):
        return process_rerr(node, msg, cfg)
    raise TypeError(f"unknown message {msg!r}")


def process_newpkt(node: Node, msg: Newpkt, cfg: InterpretationConfig) -> Node:
    if msg.dip == node.ip:
        return replace(node, frame=(Deliver(msg.data),))
    return replace(node, store=store_add(msg.data, msg.dip, node.store))


def process_pkt(node: Node, msg: Pkt, cfg: InterpretationConfig) -> Node:
    rt, dip = node.rt, msg.dip
    if dip == node.ip:
        return replace(node, frame=(Deliver(msg.data),))
    if rt.is_valid(dip):
        nh = rt.nhop(dip)
        return replace(node, frame=(Unicast(nh, Pkt(msg.data, dip, msg.oip), fail=(LinkBreak(nh),)),))
    if rt.is_invalid(dip):
        dests = {dip: rt.sqn(dip)}
        return replace(node, frame=_rerr_op(rt.precs(dip), dests, node.ip, cfg))
    if cfg.amb9 == "9b":
        return replace(node, frame=(Broadcast(make_rerr({dip: 0}, node.ip)),))
    return node


def _reply(node: Node, rrep: Rrep, fwd: tuple) -> Node:
    nh = node.rt.nhop(rrep.oip)
    return replace(node, frame=(Unicast(nh, rrep, ok=fwd, fail=(LinkBreak(nh),)),))


def process_rreq(node: Node, msg: Rreq, cfg: InterpretationConfig) -> Node:
    key = _rreq_key(msg, cfg)
    if key in node.rreqs:
        return node
    ip, dip, oip = node.ip, msg.dip, msg.oip
    rt = _update(node.rt, RouteEntry(oip, msg.osn, KNOWN, VALID, msg.hops + 1, msg.sip, frozenset()), cfg)
    node = replace(node, rt=rt, rreqs=node.rreqs | {key})
    handled = bool(msg.handled)

    def forwarded(flag):
        rt = node.rt
        return Rreq(msg.hops + 1, msg.rreqid, dip, max(rt.sqn(dip), msg.dsn), msg.dsk, oip, msg.osn, ip, flag)

    fwd_rreq = cfg.has("fwd-rreq")
    if not handled and dip == ip:
        sn = own_sn(node, cfg)
        if cfg.amb10 == "10b":
            new = inc_sqn(sn) if msg.dsn == inc_sqn(sn) else sn
        else:
            new = max(sn, msg.dsn)
        node = _set_own_sn(node, new, cfg)
        after = (Broadcast(forwarded(True)),) if fwd_rreq else ()
        return _reply(node, Rrep(0, dip, own_sn(node, cfg), oip, ip), after)
    if (not handled and rt.is_valid(dip) and msg.dsn <= rt.sqn(dip) and rt.sqnf(dip) == KNOWN):
        rt = add_precursors_if_known(rt, dip, {msg.sip})
        rt = add_precursors_if_known(rt, oip, {rt.nhop(dip)})
        node = replace(node, rt=rt)
        after = (Broadcast(forwarded(True)),) if fwd_rreq else ()
        return _reply(node, Rrep(rt.dhops(dip), dip, rt.sqn(dip), oip, ip), after)
    return replace(node, frame=(Broadcast(forwarded(msg.handled)),))


def process_rrep(node: Node, msg: Rrep, cfg: InterpretationConfig) -> Node:
    ip, dip, oip = node.ip, msg.dip, msg.oip
    rt = node.rt
    if dip == ip and cfg.amb5 == "5b":
        return node
    if dip == ip and cfg.amb5 == "5c":
        if oip != ip and rt.is_valid(oip):
            nh = rt.nhop(oip)
            return replace(node, frame=(Unicast(nh, Rrep(msg.hops + 1, dip, msg.dsn, oip, ip),
                                                fail=(LinkBreak(nh),)),))
        return node
    new = _update(rt, RouteEntry(dip, msg.dsn, KNOWN, VALID, msg.hops + 1, msg.sip, frozenset()), cfg,
                  in_rrep=True)
    if cfg.has("fwd-rrep"):
        rt = new
        if oip == ip or not (rt.is_valid(oip) and rt.is_valid(dip)):
            return replace(node, rt=rt)
        out = Rrep(rt.dhops(dip), dip, rt.sqn(dip), oip, ip)
    else:
        if new == rt:
            return node
        rt = new
        if oip == ip or not rt.is_valid(oip):
            return replace(node, rt=rt)
        out = Rrep(msg.hops + 1, dip, msg.dsn, oip, ip)
    nh = rt.nhop(oip)
    rt = add_precursors_if_known(rt, dip, {nh})
    rt = add_precursors_if_known(rt, rt.nhop(dip), {nh})
    if cfg.has("extra-precursor"):
        rt = add_precursors_if_known(rt, oip, {rt.nhop(dip)})
    return replace(node, rt=rt, frame=(Unicast(nh, out, fail=(LinkBreak(nh),)),))


def _rerr_guard(stored: int, rsn: int, variant: str) -> bool:
    if variant in ("8b", "8e"):
        return stored <= rsn
    if variant == "8f":
        return stored < rsn
    return True


def process_rerr(node: Node, msg: Rerr, cfg: InterpretationConfig) -> Node:
    rt = node.rt
    dests = {rip: rsn for rip, rsn in msg.dests
             if rt.is_valid(rip) and rt.nhop(rip) == msg.sip and _rerr_guard(rt.sqn(rip), rsn, cfg.amb8)}
    node, ops = _report_broken(node, dests, cfg)
    return replace(node, frame=ops)
