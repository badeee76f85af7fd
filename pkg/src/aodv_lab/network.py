"""Network semantics: symmetric topology, cast synchronisation and scheduling."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .config import DEFAULT, InterpretationConfig
from .core import Address, Newpkt
from .engine import (
    CONT, RECV, RREQ, SEND, Broadcast, Deliver, Groupcast, Node, Unicast,
    enabled_tasks, initial_node, run_internal, start_task,
)

DEFAULT_BUDGET = 1_000_000


class TransitionError(RuntimeError):
    pass


def edge(a: Address, b: Address) -> tuple:
    if a == b:
        raise ValueError(f"self-loop on {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class NetworkState:
    nodes: tuple  # Node objects in address order
    topology: frozenset = frozenset()  # undirected edges as sorted pairs
    history: frozenset = frozenset()

    def __hash__(self) -> int:
        # states are hashed many times during exploration, so cache it
        try:
            return self._hash
        except AttributeError:
            h = hash((self.nodes, self.topology, self.history))
            object.__setattr__(self, "_hash", h)
            return h

    @property
    def addresses(self) -> tuple:
        return tuple(n.ip for n in self.nodes)

    def node(self, ip: Address) -> Node:
        for n in self.nodes:
            if n.ip == ip:
                return n
        raise KeyError(f"unknown node {ip}")

    def index(self, ip: Address) -> int:
        for i, n in enumerate(self.nodes):
            if n.ip == ip:
                return i
        raise KeyError(f"unknown node {ip}")

    def with_node(self, node: Node) -> "NetworkState":
        i = self.index(node.ip)
        return replace(self, nodes=self.nodes[:i] + (node,) + self.nodes[i + 1:])

    def in_range(self, ip: Address) -> tuple:
        out = []
        for a, b in self.topology:
            if a == ip:
                out.append(b)
            elif b == ip:
                out.append(a)
        return tuple(sorted(out))

    def connected(self, a: Address, b: Address) -> bool:
        return edge(a, b) in self.topology

    def canonical(self) -> tuple:
        return (tuple(n.canonical() for n in self.nodes), tuple(sorted(self.topology)),
                tuple(sorted(self.history)))

    def digest(self) -> str:
        return hashlib.blake2b(repr(self.canonical()).encode(), digest_size=8).hexdigest()


def initial_network(addresses: Iterable[Address], edges: Iterable = (),
                    cfg: InterpretationConfig = DEFAULT) -> NetworkState:
    addrs = sorted(set(addresses))
    es = frozenset(edge(a, b) for a, b in edges)
    for a, b in es:
        if a not in addrs or b not in addrs:
            raise KeyError(f"edge {a}-{b} uses an undeclared node")
    return NetworkState(tuple(initial_node(a, cfg) for a in addrs), es, es)


def connected_star(net: NetworkState, a: Address, b: Address) -> bool:
    """Is there a path from a to b in the current topology?"""
    if a == b:
        return True
    seen, todo = {a}, [a]
    while todo:
        x = todo.pop()
        for y in net.in_range(x):
            if y == b:
                return True
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return False


# labels


@dataclass(frozen=True)
class Label:
    kind: str  # broadcast, groupcast, unicast, tau, deliver, newpkt, connect, disconnect
    src: Address
    receivers: tuple = ()
    msg: object = None
    detail: str = ""

    @property
    def is_cast(self) -> bool:
        return self.kind in ("broadcast", "groupcast", "unicast")

    def text(self) -> str:
        if self.kind == "tau":
            m = self.detail + (":" + self.msg.text() if self.msg is not None else "")
        elif self.msg is not None:
            m = self.msg.text()
        elif self.kind in ("deliver", "newpkt"):
            m = f'"{self.detail}"'
        else:
            m = self.detail or "-"
        return f"{self.kind} {self.src} [{','.join(self.receivers)}] {m}"


# choices: internal (kind, ip[, dip]) or environment events


def internal_choices(net: NetworkState) -> list:
    out = []
    for n in net.nodes:
        for t in enabled_tasks(n):
            out.append((t[0], n.ip) + t[1:])
    return out


def quiescent(net: NetworkState) -> bool:
    return not any(enabled_tasks(n) for n in net.nodes)


def _enqueue(net: NetworkState, receivers: Iterable[Address], msg) -> NetworkState:
    nodes = list(net.nodes)
    targets = set(receivers)
    for i, n in enumerate(nodes):
        if n.ip in targets:
            nodes[i] = replace(n, msgq=n.msgq + (msg,))
    return replace(net, nodes=tuple(nodes))


def _perform(net: NetworkState, node: Node, cfg: InterpretationConfig) -> tuple[NetworkState, Label]:
    """Execute the observable operation at the head of node's frame."""
    op, rest = node.frame[0], node.frame[1:]
    ip = node.ip
    if isinstance(op, Broadcast):
        rs = net.in_range(ip)
        label = Label("broadcast", ip, rs, op.msg)
        node = replace(node, frame=rest)
    elif isinstance(op, Groupcast):
        dests = set(op.dests)
        rs = tuple(r for r in net.in_range(ip) if r in dests)
        label = Label("groupcast", ip, rs, op.msg, detail=",".join(op.dests))
        node = replace(node, frame=rest)
    elif isinstance(op, Unicast):
        if op.dest is not None and net.connected(ip, op.dest):
            rs = (op.dest,)
            label = Label("unicast", ip, rs, op.msg)
            node = replace(node, frame=op.ok + rest)
        else:
            rs = ()
            label = Label("tau", ip, (), op.msg, detail=f"unicast-failed:{op.dest}")
            node = replace(node, frame=op.fail + rest)
    elif isinstance(op, Deliver):
        rs = ()
        label = Label("deliver", ip, (), None, detail=op.data)
        node = replace(node, frame=rest)
    else:
        raise TransitionError(f"not an observable operation: {op!r}")
    node = run_internal(node, cfg)
    net = net.with_node(node)
    if rs and label.kind != "tau":
        net = _enqueue(net, rs, op.msg)
    return net, label


def step(net: NetworkState, choice: tuple, cfg: InterpretationConfig) -> tuple[NetworkState, Label]:
    """Fire one transition: an internal choice or an environment event."""
    kind = choice[0]
    if kind == "connect":
        a, b = choice[1], choice[2]
        e = edge(a, b)
        net.node(a), net.node(b)
        return (replace(net, topology=net.topology | {e}, history=net.history | {e}),
                Label("connect", a, (b,)))
    if kind == "disconnect":
        a, b = choice[1], choice[2]
        e = edge(a, b)
        return replace(net, topology=net.topology - {e}), Label("disconnect", a, (b,))
    if kind == "newpkt":
        ip, data, dip = choice[1], choice[2], choice[3]
        node = net.node(ip)
        net.node(dip)
        return (net.with_node(replace(node, msgq=node.msgq + (Newpkt(data, dip),))),
                Label("newpkt", ip, (dip,), detail=data))
    ip = choice[1]
    node = net.node(ip)
    if kind == CONT:
        if node.idle:
            raise TransitionError(f"node {ip} has nothing to continue")
        return _perform(net, node, cfg)
    task = (kind,) + tuple(choice[2:])
    if task not in enabled_tasks(node):
        raise TransitionError(f"transition {choice} is not enabled")
    node, msg = start_task(node, task, cfg)
    node = run_internal(node, cfg)
    if node.frame:
        return _perform(net.with_node(node), node, cfg)
    if kind == RECV:
        return net.with_node(node), Label("tau", ip, (), msg, detail="handle")
    return net.with_node(node), Label("tau", ip, (), None, detail=f"{kind}:{task[1]}")


# schedulers


class FairScheduler:
    """Round-robin over nodes in address order, rotating over each node's task classes."""

    def __init__(self):
        self.next_node = 0
        self.cursor: dict = {}

    def choose(self, net: NetworkState, choices: list) -> tuple:
        addrs = net.addresses
        by_node: dict = {}
        for c in choices:
            by_node.setdefault(c[1], []).append(c)
        n = len(addrs)
        for k in range(n):
            i = (self.next_node + k) % n
            ip = addrs[i]
            if ip not in by_node:
                continue
            self.next_node = (i + 1) % n
            opts = by_node[ip]
            if len(opts) == 1:
                chosen = opts[0]
            else:
                order = _class_order(addrs)
                cur = self.cursor.get(ip, 0)
                ranked = sorted(opts, key=lambda c: (order.index(_task_class(c)) - cur) % len(order))
                chosen = ranked[0]
            if chosen[0] != CONT:
                order = _class_order(addrs)
                self.cursor[ip] = (order.index(_task_class(chosen)) + 1) % len(order)
            return chosen
        raise TransitionError("no enabled transition")


def _task_class(choice: tuple) -> tuple:
    return (choice[0],) + tuple(choice[2:])


_ORDER_CACHE: dict = {}


def _class_order(addrs: tuple) -> list:
    order = _ORDER_CACHE.get(addrs)
    if order is None:
        order = [(RECV,)] + [(SEND, a) for a in addrs] + [(RREQ, a) for a in addrs]
        _ORDER_CACHE[addrs] = order
    return order


class RandomScheduler:
    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def choose(self, net: NetworkState, choices: list) -> tuple:
        return choices[self.rng.randrange(len(choices))]


def make_scheduler(policy: str = "fair", seed: int = 0):
    if policy in ("fair", "fair-roundrobin"):
        return FairScheduler()
    if policy in ("random", "seeded-random"):
        return RandomScheduler(seed)
    raise ValueError(f"unknown policy {policy!r}")


# traces


@dataclass
class Step:
    choice: tuple
    label: Label
    state: NetworkState


@dataclass
class Trace:
    initial: NetworkState
    steps: list = field(default_factory=list)

    @property
    def final(self) -> NetworkState:
        return self.steps[-1].state if self.steps else self.initial

    def states(self) -> list:
        return [self.initial] + [s.state for s in self.steps]

    def lines(self) -> list:
        return [f"{i} {s.label.text()} {s.state.digest()}" for i, s in enumerate(self.steps)]

    def choices(self) -> list:
        return [s.choice for s in self.steps]


def replay(initial: NetworkState, choices: Iterable[tuple], cfg: InterpretationConfig) -> Trace:
    trace = Trace(initial)
    net = initial
    for c in choices:
        net, label = step(net, c, cfg)
        trace.steps.append(Step(c, label, net))
    return trace


QUIESCENT = "quiescent"
BUDGET = "budget-exhausted"


def run_until_quiescent(trace: Trace, cfg: InterpretationConfig, scheduler, budget: int,
                        observer=None) -> str:
    """Extend trace with scheduler-chosen transitions until nothing is enabled."""
    net = trace.final
    used = 0
    while True:
        choices = internal_choices(net)
        if not choices:
            return QUIESCENT
        if used >= budget:
            return BUDGET
        c = scheduler.choose(net, choices)
        net, label = step(net, c, cfg)
        trace.steps.append(Step(c, label, net))
        used += 1
        if observer is not None:
            observer(trace)
