"""A small line-oriented language for scripted network scenarios.

    nodes s a d
    connect s a              # leading connects form the initial topology
    inject s d "hello"
    drain
    assert route s d valid hops=2 nhop=a
    expect route-discovery violated unless improve=fwd-rrep

Besides the scripted statements there are ``fire`` and ``finish`` to pin down
individual protocol steps, and ``free { ... }`` / ``ordered { ... }`` blocks
whose events the explorer may place anywhere (a scripted run fires them in the
listed order).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .config import CHOICES, DEFAULT, IMPROVEMENTS, InterpretationConfig
from .core import KNOWN, UNKNOWN
from .engine import CONT, RECV, RREQ, SEND, enabled_tasks
from .invariants import check_step, detect_routing_loop
from .monitors import PROPERTIES, SATISFIED, VACUOUS, VIOLATED, INCONCLUSIVE, evaluate
from .network import (
    BUDGET, DEFAULT_BUDGET, QUIESCENT, Step, Trace, initial_network, internal_choices,
    make_scheduler, quiescent, step,
)


class ScenarioError(ValueError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line} col {col}: {message}")
        self.line, self.col, self.message = line, col, message


# statements


@dataclass(frozen=True)
class Guard:
    """``if``/``unless`` a conjunction of key=value terms; a value may list alternatives with ``|``."""

    negate: bool
    terms: tuple  # ((key, (value, ...)), ...)

    def holds(self, cfg: InterpretationConfig) -> bool:
        hit = all(any(cfg.matches(k, v) for v in vs) for k, vs in self.terms)
        return hit != self.negate

    def text(self) -> str:
        body = ",".join(f"{k}={'|'.join(vs)}" for k, vs in self.terms)
        return f"{'unless' if self.negate else 'if'} {body}"


@dataclass(frozen=True)
class Event:
    kind: str  # connect, disconnect, inject
    args: tuple

    def choice(self) -> tuple:
        return (self.kind if self.kind != "inject" else "newpkt",) + self.args_for_step()

    def args_for_step(self) -> tuple:
        if self.kind == "inject":
            n, dip, data = self.args
            return (n, data, dip)
        return self.args

    def text(self) -> str:
        if self.kind == "inject":
            n, dip, data = self.args
            return f'inject {n} {dip} "{data}"'
        return f"{self.kind} {self.args[0]} {self.args[1]}"


@dataclass(frozen=True)
class Block:
    kind: str  # free or ordered
    events: tuple

    def text(self) -> str:
        inner = "\n".join("  " + e.text() for e in self.events)
        return f"{self.kind} {{\n{inner}\n}}"


@dataclass(frozen=True)
class Run:
    kind: str  # step or drain
    count: int = 0

    def text(self) -> str:
        return "drain" if self.kind == "drain" else f"step {self.count}"


@dataclass(frozen=True)
class Fire:
    node: str
    task: tuple = ()  # (), ("recv",), ("send", d) or ("rreq", d)
    line: int = field(default=0, compare=False)

    def text(self) -> str:
        return " ".join(("fire", self.node) + self.task)


@dataclass(frozen=True)
class Finish:
    node: str

    def text(self) -> str:
        return f"finish {self.node}"


@dataclass(frozen=True)
class Assert:
    kind: str  # loop-free, loop, route, no-valid-route, delivered, not-delivered
    args: tuple = ()
    options: tuple = ()  # sorted (key, value) pairs for route assertions
    guard: Optional[Guard] = None

    def text(self) -> str:
        parts = ["assert", self.kind]
        if self.kind in ("delivered", "not-delivered"):
            parts += [self.args[0], f'"{self.args[1]}"']
        else:
            parts += list(self.args)
        parts += [f"{k}={v}" if v is not None else k for k, v in self.options]
        if self.guard:
            parts.append(self.guard.text())
        return " ".join(parts)


@dataclass(frozen=True)
class Expect:
    prop: str
    outcome: str
    oip: Optional[str] = None
    dip: Optional[str] = None
    data: Optional[str] = None
    guard: Optional[Guard] = None

    def text(self) -> str:
        parts = ["expect", self.prop, self.outcome]
        if self.oip is not None:
            parts += [self.oip, self.dip]
        if self.data is not None:
            parts.append(f'"{self.data}"')
        if self.guard:
            parts.append(self.guard.text())
        return " ".join(parts)


@dataclass(frozen=True)
class Scenario:
    nodes: tuple
    edges: tuple = ()
    statements: tuple = ()

    def text(self) -> str:
        lines = ["nodes " + " ".join(self.nodes)]
        lines += [f"connect {a} {b}" for a, b in self.edges]
        if self.statements and isinstance(self.statements[0], Event) and self.statements[0].kind == "connect":
            # keep a scripted connect from being read back as initial topology
            lines.append("step 0")
        lines += [s.text() for s in self.statements]
        return "\n".join(lines) + "\n"


# parsing

_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|[{};]|[^\s{};"]+|"')
_ID = re.compile(r"[A-Za-z0-9_.-]+$")
OUTCOMES = (SATISFIED, VIOLATED, VACUOUS, INCONCLUSIVE)
ROUTE_OPTIONS = ("sqn", "hops", "nhop")


class _Tokens:
    def __init__(self, text: str):
        self.items = []  # (token, line, col)
        for ln, raw in enumerate(text.splitlines(), 1):
            line = _strip_comment(raw)
            for m in _TOKEN.finditer(line):
                if m.group(0) == '"':
                    raise ScenarioError(ln, m.start() + 1, "unterminated string")
                self.items.append((m.group(0), ln, m.start() + 1))
            self.items.append(("\n", ln, len(line) + 1))
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else ("", 0, 0)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.items)


def _strip_comment(raw: str) -> str:
    inside = False
    for i, ch in enumerate(raw):
        if ch == '"':
            inside = not inside
        elif ch == "#" and not inside:
            return raw[:i]
    return raw


def parse_scenario(text: str) -> Scenario:
    toks = _Tokens(text)
    nodes: list = []
    edges: list = []
    stmts: list = []
    declared: set = set()

    def error(tok, msg):
        raise ScenarioError(tok[1], tok[2], msg)

    def ident(tok, declared_only=True):
        if tok[0] in ("\n", "{", "}", ";", "") or tok[0].startswith('"'):
            error(tok, f"expected a node name, got {tok[0]!r}" if tok[0] != "\n" else "expected a node name")
        if not _ID.match(tok[0]):
            error(tok, f"bad node name {tok[0]!r}")
        if declared_only and tok[0] not in declared:
            error(tok, f"undeclared node {tok[0]!r}")
        return tok[0]

    def quoted(tok):
        if not tok[0].startswith('"'):
            error(tok, f"expected a quoted payload, got {tok[0]!r}")
        return tok[0][1:-1].replace('\\"', '"')

    def nat(tok, what):
        if not tok[0].isdigit():
            error(tok, f"malformed {what} {tok[0]!r}")
        return int(tok[0])

    def end_of_statement(inside_block=False):
        tok = toks.peek()
        if tok[0] == "\n" or tok[0] == ";" or (inside_block and tok[0] == "}"):
            if tok[0] != "}":
                toks.next()
            return
        error(tok, f"unexpected {tok[0]!r}")

    def guard():
        tok = toks.peek()
        if tok[0] not in ("if", "unless"):
            return None
        toks.next()
        kv = toks.next()
        terms = []
        for term in kv[0].split(","):
            if "=" not in term:
                error(kv, f"expected key=value after {tok[0]}, got {kv[0]!r}")
            k, v = term.split("=", 1)
            vs = tuple(v.split("|"))
            allowed = IMPROVEMENTS if k == "improve" else CHOICES.get(k)
            if allowed is None:
                error(kv, f"unknown key {k!r}")
            for x in vs:
                if x not in allowed:
                    error(kv, f"invalid value {x!r} for {k}")
            terms.append((k, vs))
        return Guard(tok[0] == "unless", tuple(terms))

    def event(kw, inside_block=False):
        if kw[0] in ("connect", "disconnect"):
            a, b = ident(toks.next()), ident(toks.next())
            if a == b:
                error(kw, f"{kw[0]} needs two different nodes")
            e = Event(kw[0], (a, b))
        elif kw[0] == "inject":
            n, dip = ident(toks.next()), ident(toks.next())
            data = quoted(toks.next())
            e = Event("inject", (n, dip, data))
        else:
            error(kw, f"expected an event, got {kw[0]!r}")
        end_of_statement(inside_block)
        return e

    seen_other = False
    while not toks.at_end():
        kw = toks.next()
        word = kw[0]
        if word == "\n" or word == ";":
            continue
        if word == "nodes":
            if nodes:
                error(kw, "nodes declared twice")
            while toks.peek()[0] not in ("\n", ";", ""):
                n = ident(toks.next(), declared_only=False)
                if n in declared:
                    error(toks.items[toks.pos - 1], f"node {n!r} declared twice")
                declared.add(n)
                nodes.append(n)
            if not nodes:
                error(kw, "nodes needs at least one name")
            continue
        if not nodes:
            error(kw, "the scenario must start with a nodes declaration")
        if word in ("connect", "disconnect", "inject"):
            e = event(kw)
            if word == "connect" and not seen_other:
                edges.append(e.args)
            else:
                stmts.append(e)
            seen_other = True if word != "connect" else seen_other
            continue
        seen_other = True
        if word in ("free", "ordered"):
            if toks.next()[0] != "{":
                error(kw, f"expected '{{' after {word}")
            events = []
            while True:
                tok = toks.next()
                if tok[0] in ("\n", ";"):
                    continue
                if tok[0] == "}":
                    break
                if tok[0] == "":
                    error(kw, f"unterminated {word} block")
                events.append(event(tok, inside_block=True))
            stmts.append(Block(word, tuple(events)))
            end_of_statement()
        elif word == "step":
            stmts.append(Run("step", nat(toks.next(), "step count")))
            end_of_statement()
        elif word == "drain":
            stmts.append(Run("drain"))
            end_of_statement()
        elif word == "fire":
            n = ident(toks.next())
            tok = toks.peek()
            task: tuple = ()
            if tok[0] == "recv":
                toks.next()
                task = (RECV,)
            elif tok[0] in ("send", "rreq"):
                toks.next()
                task = (tok[0], ident(toks.next()))
            stmts.append(Fire(n, task, kw[1]))
            end_of_statement()
        elif word == "finish":
            stmts.append(Finish(ident(toks.next())))
            end_of_statement()
        elif word == "assert":
            stmts.append(_parse_assert(toks, ident, quoted, nat, error, guard))
            end_of_statement()
        elif word == "expect":
            prop = toks.next()
            if prop[0] not in PROPERTIES:
                error(prop, f"unknown property {prop[0]!r}")
            outcome = toks.next()
            if outcome[0] not in OUTCOMES:
                error(outcome, f"unknown outcome {outcome[0]!r}")
            oip = dip = data = None
            if toks.peek()[0] not in ("\n", ";", "if", "unless", ""):
                oip, dip = ident(toks.next()), ident(toks.next())
                if toks.peek()[0].startswith('"'):
                    data = quoted(toks.next())
            stmts.append(Expect(prop[0], outcome[0], oip, dip, data, guard()))
            end_of_statement()
        else:
            error(kw, f"unknown statement {word!r}")
    if not nodes:
        raise ScenarioError(1, 1, "empty scenario")
    # a lone "step 0" only separates scripted connects from the initial topology
    stmts = [s for i, s in enumerate(stmts)
             if not (isinstance(s, Run) and s.kind == "step" and s.count == 0 and i == 0)]
    return Scenario(tuple(nodes), tuple(edges), tuple(stmts))


def _parse_assert(toks, ident, quoted, nat, error, guard) -> Assert:
    kind = toks.next()
    k = kind[0]
    if k == "loop-free":
        return Assert("loop-free", (), (), guard())
    if k == "loop":
        dip = ident(toks.next())
        cycle = []
        while toks.peek()[0] not in ("\n", ";", "if", "unless", ""):
            cycle.append(ident(toks.next()))
        if len(cycle) < 2:
            error(kind, "a loop needs at least two nodes")
        return Assert("loop", (dip,) + tuple(sorted(cycle)), (), guard())
    if k == "no-valid-route":
        return Assert(k, (ident(toks.next()), ident(toks.next())), (), guard())
    if k in ("delivered", "not-delivered"):
        return Assert(k, (ident(toks.next()), quoted(toks.next())), (), guard())
    if k == "route":
        a, b = ident(toks.next()), ident(toks.next())
        status = toks.next()
        if status[0] not in ("valid", "invalid"):
            error(status, f"expected valid or invalid, got {status[0]!r}")
        opts = []
        while toks.peek()[0] not in ("\n", ";", "if", "unless", ""):
            tok = toks.next()
            if tok[0] in (KNOWN, UNKNOWN):
                opts.append((tok[0], None))
                continue
            if "=" not in tok[0]:
                error(tok, f"expected key=value, got {tok[0]!r}")
            key, val = tok[0].split("=", 1)
            if key not in ROUTE_OPTIONS:
                error(tok, f"unknown route option {key!r}")
            if key in ("sqn", "hops"):
                if not val.isdigit():
                    error(tok, f"malformed {key} {val!r}")
            else:
                ident((val, tok[1], tok[2] + len(key) + 1))
            opts.append((key, val))
        return Assert("route", (a, b, status[0]), tuple(sorted(opts, key=lambda kv: kv[0])), guard())
    error(kind, f"unknown assertion {k!r}")


# running


@dataclass
class Outcome:
    text: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.text}" + (f": {self.detail}" if self.detail else "")


@dataclass
class Report:
    scenario: Scenario
    cfg: InterpretationConfig
    trace: Trace
    end: str
    outcomes: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    halted: str = ""  # why the run stopped early, when that counts as a failure
    note: str = ""  # why the run stopped early, when the scenario expects it

    @property
    def ok(self) -> bool:
        return (not self.halted and all(o.ok for o in self.outcomes) and not self.violations
                and all(v.outcome != VIOLATED for v in self.verdicts))

    @property
    def final(self):
        return self.trace.final

    def failures(self) -> list:
        out = [o.line() for o in self.outcomes if not o.ok]
        out += [v.text() for v in self.violations]
        out += [v.text() for v in self.verdicts if v.outcome == VIOLATED]
        if self.halted:
            out.append(self.halted)
        return out


def check_assertion(a: Assert, trace: Trace, first_loop) -> Outcome:
    net = trace.final
    if a.kind == "loop-free":
        if first_loop is None:
            return Outcome(a.text(), True)
        i, (dip, cycle) = first_loop
        return Outcome(a.text(), False, f"step {i}: cycle {'->'.join(cycle + cycle[:1])} for {dip}")
    if a.kind == "loop":
        dip, nodes = a.args[0], a.args[1:]
        if first_loop is None:
            return Outcome(a.text(), False, "no routing loop occurred")
        i, (found, cycle) = first_loop
        ok = found == dip and tuple(sorted(cycle)) == nodes
        return Outcome(a.text(), ok, "" if ok else f"step {i}: cycle {'->'.join(cycle + cycle[:1])} for {found}")
    if a.kind == "no-valid-route":
        n, d = a.args
        e = net.node(n).rt.get(d)
        ok = e is None or e.flag != "val"
        return Outcome(a.text(), ok, "" if ok else f"{n} has {e.text()}")
    if a.kind in ("delivered", "not-delivered"):
        n, data = a.args
        hit = any(s.label.kind == "deliver" and s.label.src == n and s.label.detail == data
                  for s in trace.steps)
        ok = hit if a.kind == "delivered" else not hit
        return Outcome(a.text(), ok, "" if ok else ("never delivered" if a.kind == "delivered" else "delivered"))
    if a.kind == "route":
        n, d, status = a.args
        e = net.node(n).rt.get(d)
        if e is None:
            return Outcome(a.text(), False, f"{n} has no entry for {d}")
        want = "val" if status == "valid" else "inval"
        problems = []
        if e.flag != want:
            problems.append("flag")
        for k, v in a.options:
            if k == "sqn" and e.dsn != int(v):
                problems.append(k)
            elif k == "hops" and e.hops != int(v):
                problems.append(k)
            elif k == "nhop" and e.nhip != v:
                problems.append(k)
            elif k in (KNOWN, UNKNOWN) and e.dsk != k:
                problems.append("dsk")
        return Outcome(a.text(), not problems, f"{n} has {e.text()}" if problems else "")
    raise ValueError(a.kind)


def _expectation(ex: Expect, trace: Trace, end: str) -> Outcome:
    filters = {k: v for k, v in (("oip", ex.oip), ("dip", ex.dip), ("data", ex.data)) if v is not None}
    v = evaluate(ex.prop, trace, end, **filters)
    return Outcome(ex.text(), v.outcome == ex.outcome, "" if v.outcome == ex.outcome else f"got {v.text()}")


def _fire_choice(net, f: Fire) -> tuple:
    node = net.node(f.node)
    tasks = enabled_tasks(node)
    if not f.task:
        if len(tasks) != 1:
            raise ScenarioError(f.line, 1, f"fire {f.node}: {len(tasks)} transitions enabled, name one")
        t = tasks[0]
    else:
        t = f.task
        if t not in tasks:
            raise ScenarioError(f.line, 1, f"{f.text()}: not enabled (enabled: {tasks})")
    return (t[0], f.node) + tuple(t[1:])


def run_scenario(scn: Scenario, cfg: InterpretationConfig = DEFAULT, *, policy: str = "fair",
                 seed: int = 0, budget: int = DEFAULT_BUDGET, checks: Optional[str] = None,
                 monitors=(), halt_on_violation: bool = True) -> Report:
    net = initial_network(scn.nodes, scn.edges, cfg)
    trace = Trace(net)
    sched = make_scheduler(policy, seed)
    report = Report(scn, cfg, trace, QUIESCENT)
    loop_asserts = [s for s in scn.statements if isinstance(s, Assert) and s.kind in ("loop-free", "loop")
                    and (s.guard is None or s.guard.holds(cfg))]
    watch_loops = checks in ("all", "loops") or bool(loop_asserts)
    loop_expected = any(s.kind == "loop" for s in loop_asserts)
    state = {"first_loop": None, "used": 0}

    def observe(i: int) -> bool:
        """Check step i; returns True when the run must stop."""
        s = trace.steps[i]
        before = trace.steps[i - 1].state if i > 0 else trace.initial
        if watch_loops and state["first_loop"] is None:
            found = detect_routing_loop(s.state)
            if found is not None:
                state["first_loop"] = (i, found)
        if checks:
            vs = [v.at(i) for v in check_step(before, s.state, s.label, cfg, checks)]
            report.violations.extend(vs)
            if vs and halt_on_violation:
                report.halted = f"halted at step {i} after a violation"
                return True
        if state["first_loop"] is not None:
            i0, (dip, cycle) = state["first_loop"]
            why = f"halted at step {i0}: routing loop {'->'.join(cycle + cycle[:1])} for {dip}"
            if loop_expected:
                report.note = why
            else:
                report.halted = why
            return True
        return False

    def fire(choice) -> bool:
        nonlocal net
        net, label = step(net, choice, cfg)
        trace.steps.append(Step(choice, label, net))
        state["used"] += 1
        return observe(len(trace.steps) - 1)

    stopped = False
    for st in scn.statements:
        if stopped:
            break
        if isinstance(st, Event):
            stopped = fire(st.choice())
        elif isinstance(st, Block):
            for e in st.events:
                if fire(e.choice()):
                    stopped = True
                    break
        elif isinstance(st, Run):
            limit = st.count if st.kind == "step" else None
            n = 0
            while limit is None or n < limit:
                choices = internal_choices(net)
                if not choices:
                    break
                if state["used"] >= budget:
                    report.end = BUDGET
                    report.halted = f"budget of {budget} transitions exhausted"
                    stopped = True
                    break
                if fire(sched.choose(net, choices)):
                    stopped = True
                    break
                n += 1
        elif isinstance(st, Fire):
            stopped = fire(_fire_choice(net, st))
        elif isinstance(st, Finish):
            while not net.node(st.node).idle and not stopped:
                stopped = fire((CONT, st.node))
        elif isinstance(st, Assert):
            if st.guard is None or st.guard.holds(cfg):
                report.outcomes.append(check_assertion(st, trace, state["first_loop"]))
        elif isinstance(st, Expect):
            if st.guard is None or st.guard.holds(cfg):
                # judged on the run so far, which is complete when nothing is enabled
                prefix = Trace(trace.initial, list(trace.steps))
                report.outcomes.append(_expectation(st, prefix, QUIESCENT if quiescent(net) else BUDGET))
    if stopped and report.end != BUDGET:
        report.end = "halted"
    elif not quiescent(net) and report.end != BUDGET:
        report.end = "not-quiescent"
    end = QUIESCENT if report.end == QUIESCENT else BUDGET
    if stopped:
        for st in loop_asserts:
            if not any(o.text == st.text() for o in report.outcomes):
                report.outcomes.append(check_assertion(st, trace, state["first_loop"]))
    for prop in monitors:
        report.verdicts.append(evaluate(prop, trace, end))
    return report
