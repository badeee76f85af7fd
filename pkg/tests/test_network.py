import re

import pytest

from aodv_lab.config import DEFAULT, parse_config
from aodv_lab.core import Rerr, Rrep, Rreq
from aodv_lab.engine import enabled_tasks
from aodv_lab.monitors import fairness_certificate
from aodv_lab.network import (
    QUIESCENT, TransitionError, Trace, connected_star, initial_network, internal_choices, make_scheduler,
    quiescent, replay, run_until_quiescent, step,
)

LINE = re.compile(r"^\d+ [a-z]+ \w+ \[[\w,]*\] \S.* [0-9a-f]{16}$")


def line_net():
    return initial_network("sad", [("s", "a"), ("a", "d")])


def run(net, cfg=DEFAULT, policy="fair", seed=0):
    trace = Trace(net)
    end = run_until_quiescent(trace, cfg, make_scheduler(policy, seed), 10_000)
    return trace, end


def test_initial_network():
    net = line_net()
    assert net.addresses == ("a", "d", "s")
    assert net.in_range("a") == ("d", "s")
    assert quiescent(net)
    assert all(n.sn == 1 for n in net.nodes)
    with pytest.raises(KeyError):
        initial_network("ab", [("a", "z")])


def test_injection_enables_receive_then_request():
    net, label = step(line_net(), ("newpkt", "s", "hello", "d"), DEFAULT)
    assert label.text() == 'newpkt s [d] "hello"'
    assert internal_choices(net) == [("recv", "s")]
    net, label = step(net, ("recv", "s"), DEFAULT)
    assert label.text() == 'tau s [] handle:NEWPKT{"hello",d}'
    assert enabled_tasks(net.node("s")) == [("rreq", "d")]
    net, label = step(net, ("rreq", "s", "d"), DEFAULT)
    assert label.kind == "broadcast" and label.receivers == ("a",)
    assert label.msg == Rreq(0, 1, "d", 0, "unk", "s", 2, "s")
    assert label.msg.text() == "RREQ{0,1,d,0,unk,s,2,s}"


def test_route_discovery_on_a_line():
    net, _ = step(line_net(), ("newpkt", "s", "hello", "d"), DEFAULT)
    trace, end = run(net)
    assert end == QUIESCENT
    s = trace.final.node("s")
    e = s.rt.get("d")
    assert (e.dsn, e.hops, e.nhip, e.flag) == (1, 2, "a", "val")
    assert any(st.label.kind == "deliver" and st.label.src == "d" for st in trace.steps)
    assert any(isinstance(st.label.msg, Rrep) for st in trace.steps)
    assert not trace.final.node("s").store.queues


def test_trace_line_format():
    net, _ = step(line_net(), ("newpkt", "s", "hello", "d"), DEFAULT)
    trace, _ = run(net)
    lines = trace.lines()
    assert lines and all(LINE.match(x) for x in lines), lines


def test_failed_unicast_reports_route_error():
    net, _ = step(line_net(), ("newpkt", "s", "p1", "d"), DEFAULT)
    trace, _ = run(net)
    net, _ = step(trace.final, ("disconnect", "a", "d"), DEFAULT)
    net, _ = step(net, ("newpkt", "s", "p2", "d"), DEFAULT)
    trace, _ = run(net)
    labels = [st.label for st in trace.steps]
    assert any(lb.kind == "tau" and lb.detail == "unicast-failed:d" for lb in labels)
    rerrs = [lb for lb in labels if isinstance(lb.msg, Rerr) and lb.kind != "tau"]
    assert rerrs and rerrs[0].src == "a" and rerrs[0].msg.dests == (("d", 2),)
    assert trace.final.node("s").rt.get("d").flag == "inval"


def test_connect_records_history():
    net = line_net()
    net, _ = step(net, ("connect", "s", "d"), DEFAULT)
    net, _ = step(net, ("disconnect", "s", "d"), DEFAULT)
    assert ("d", "s") in net.history and ("d", "s") not in net.topology
    assert connected_star(net, "s", "d")
    net, _ = step(net, ("disconnect", "a", "d"), DEFAULT)
    assert not connected_star(net, "s", "d")


def test_disabled_transition_rejected():
    with pytest.raises(TransitionError):
        step(line_net(), ("recv", "s"), DEFAULT)
    with pytest.raises(TransitionError):
        step(line_net(), ("cont", "s"), DEFAULT)


def test_replay_reproduces_trace():
    net, _ = step(line_net(), ("newpkt", "s", "hello", "d"), DEFAULT)
    trace, _ = run(net, policy="random", seed=7)
    again = replay(trace.initial, trace.choices(), DEFAULT)
    assert again.lines() == trace.lines()


def test_random_scheduler_is_seeded():
    net = initial_network("abcd", [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")])
    for ip, d in (("a", "c"), ("b", "d"), ("c", "a")):
        net, _ = step(net, ("newpkt", ip, f"to-{d}", d), DEFAULT)
    t1, _ = run(net, policy="random", seed=3)
    t2, _ = run(net, policy="random", seed=3)
    assert t1.lines() == t2.lines()


def test_fair_scheduler_meets_its_bound():
    net = initial_network("abcd", [("a", "b"), ("b", "c"), ("c", "d")])
    for ip, d in (("a", "d"), ("d", "a"), ("b", "d")):
        net, _ = step(net, ("newpkt", ip, f"to-{d}", d), DEFAULT)
    trace, end = run(net)
    assert end == QUIESCENT
    assert fairness_certificate(trace) is None


def test_state_hash_ignores_history_of_construction():
    a, _ = step(line_net(), ("newpkt", "s", "x", "d"), DEFAULT)
    b, _ = step(line_net(), ("newpkt", "s", "x", "d"), DEFAULT)
    assert a == b and hash(a) == hash(b) and a.digest() == b.digest()
    c, _ = step(line_net(), ("newpkt", "s", "y", "d"), DEFAULT)
    assert c != a and c.digest() != a.digest()


def test_skip_rreqid_drops_the_identifier():
    cfg = parse_config("improve=skip-rreqid")
    net, _ = step(line_net(), ("newpkt", "s", "p", "d"), cfg)
    net, _ = step(net, ("recv", "s"), cfg)
    _, label = step(net, ("rreq", "s", "d"), cfg)
    assert label.msg.rreqid is None
    assert label.msg.text() == "RREQ{0,d,0,unk,s,2,s}"


def test_forwarded_requests_carry_handled_flag():
    cfg = parse_config("improve=fwd-rreq")
    net, _ = step(line_net(), ("newpkt", "s", "p", "d"), cfg)
    net, _ = step(net, ("recv", "s"), cfg)
    _, label = step(net, ("rreq", "s", "d"), cfg)
    assert label.msg.handled is False
