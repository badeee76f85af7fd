from dataclasses import replace

from aodv_lab.config import DEFAULT
from aodv_lab.core import KNOWN, UNKNOWN, VALID, INVALID, RouteEntry, RoutingTable
from aodv_lab.invariants import (
    check_route_correctness, check_state, check_state_invariants, check_trace, check_transition_monotone,
    detect_routing_loop, loop_violation,
)
from aodv_lab.library import load_builtin
from aodv_lab.network import initial_network
from aodv_lab.scenario import run_scenario


def entry(dip, dsn, dsk, flag, hops, nhip):
    return RouteEntry(dip, dsn, dsk, flag, hops, nhip, frozenset())


def with_tables(net, **tables):
    for ip, entries in tables.items():
        net = net.with_node(replace(net.node(ip), rt=RoutingTable(entries)))
    return net


def triangle():
    return initial_network("asd", [("a", "s"), ("a", "d"), ("s", "d")])


def test_two_node_loop_detected():
    net = with_tables(triangle(),
                      a=[entry("d", 2, KNOWN, VALID, 2, "s"), entry("s", 1, KNOWN, VALID, 1, "s")],
                      s=[entry("d", 2, KNOWN, VALID, 2, "a"), entry("a", 1, KNOWN, VALID, 1, "a")])
    dip, cycle = detect_routing_loop(net)
    assert dip == "d" and sorted(cycle) == ["a", "s"]
    v = loop_violation(net)[0]
    assert v.inv == "routing-loop" and "a->s->a" in v.detail
    assert any(x.inv == "quality-chain" for x in check_state_invariants(net))


def test_invalid_entries_do_not_form_loops():
    net = with_tables(triangle(),
                      a=[entry("d", 2, KNOWN, INVALID, 2, "s"), entry("s", 1, KNOWN, VALID, 1, "s")],
                      s=[entry("d", 2, KNOWN, VALID, 2, "a"), entry("a", 1, KNOWN, VALID, 1, "a")])
    assert detect_routing_loop(net) is None


def test_clean_state_has_no_violations():
    net = with_tables(triangle(),
                      s=[entry("d", 2, KNOWN, VALID, 2, "a"), entry("a", 1, KNOWN, VALID, 1, "a")],
                      a=[entry("d", 2, KNOWN, VALID, 1, "d")])
    assert check_state(net, DEFAULT) == []


def test_state_invariant_violations():
    net = with_tables(triangle(),
                      s=[entry("d", 3, KNOWN, VALID, 2, "a"),
                         entry("a", 2, UNKNOWN, VALID, 2, "d")],
                      a=[entry("d", 2, KNOWN, VALID, 1, "d")])
    kinds = {v.inv for v in check_state_invariants(net)}
    assert {"next-hop-nsqn", "unknown-sqn-one-hop", "next-hop-knows-dest"} <= kinds


def test_route_correctness_uses_history():
    net = with_tables(initial_network("asd", [("s", "a")]),
                      s=[entry("d", 2, KNOWN, VALID, 2, "a")])
    assert [v.inv for v in check_route_correctness(net)] == ["route-correct"]
    net = replace(net, history=net.history | {("a", "d")})
    assert check_route_correctness(net) == []


def test_monotone_checks():
    before = with_tables(triangle(), s=[entry("d", 3, KNOWN, VALID, 2, "a")])
    after = with_tables(triangle(), s=[entry("d", 2, KNOWN, VALID, 1, "d")])
    kinds = {v.inv for v in check_transition_monotone(before, after, DEFAULT)}
    assert kinds == {"sqn-monotone", "quality-monotone"}
    gone = with_tables(triangle(), s=[])
    assert [v.inv for v in check_transition_monotone(before, gone, DEFAULT)] == ["known-monotone"]


def test_default_builtin_trace_is_clean():
    report = run_scenario(load_builtin("fig8"), DEFAULT)
    assert check_trace(report.trace, DEFAULT) == []
