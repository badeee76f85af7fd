import random
from collections import deque

from hypothesis import given, settings, strategies as st

from aodv_lab.config import DEFAULT
from aodv_lab.core import (
    BETTER, EMPTY_STORE, INVALID, KNOWN, NON_PENDING, PENDING, UNKNOWN, VALID, RouteEntry, RoutingTable,
    entry_nsqn, invalidate_routes, nsqn, quality_compare, store_add, store_drop, unset_rrf, update_route,
)
from aodv_lab.fuzz import random_scenario
from aodv_lab.network import replay
from aodv_lab.scenario import parse_scenario, run_scenario

ADDRS = "abcd"


def _entry(dip, valid_only, raw):
    dsn, known, valid, hops, nh, pre = raw
    d = dip or ADDRS[nh]
    dsk = KNOWN if known and dsn else UNKNOWN
    flag = VALID if valid or valid_only else INVALID
    if dsk == UNKNOWN and valid_only:
        hops = 1
    nhip = d if hops == 1 else ADDRS[(nh + 1) % len(ADDRS)]
    return RouteEntry(d, dsn, dsk, flag, hops, nhip, frozenset(a for i, a in enumerate(ADDRS) if pre >> i & 1))


def entries(dip=None, valid_only=False):
    raw = st.tuples(st.integers(0, 6), st.booleans(), st.booleans(), st.integers(1, 6),
                    st.integers(0, len(ADDRS) - 1), st.integers(0, 15))
    return raw.map(lambda r: _entry(dip, valid_only, r))


def well_formed_update(e):
    if e.dsn == 0:
        return e._replace(dsk=UNKNOWN, hops=1, nhip=e.dip)
    if e.dsk == UNKNOWN:
        return e._replace(dsn=0, hops=1, nhip=e.dip)
    return e


def table(e):
    return RoutingTable([e])


def strictly_better(x, y):
    """x is strictly worse than y on the quality order."""
    return quality_compare(table(x), table(y), x.dip) == BETTER


# 200 examples of 50 cases each: 10,000 triples and 10,000 entries

@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(entries(dip="d"), entries(dip="d"), entries(dip="d")), min_size=50, max_size=50))
def test_quality_order_is_strict(triples):
    for x, y, z in triples:
        assert not strictly_better(x, x)
        if strictly_better(x, y) and strictly_better(y, z):
            assert strictly_better(x, z)
        assert not (strictly_better(x, y) and strictly_better(y, x))


@settings(max_examples=200, deadline=None)
@given(st.lists(entries(), min_size=50, max_size=50))
def test_nsqn_bounds(batch):
    for e in batch:
        n = nsqn(table(e), e.dip)
        assert max(e.dsn - 1, 0) <= n <= e.dsn
        assert n == entry_nsqn(e)


@settings(max_examples=500, deadline=None)
@given(st.lists(entries(), max_size=4, unique_by=lambda e: e.dip), entries(valid_only=True),
       st.sampled_from(("2a", "2c", "2d", "2e")))
def test_update_keeps_destinations_and_never_loses_freshness(stored, r, variant):
    r = well_formed_update(r)
    rt = RoutingTable(stored)
    out = update_route(rt, r, variant)
    assert set(out.destinations()) == set(rt.destinations()) | {r.dip}
    old = rt.get(r.dip)
    new = out.get(r.dip)
    if old is not None:
        if variant == "2e":
            assert entry_nsqn(new) >= entry_nsqn(old)
        else:
            assert new.dsn >= old.dsn
        assert new.pre >= old.pre
        assert (entry_nsqn(new), -new.hops) >= (entry_nsqn(old), -old.hops)
    for e in stored:
        if e.dip != r.dip:
            assert out.get(e.dip) == e


@settings(max_examples=500, deadline=None)
@given(st.lists(entries(), max_size=4, unique_by=lambda e: e.dip),
       st.dictionaries(st.sampled_from(ADDRS + "xy"), st.integers(0, 6), max_size=3))
def test_invalidate_touches_only_listed_destinations(stored, dests):
    rt = RoutingTable(stored)
    out = invalidate_routes(rt, dests)
    assert set(out.destinations()) == set(rt.destinations())
    for e in stored:
        f = out.get(e.dip)
        if e.dip in dests:
            assert f.flag == INVALID and f.dsn == dests[e.dip] and f.hops == e.hops
        else:
            assert f == e


COMMANDS = st.lists(st.tuples(st.sampled_from(("add", "drop", "pending")), st.sampled_from("dex"),
                              st.integers(0, 9)), max_size=30)


@settings(max_examples=1000, deadline=None)
@given(COMMANDS)
def test_store_against_a_model(commands):
    store, model, flags = EMPTY_STORE, {}, {}
    for op, dip, n in commands:
        if op == "add":
            store = store_add(f"p{n}", dip, store)
            model.setdefault(dip, deque()).append(f"p{n}")
            flags.setdefault(dip, NON_PENDING)
        elif op == "drop" and dip in model:
            store = store_drop(dip, store)
            model[dip].popleft()
            if not model[dip]:
                del model[dip], flags[dip]
        elif op == "pending":
            store = unset_rrf(store, dip)
            if dip in flags:
                flags[dip] = PENDING
        assert store.qD() == set(model)
        for d, flag, q in store.queues:
            assert q and list(q) == list(model[d]) and flag == flags[d]
        assert [d for d, _, _ in store.queues] == sorted(model)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_replay_is_deterministic(seed):
    rng = random.Random(seed)
    scn = random_scenario(rng)
    report = run_scenario(scn, DEFAULT, policy="random", seed=seed)
    again = replay(report.trace.initial, report.trace.choices(), DEFAULT)
    assert again.lines() == report.trace.lines()
    rerun = run_scenario(scn, DEFAULT, policy="random", seed=seed)
    assert rerun.trace.lines() == report.trace.lines()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_scenario_print_parse_round_trip(seed):
    scn = random_scenario(random.Random(seed))
    assert parse_scenario(scn.text()) == scn


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_runs_satisfy_every_invariant(seed):
    scn = random_scenario(random.Random(seed))
    report = run_scenario(scn, DEFAULT, policy="random", seed=seed, checks="all")
    assert report.violations == []
    assert report.end == "quiescent"
