from aodv_lab.config import DEFAULT, parse_config
from aodv_lab.explorer import canonical_hash, explore, initial_of, scenario_shape, witness_lines
from aodv_lab.library import load_builtin
from aodv_lab.network import initial_network, step
from aodv_lab.scenario import parse_scenario

LINE3 = parse_scenario("""\
nodes s a d
connect s a
connect a d
free {
  inject s d "ps"
  inject a d "pa"
  disconnect a d
}
""")


def test_canonical_hash():
    a = initial_network("sad", [("s", "a"), ("a", "d")])
    b = initial_network("das", [("d", "a"), ("a", "s")])
    assert canonical_hash(a) == canonical_hash(b)
    c, _ = step(a, ("newpkt", "s", "x", "d"), DEFAULT)
    assert canonical_hash(c) != canonical_hash(a) and c != a
    # no symmetry reduction: renamed addresses give a different state
    renamed = initial_network("tad", [("t", "a"), ("a", "d")])
    assert canonical_hash(renamed) != canonical_hash(a)


def test_shape():
    shape = scenario_shape(load_builtin("fig5-free"))
    assert len(shape.free) == 6 and shape.ordered == ()
    assert shape.prefix.statements
    plain = scenario_shape(parse_scenario("nodes a b\nconnect a b\ninject a b \"x\"\ndrain\n"))
    assert plain.prefix.statements == () and len(plain.ordered) == 1


def test_small_line_is_loop_free_and_deterministic():
    r1 = explore(LINE3, DEFAULT)
    r2 = explore(LINE3, DEFAULT)
    assert r1.findings == [] and not r1.truncated
    assert (r1.states, r1.transitions) == (r2.states, r2.transitions)
    assert r1.states > 100


def test_bounds_truncate():
    r = explore(LINE3, DEFAULT, max_depth=3)
    assert r.truncated and r.max_depth_seen == 3
    r = explore(LINE3, DEFAULT, max_states=50)
    assert r.truncated and r.states == 50


def test_unsound_reading_yields_replayable_loop():
    cfg = parse_config("amb7=7b")
    scn = load_builtin("fig5-free")
    r = explore(scn, cfg, stop_at_first=True)
    assert r.loops and all(f.replayed for f in r.findings)
    loop = r.loops[0]
    assert loop.violation.dip == "d" and sorted(loop.violation.nodes) == ["a", "s"]
    lines = witness_lines(initial_of(scn, cfg), loop, cfg)
    assert len(lines) == len(loop.witness)


def test_self_entry_loop_found():
    for inv in ("8a", "8b", "8c"):
        r = explore(load_builtin("fig8-free"), parse_config(f"amb5=5a,amb8={inv}"), stop_at_first=True)
        assert r.loops and r.loops[0].replayed
        v = r.loops[0].violation
        # the shortest witness closes the loop over c; s and x loop in other interleavings
        assert v.dip == "d" and "s" in v.nodes
