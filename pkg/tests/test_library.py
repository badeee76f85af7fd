import pytest

from aodv_lab.config import DEFAULT, parse_config, with_improvements
from aodv_lab.library import BUILTINS, builtin_configs, builtin_names, load_builtin, run_builtin

CASES = [(name, c) for name in sorted(BUILTINS) for c in BUILTINS[name][2]]


@pytest.mark.parametrize("name, config", CASES)
def test_builtin_passes_its_assertions(name, config):
    report = run_builtin(name, parse_config(config))
    assert report.ok, report.failures()
    assert report.outcomes, "every builtin asserts something"


@pytest.mark.parametrize("name", builtin_names())
def test_builtin_is_safe_under_default(name):
    report = run_builtin(name, DEFAULT, checks="all")
    assert report.violations == []
    assert report.end == "quiescent"


def test_every_builtin_lists_the_default():
    for name in builtin_names():
        assert DEFAULT in builtin_configs(name)


def test_unknown_builtin_lists_names():
    with pytest.raises(KeyError) as exc:
        load_builtin("fig99")
    assert "fig1" in str(exc.value) and "fig17" in str(exc.value)


def route(report, n, d):
    e = report.final.node(n).rt.get(d)
    return (e.dsn, e.hops, e.nhip, e.flag) if e else None


def test_fig1_two_hop_route():
    assert route(run_builtin("fig1", DEFAULT), "s", "d")[1:] == (2, "a", "val")


@pytest.mark.parametrize("name, config, cycle", [
    ("fig4", "amb2=2b", ("a", "s")),
    ("fig5", "amb7=7b", ("a", "s")),
    ("fig8", "amb5=5a,amb8=8a", ("s", "x")),
    ("fig8", "amb5=5a,amb8=8b", ("s", "x")),
    ("fig8", "amb5=5a,amb8=8c", ("s", "x")),
])
def test_loops(name, config, cycle):
    report = run_builtin(name, parse_config(config), checks="loops")
    loops = [v for v in report.violations if v.inv == "routing-loop"]
    assert loops and loops[0].dip == "d" and tuple(sorted(loops[0].nodes)) == cycle
    assert run_builtin(name, DEFAULT, checks="loops").violations == []


def test_fig10_fig11_route_discovery():
    for name in ("fig10", "fig11"):
        r = run_builtin(name, DEFAULT, monitors=("route-discovery", "reply-issued"))
        assert [v.outcome for v in r.verdicts] == ["violated", "satisfied"]
        r = run_builtin(name, parse_config("improve=fwd-rrep"), monitors=("route-discovery",))
        assert r.verdicts[0].outcome == "satisfied"
    assert route(run_builtin("fig10", parse_config("improve=fwd-rrep")), "s", "d")[1] == 2


def test_packet_delivery():
    r = run_builtin("fig14", DEFAULT)
    assert r.ok
    for name in ("fig15", "fig16"):
        assert run_builtin(name, DEFAULT, monitors=("pd3",)).verdicts[0].outcome == "violated"
        fixed = run_builtin(name, parse_config("improve=bcast-rerr"), monitors=("pd3",))
        assert fixed.verdicts[0].outcome == "satisfied"


def test_fig17_route_length():
    assert route(run_builtin("fig17", DEFAULT), "a", "s")[1] == 6
    assert route(run_builtin("fig17", parse_config("improve=fwd-rreq")), "a", "s")[1] == 2


def projection(report):
    tables = [tuple(n.rt for n in s.state.nodes) for s in report.trace.steps]
    delivered = [(s.label.src, s.label.detail) for s in report.trace.steps if s.label.kind == "deliver"]
    return tables, delivered


@pytest.mark.parametrize("name", builtin_names())
def test_skip_rreqid_equivalence(name):
    plain = run_builtin(name, DEFAULT)
    skip = run_builtin(name, with_improvements(DEFAULT, "skip-rreqid"))
    assert projection(plain) == projection(skip)
