import random

from aodv_lab.config import DEFAULT, parse_config
from aodv_lab.fuzz import fuzz, random_scenario
from aodv_lab.scenario import Event


def test_random_scenarios_respect_bounds():
    for i in range(200):
        scn = random_scenario(random.Random(i))
        events = [s for s in scn.statements if isinstance(s, Event)]
        assert 2 <= len(scn.nodes) <= 5
        assert sum(e.kind != "inject" for e in events) <= 4
        assert 1 <= sum(e.kind == "inject" for e in events) <= 3


def test_fuzz_is_reproducible():
    a, b = fuzz(50, seed=11), fuzz(50, seed=11)
    assert a.transitions == b.transitions
    assert fuzz(50, seed=12).transitions != a.transitions


def test_default_reading_is_clean():
    report = fuzz(200, seed=5, cfg=DEFAULT)
    assert report.ok, [f.causes for f in report.failures[:3]]


def test_decreasing_sequence_numbers_are_caught():
    report = fuzz(300, seed=0, cfg=parse_config("amb2=2b"))
    assert not report.ok
    causes = {c for f in report.failures for c in f.causes}
    assert any("sqn-monotone" in c for c in causes)
