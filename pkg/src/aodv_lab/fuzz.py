"""Seeded random scenarios for safety sweeps.

Each scenario has at most five nodes, a handful of topology changes and a few
packet injections, separated by random numbers of scheduler steps and ended by
a drain.  Runs use the random scheduler with every invariant check enabled.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .config import DEFAULT, InterpretationConfig
from .network import edge
from .scenario import Event, Run, Scenario, run_scenario


@dataclass
class FuzzFailure:
    index: int
    seed: int
    scenario: Scenario
    causes: list


@dataclass
class FuzzReport:
    runs: int = 0
    transitions: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


def random_scenario(rng: random.Random, max_nodes: int = 5, max_topology: int = 4,
                    max_injections: int = 3) -> Scenario:
    names = tuple("abcdefgh"[:rng.randint(2, max_nodes)])
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    edges = tuple(p for p in pairs if rng.random() < 0.5)
    current = set(edges)
    events = []
    for _ in range(rng.randint(0, max_topology)):
        p = rng.choice(pairs)
        if p in current:
            current.discard(p)
            events.append(Event("disconnect", p))
        else:
            current.add(p)
            events.append(Event("connect", p))
    for k in range(rng.randint(1, max_injections)):
        o, d = rng.sample(names, 2)
        events.insert(rng.randint(0, len(events)), Event("inject", (o, d, f"p{k}")))
    statements = []
    for e in events:
        statements.append(e)
        statements.append(Run("step", rng.randint(0, 8)))
    statements.append(Run("drain"))
    return Scenario(names, tuple(edge(a, b) for a, b in edges), tuple(statements))


def fuzz(runs: int = 1000, seed: int = 0, cfg: InterpretationConfig = DEFAULT, checks: str = "all",
         **bounds) -> FuzzReport:
    """Run seeded random scenarios; run i is fully determined by (seed, i)."""
    t0 = time.monotonic()
    report = FuzzReport()
    for i in range(runs):
        rng = random.Random(f"{seed}:{i}")
        scn = random_scenario(rng, **bounds)
        run_seed = rng.randrange(2 ** 32)
        res = run_scenario(scn, cfg, policy="random", seed=run_seed, checks=checks)
        report.runs += 1
        report.transitions += len(res.trace.steps)
        causes = [v.text() for v in res.violations]
        if res.end not in ("quiescent", "halted"):
            causes.append(f"run ended {res.end}")
        if causes:
            report.failures.append(FuzzFailure(i, run_seed, scn, causes))
    report.seconds = time.monotonic() - t0
    return report
