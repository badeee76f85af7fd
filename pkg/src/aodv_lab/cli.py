"""Command line: run, explore, enumerate, fuzz and list-builtins.

Exit status is 0 when every assertion, monitor and check passes, 1 with a
one-line cause on stderr otherwise, and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .config import CLASSES, ConfigError, LOOP_FREE, classify, enumerate_interpretations, parse_config
from .explorer import explore, initial_of, witness_lines
from .fuzz import fuzz
from .invariants import CHECKS
from .library import BUILTINS, builtin_names, load_builtin
from .monitors import PROPERTIES
from .network import DEFAULT_BUDGET
from .scenario import Scenario, ScenarioError, parse_scenario, run_scenario


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("AODV_LAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"AODV_LAB_SEED must be an integer, got {raw!r}") from None


def _config(text: str):
    try:
        return parse_config(text)
    except ConfigError as e:
        raise UsageError(f"--config: {e}") from None


def _load(target: str) -> Scenario:
    path = Path(target)
    if path.is_file():
        try:
            return parse_scenario(path.read_text(encoding="utf-8"))
        except ScenarioError as e:
            raise UsageError(f"{target}: {e}") from None
    if target in BUILTINS:
        return load_builtin(target)
    raise UsageError(f"no file or builtin named {target!r}; builtins: {', '.join(builtin_names())}")


def _monitors(names: list) -> tuple:
    out = []
    for n in names or ():
        if n == "all":
            out.extend(PROPERTIES)
        elif n in PROPERTIES:
            out.append(n)
        else:
            raise UsageError(f"--monitor: unknown property {n!r}; choose from {', '.join(PROPERTIES)} or all")
    return tuple(dict.fromkeys(out))


def _fail(cause: str) -> int:
    print(f"FAIL: {cause}", file=sys.stderr)
    return 1


def cmd_run(args) -> int:
    scn = _load(args.target)
    cfg = _config(args.config)
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        report = run_scenario(scn, cfg, policy=args.policy, seed=seed, budget=args.budget,
                              checks=args.check, monitors=_monitors(args.monitor))
    except ScenarioError as e:
        raise UsageError(f"{args.target}: {e}") from None
    if args.trace:
        Path(args.trace).write_text("\n".join(report.trace.lines()) + "\n", encoding="utf-8")
    print(f"run {args.target} config={cfg.short()} policy={args.policy} seed={seed}: "
          f"{len(report.trace.steps)} transitions, end={report.end}")
    for o in report.outcomes:
        print(o.line())
    for v in report.violations:
        print(v.text())
    for v in report.verdicts:
        print(v.text())
    if report.note:
        print(report.note)
    if report.ok:
        print("OK")
        return 0
    return _fail(report.failures()[0])


def cmd_explore(args) -> int:
    scn = _load(args.target)
    cfg = _config(args.config)
    report = explore(scn, cfg, checks=args.check or "all", max_depth=args.max_depth,
                     max_states=args.max_states, stop_at_first=args.stop_at_first,
                     time_limit=args.time_limit)
    summary = report.summary()
    summary.update(target=args.target, config=cfg.short(), witnesses=[])
    initial = initial_of(scn, cfg)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for k, f in enumerate(report.findings, 1):
        print(f.text())
        if out is not None:
            path = out / f"witness-{k}.txt"
            path.write_text("\n".join([f"# {f.violation.text()}"] + witness_lines(initial, f, cfg)) + "\n",
                            encoding="utf-8")
            summary["witnesses"].append({"violation": f.violation.text(), "path": str(path),
                                         "replayed": f.replayed})
    if out is not None:
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(" ".join(f"{k}={v}" for k, v in report.summary().items()))
    if not all(f.replayed for f in report.findings):
        return _fail("a witness did not replay")
    if report.findings:
        return _fail(report.findings[0].violation.text())
    return 0


def cmd_enumerate(args) -> int:
    rows = [(cfg.key(), classify(cfg)) for cfg in enumerate_interpretations()]
    counts = {c: sum(1 for _, k in rows if k == c) for c in CLASSES}
    print(f"total={len(rows)} {LOOP_FREE}={counts[LOOP_FREE]}")
    if args.csv == "-":
        sink = sys.stdout
    elif args.csv:
        sink = open(args.csv, "w", newline="", encoding="utf-8")
    else:
        sink = None
    if sink is not None:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["config-key", "classification"])
        w.writerows(rows)
        if sink is not sys.stdout:
            sink.close()
    else:
        for c in CLASSES:
            print(f"  {c}: {counts[c]}")
    return 0


def cmd_fuzz(args) -> int:
    cfg = _config(args.config)
    seed = args.seed if args.seed is not None else _default_seed()
    report = fuzz(args.runs, seed, cfg, checks=args.check or "all")
    print(f"fuzz runs={report.runs} transitions={report.transitions} failures={len(report.failures)} "
          f"seconds={report.seconds:.1f}")
    for f in report.failures[:5]:
        print(f"run {f.index} (scheduler seed {f.seed}): {f.causes[0]}")
        print(f.scenario.text(), end="")
    if report.failures:
        return _fail(f"{len(report.failures)} of {report.runs} runs violated a check")
    return 0


def cmd_list(args) -> int:
    for name in builtin_names():
        summary, _, configs = BUILTINS[name]
        shown = ", ".join(c or "default" for c in configs) or "default"
        print(f"{name:10} {summary} [configs: {shown}]")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aodv-lab", description="Execute, check and explore AODV scenarios.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", default="", help="interpretation, e.g. amb7=7b,improve=fwd-rrep")
        sp.add_argument("--check", choices=CHECKS, help="invariant checks to run at every step")

    r = sub.add_parser("run", help="run a scenario file or builtin")
    r.add_argument("target")
    common(r)
    r.add_argument("--seed", type=int, default=None, help="seed for --policy random (default $AODV_LAB_SEED)")
    r.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    r.add_argument("--monitor", action="append", help="property to evaluate; repeatable, or 'all'")
    r.add_argument("--trace", help="write the trace here, one line per transition")
    r.add_argument("--policy", choices=("fair", "random"), default="fair")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("explore", help="explore every interleaving of a scenario")
    e.add_argument("target")
    common(e)
    e.add_argument("--max-depth", type=int, default=None)
    e.add_argument("--max-states", type=int, default=2_000_000)
    e.add_argument("--time-limit", type=float, default=None, help="seconds")
    e.add_argument("--stop-at-first", action="store_true", help="stop at the first routing loop")
    e.add_argument("--out", help="directory for witness files and summary.json")
    e.set_defaults(func=cmd_explore)

    n = sub.add_parser("enumerate", help="classify every interpretation")
    n.add_argument("--csv", help="write config-key,classification rows to this path ('-' for stdout)")
    n.set_defaults(func=cmd_enumerate)

    f = sub.add_parser("fuzz", help="seeded random scenarios with all checks")
    f.add_argument("--runs", type=int, default=1000)
    f.add_argument("--seed", type=int, default=None)
    common(f)
    f.set_defaults(func=cmd_fuzz)

    b = sub.add_parser("list-builtins", help="list the built-in scenarios")
    b.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"aodv-lab: error: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # output piped into a reader that stopped early
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
