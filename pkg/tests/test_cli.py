import csv
import json
import subprocess
import sys

import pytest

from aodv_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_builtin(capsys):
    code, out, err = run(capsys, "run", "fig1")
    assert code == 0
    assert "PASS assert route s d valid hops=2 nhop=a" in out
    assert out.rstrip().endswith("OK")


def test_run_reports_loop(capsys):
    code, out, err = run(capsys, "run", "fig5", "--config", "amb7=7b", "--check", "loops")
    assert code == 1
    assert "cycle a->s->a" in out
    assert err.startswith("FAIL: ") and err.count("\n") == 1


def test_run_file_with_trace(capsys, tmp_path):
    scn = tmp_path / "line.aodv"
    scn.write_text('nodes s a d\nconnect s a\nconnect a d\ninject s d "x"\ndrain\nassert delivered d "x"\n')
    trace = tmp_path / "trace.txt"
    code, out, _ = run(capsys, "run", str(scn), "--trace", str(trace), "--monitor", "all")
    assert code == 0
    lines = trace.read_text().splitlines()
    assert lines[0].startswith('0 newpkt s [d] "x" ')
    assert "pd3: satisfied" in out


def test_failed_assertion_exit_status(capsys, tmp_path):
    scn = tmp_path / "bad.aodv"
    scn.write_text("nodes a b\nconnect a b\nassert route a b valid\n")
    code, _, err = run(capsys, "run", str(scn))
    assert code == 1 and "a has no entry for b" in err


def test_monitor_violation_exit_status(capsys):
    code, out, err = run(capsys, "run", "fig10", "--monitor", "route-discovery")
    assert code == 1 and "route-discovery: violated" in err


def test_random_policy_uses_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("AODV_LAB_SEED", "42")
    code, out, _ = run(capsys, "run", "fig2", "--policy", "random")
    assert "seed=42" in out
    monkeypatch.setenv("AODV_LAB_SEED", "x")
    assert run(capsys, "run", "fig2", "--policy", "random")[0] == 2


@pytest.mark.parametrize("argv", [
    ["run", "nope"],
    ["run", "fig1", "--config", "amb2=2z"],
    ["run", "fig1", "--monitor", "pd9"],
    ["run", "fig1", "--policy", "psychic"],
    ["frobnicate"],
    [],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_parse_error_names_line(capsys, tmp_path):
    scn = tmp_path / "bad.aodv"
    scn.write_text("nodes a b\nconnect a q\n")
    code, _, err = run(capsys, "run", str(scn))
    assert code == 2 and "line 2 col 11" in err


def test_enumerate(capsys, tmp_path):
    code, out, _ = run(capsys, "enumerate")
    assert code == 0 and out.splitlines()[0] == "total=5184 loop-free-acceptable=178"
    path = tmp_path / "classes.csv"
    assert run(capsys, "enumerate", "--csv", str(path))[0] == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["config-key", "classification"] and len(rows) == 5185
    assert sum(r[1] == "loop-free-acceptable" for r in rows[1:]) == 178


def test_list_builtins(capsys):
    code, out, _ = run(capsys, "list-builtins")
    assert code == 0 and out.startswith("fig1 ")
    assert "fig8-free" in out


def test_explore_writes_witnesses(capsys, tmp_path):
    code, out, err = run(capsys, "explore", "fig5-free", "--config", "amb7=7b", "--stop-at-first",
                         "--out", str(tmp_path))
    assert code == 1
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["loops"] == 1 and summary["witnesses"]
    loop = [w for w in summary["witnesses"] if "routing-loop" in w["violation"]][0]
    assert loop["replayed"]
    text = (tmp_path / loop["path"].rsplit("/", 1)[1]).read_text()
    assert text.startswith("# routing-loop at a,s dip=d")


def test_explore_clean(capsys):
    code, out, _ = run(capsys, "explore", "fig10", "--max-depth", "12")
    assert code == 0 and "loops=0" in out


def test_fuzz_command(capsys):
    code, out, _ = run(capsys, "fuzz", "--runs", "20", "--seed", "1")
    assert code == 0 and out.startswith("fuzz runs=20 ")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "aodv_lab", "enumerate"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("total=5184 loop-free-acceptable=178")
