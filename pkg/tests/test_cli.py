import json
from fractions import Fraction as F

import pytest

from aoilab import cli
from aoilab.harness import CheckReport, Witness
from aoilab.model import parse_instance, trace_from_csv, validate_trace
from aoilab.policies import PolicyId


@pytest.fixture
def ex3(tmp_path):
    assert cli.main(["--out", str(tmp_path), "gen", "--family", "example3"]) == 0
    return tmp_path / "example3.json"


def test_gen_writes_canonical_files(tmp_path, capsys):
    out = tmp_path / "corpus"
    assert cli.main(["gen", "--family", "uniform", "--n", "4", "--count", "3", "--seed", "5", "--out", str(out)]) == 0
    files = sorted(out.glob("*.json"))
    assert [f.name for f in files] == ["uniform-n4-s5.json", "uniform-n4-s6.json", "uniform-n4-s7.json"]
    again = tmp_path / "again"
    cli.main(["gen", "--family", "uniform", "--n", "4", "--count", "3", "--seed", "5", "--out", str(again)])
    for f in files:
        assert f.read_bytes() == (again / f.name).read_bytes()


def test_run_srpt_plus_on_example3(ex3, tmp_path, capsys):
    record = cli.cmd_run(ex3, "srpt-plus", tmp_path)
    assert record.report["integral"] == "279/200"
    assert record.report["integral_decimal"] == "1.395"
    assert record.report["average"] == "279/400"
    inst = parse_instance(ex3.read_text())
    csv_trace = trace_from_csv((tmp_path / record.instance_id / "srpt-plus.trace.csv").read_text(), inst)
    assert validate_trace(csv_trace, inst)[0]
    log = (tmp_path / "runs.jsonl").read_text().splitlines()
    assert json.loads(log[-1])["policy"] == "srpt-plus"
    assert set(json.loads(log[-1])) == {"instance_id", "policy", "report", "trace_path", "timestamp", "tool_version"}


def test_run_oracle_and_empty(ex3, tmp_path):
    assert cli.cmd_run(ex3, "oracle", tmp_path).report["integral"] == "553/400"
    empty = tmp_path / "empty.json"
    empty.write_text('{"horizon": "3", "updates": []}')
    assert cli.cmd_run(empty, "srpt", tmp_path).report["average"] == "3/2"


def test_run_reports_are_reproducible(ex3, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        cli.main(["run", str(ex3), "--policy", "srpt-l", "--out", str(out)])
    names = ["srpt-l.report.json", "srpt-l.trace.json", "srpt-l.trace.csv", "srpt-l.metrics.csv"]
    (iid,) = [p.name for p in a.iterdir() if p.is_dir()]
    for name in names:
        assert (a / iid / name).read_bytes() == (b / iid / name).read_bytes()
    assert len((a / "runs.jsonl").read_text().splitlines()) == 1


def test_compare_example3(ex3, capsys):
    rows = cli.cmd_compare(ex3, ["srpt-plus", "srpt-l", "oracle"])
    assert [(r["policy"], r["integral"], r["ratio"]) for r in rows] == [
        ("srpt-plus", "279/200", "558/553"),
        ("srpt-l", "653/400", "653/553"),
        ("oracle", "553/400", "1"),
    ]
    assert len(cli.cmd_compare(ex3, ["fcfs"])) == 1
    assert cli.main(["compare", str(ex3)]) == 0
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header == list(cli.COMPARE_COLUMNS)


def test_compare_burst_instance(tmp_path):
    cli.main(["gen", "--family", "example2", "--m", "40", "--horizon", "20", "--out", str(tmp_path)])
    rows = cli.cmd_compare(tmp_path / "example2-m40.json", ["srpt", "non-preemptive-latest"])
    assert rows[0]["ratio"] is None  # 59 updates exceed the enumeration cap
    srpt, latest = (F(r["average"]) for r in rows)
    assert srpt > 4 * latest


def test_sweep(tmp_path, capsys):
    code = cli.main(["sweep", "--n", "6", "--count", "20", "--seed", "7", "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "sweep-srpt-plus-s7.json").read_text())
    assert code == 0 and summary["passed"] and F(summary["max_ratio"]) <= 4
    rows = (tmp_path / "sweep-srpt-plus-s7.csv").read_text().splitlines()
    assert len(rows) == 21
    cli.main(["sweep", "--n", "3", "--count", "1", "--policy", "fcfs", "--out", str(tmp_path)])
    assert json.loads((tmp_path / "sweep-fcfs-s0.json").read_text())["count"] == 1


def test_sweep_violation_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(PolicyId, "ratio_bound", property(lambda self: 1))
    code = cli.main(["sweep", "--n", "6", "--count", "5", "--out", str(tmp_path)])
    assert code == 1


def test_check_suites(tmp_path, monkeypatch):
    corpus = tmp_path / "corpus"
    cli.main(["gen", "--n", "5", "--count", "4", "--out", str(corpus)])
    for suite in ("lemma2", "lemma4", "lemma5", "decomposition", "cr"):
        assert cli.main(["check", "--suite", suite, "--corpus", str(corpus), "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / f"check-{suite}.json").read_text())
        assert doc["instances"] == 4 and doc["failed"] == 0
    failing = lambda trace, inst: CheckReport("lemma2", "x", (Witness(1, F(0), F(1)),))
    monkeypatch.setattr("aoilab.harness.check_lemma2", failing)
    assert cli.main(["check", "--suite", "lemma2", "--corpus", str(corpus), "--out", str(tmp_path)]) == 1


def test_search(tmp_path, capsys):
    assert cli.main(["search", "--policy", "srpt", "--n", "4", "--budget", "30", "--seed", "2", "--out", str(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert F(doc["ratio"]) >= 1
    parse_instance((tmp_path / "search-srpt-n4-s2.json").read_text())


def test_usage_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"horizon": "2",\n "updates": [}')
    assert cli.main(["run", str(bad)]) == 2
    assert "bad.json:2:" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    good = tmp_path / "good.json"
    good.write_text('{"horizon": "2", "updates": [{"g": "0", "s": "1"}]}')
    assert cli.main(["run", str(good), "--policy", "lifo", "--out", str(tmp_path)]) == 2
    assert "valid ids" in capsys.readouterr().err
    assert cli.main(["run", str(good), "--policy", "oracle", "--cap", "0", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_module_entry_point():
    import subprocess
    import sys

    done = subprocess.run([sys.executable, "-m", "aoilab", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("aoilab ")
