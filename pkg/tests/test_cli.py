import csv
import json
import statistics
import subprocess
import sys

import pytest

from greengrid.cli import main
from greengrid.simulator import EnergyLedger, compare
from oracles import audit_timeline


@pytest.fixture
def eega3(tmp_path):
    out = tmp_path / "scn"
    assert main(["generate", "--preset", "eega3", "--out", str(out)]) == 0
    return out


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenerate:
    def test_preset_writes_two_files(self, eega3, tmp_path, capsys):
        assert sorted(p.name for p in eega3.iterdir()) == ["catalog.json", "workflow.json"]
        again = tmp_path / "again"
        code, out, _ = run(capsys, "generate", "--preset", "eega3", "--out", str(again))
        assert code == 0 and str(again / "workflow.json") in out
        for name in ("workflow.json", "catalog.json"):
            assert (eega3 / name).read_bytes() == (again / name).read_bytes()

    def test_zero_tasks_exit_2(self, tmp_path, capsys):
        code, _, err = run(capsys, "generate", "--n-tasks", "0", "--out", str(tmp_path))
        assert code == 2 and "n_tasks" in err

    def test_flags_and_spec_file(self, tmp_path, capsys):
        assert run(capsys, "generate", "--n-tasks", "4", "--n-sites", "2", "--seed", "3", "--out", str(tmp_path / "f"))[0] == 0
        doc = json.loads((tmp_path / "f" / "catalog.json").read_text())
        assert [s["id"] for s in doc["sites"]] == ["A", "B"]
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"workflow": {"n_tasks": 5}, "catalog": {"n_sites": 4}}))
        assert run(capsys, "generate", "--spec", str(spec), "--out", str(tmp_path / "s"))[0] == 0
        assert len(json.loads((tmp_path / "s" / "workflow.json").read_text())["tasks"]) == 5
        spec.write_text(json.dumps({"workflow": {"n_tasks": 5, "bogus": 1}}))
        assert run(capsys, "generate", "--spec", str(spec), "--out", str(tmp_path / "s"))[0] == 2

    def test_unknown_preset(self, tmp_path, capsys):
        assert run(capsys, "generate", "--preset", "nope", "--out", str(tmp_path))[0] == 2


def schedule(capsys, scn, out, *extra):
    return run(
        capsys, "schedule", "--workflow", str(scn / "workflow.json"), "--catalog", str(scn / "catalog.json"),
        "--output", str(out), *extra,
    )


class TestSchedule:
    def test_hga_total(self, eega3, tmp_path, capsys):
        code, out, _ = schedule(capsys, eega3, tmp_path / "s.json", "--scheduler", "hga", "--gf", "0.5")
        assert code == 0
        assert "tasks=30 mapped=30" in out
        doc = json.loads((tmp_path / "s.json").read_text())
        assert len(doc["assignment"]) == 30 and len(doc["order"]) == 30

    def test_gf_out_of_range(self, eega3, tmp_path, capsys):
        code, _, err = schedule(capsys, eega3, tmp_path / "s.json", "--scheduler", "hga", "--gf", "1.2")
        assert code == 2 and "gf" in err

    def test_random_deterministic(self, eega3, tmp_path, capsys):
        for name in ("a.json", "b.json"):
            assert schedule(capsys, eega3, tmp_path / name, "--scheduler", "random", "--seed", "7")[0] == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_bad_workflow_names_field(self, tmp_path, capsys, eega3):
        bad = tmp_path / "wf.json"
        bad.write_text(json.dumps({"tasks": [{"id": "x", "cycles": 1, "dil": 2.0}]}))
        code, _, err = run(capsys, "schedule", "--workflow", str(bad), "--catalog", str(eega3 / "catalog.json"))
        assert code == 2 and "dil" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "schedule", "--workflow", str(tmp_path / "no"), "--catalog", str(tmp_path / "no"))
        assert code == 2 and "cannot read" in err


def simulate(capsys, scn, sched, out, *extra):
    return run(
        capsys, "simulate", "--workflow", str(scn / "workflow.json"), "--catalog", str(scn / "catalog.json"),
        "--schedule", str(sched), "--out", str(out), *extra,
    )


class TestSimulate:
    def test_fine_gating_ledger_audits(self, eega3, tmp_path, capsys):
        from greengrid.model import load_catalog, load_workflow
        from greengrid.powergate import GatingPolicy
        from greengrid.simulator import TimelineEntry

        schedule(capsys, eega3, tmp_path / "s.json")
        code, out, _ = simulate(capsys, eega3, tmp_path / "s.json", tmp_path / "sim", "--gating", "fine")
        assert code == 0 and "total_j=" in out
        ledger = EnergyLedger.from_dict(json.loads((tmp_path / "sim" / "ledger.json").read_text()))
        with open(tmp_path / "sim" / "timeline.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["task", "site", "start_s", "end_s"]
        timeline = [TimelineEntry(r["task"], r["site"], float(r["start_s"]), float(r["end_s"])) for r in rows]
        wf = load_workflow((eega3 / "workflow.json").read_text())
        cat = load_catalog((eega3 / "catalog.json").read_text())
        audit = audit_timeline(wf, cat, timeline, ledger.makespan_s, GatingPolicy())
        assert ledger.total_j == pytest.approx(sum(audit.values()), rel=1e-6)

    def test_fine_not_above_none(self, eega3, tmp_path, capsys):
        schedule(capsys, eega3, tmp_path / "s.json")
        totals = {}
        for kind in ("none", "fine"):
            args = ("--gating", kind, "--wake-latency", "0", "--wake-energy", "0")
            assert simulate(capsys, eega3, tmp_path / "s.json", tmp_path / kind, *args)[0] == 0
            doc = json.loads((tmp_path / kind / "ledger.json").read_text())
            totals[kind] = doc["totals"]["total_j"]
        assert totals["fine"] <= totals["none"]

    def test_partial_schedule_exit_2(self, eega3, tmp_path, capsys):
        bad = tmp_path / "s.json"
        bad.write_text(json.dumps({"assignment": {}, "order": []}))
        code, _, err = simulate(capsys, eega3, bad, tmp_path / "sim")
        assert code == 2 and "assignment" in err

    def test_csv_format(self, eega3, tmp_path, capsys):
        schedule(capsys, eega3, tmp_path / "s.json")
        assert simulate(capsys, eega3, tmp_path / "s.json", tmp_path / "sim", "--format", "csv")[0] == 0
        header = (tmp_path / "sim" / "ledger.csv").read_text().splitlines()[0]
        assert header == "site,busy_j,idle_j,storage_j,wake_j"

    def test_bad_residual_exit_2(self, eega3, tmp_path, capsys):
        schedule(capsys, eega3, tmp_path / "s.json")
        assert simulate(capsys, eega3, tmp_path / "s.json", tmp_path / "sim", "--residual", "1.0")[0] == 2


class TestCompare:
    def ledgers(self, capsys, scn, tmp_path):
        for name, sched in (("hga", ()), ("rnd", ("--scheduler", "random", "--seed", "1"))):
            schedule(capsys, scn, tmp_path / f"{name}.json", *sched)
            simulate(capsys, scn, tmp_path / f"{name}.json", tmp_path / name)
        return tmp_path / "hga" / "ledger.json", tmp_path / "rnd" / "ledger.json"

    def test_pair_matches_library(self, eega3, tmp_path, capsys):
        a, b = self.ledgers(capsys, eega3, tmp_path)
        code, out, _ = run(capsys, "compare", "--ledger-a", str(a), "--ledger-b", str(b), "--out", str(tmp_path / "r"))
        assert code == 0 and "less energy" in out
        rep = compare(*(EnergyLedger.from_dict(json.loads(p.read_text())) for p in (a, b)))
        with open(tmp_path / "r" / "report.csv") as fh:
            row = next(csv.DictReader(fh))
        assert float(row["savings_fraction"]) == rep.savings_fraction

    def test_identical_is_zero(self, eega3, tmp_path, capsys):
        a, _ = self.ledgers(capsys, eega3, tmp_path)
        code, out, _ = run(capsys, "compare", "--ledger-a", str(a), "--ledger-b", str(a), "--out", str(tmp_path / "r"))
        assert code == 0 and "0.000%" in out

    def test_mismatched_scenarios_exit_2(self, eega3, tmp_path, capsys):
        a, _ = self.ledgers(capsys, eega3, tmp_path)
        other = tmp_path / "other"
        run(capsys, "generate", "--preset", "eega3", "--seed", "9", "--out", str(other))
        schedule(capsys, other, tmp_path / "o.json")
        simulate(capsys, other, tmp_path / "o.json", tmp_path / "osim")
        code, _, err = run(capsys, "compare", "--ledger-a", str(a), "--ledger-b", str(tmp_path / "osim" / "ledger.json"), "--out", str(tmp_path))
        assert code == 2 and "scenario" in err

    def test_pipeline_batch(self, tmp_path, capsys):
        out_dir = tmp_path / "p"
        code, out, _ = run(capsys, "compare", "--pipeline", "--preset", "eega3", "--seeds", "20", "--variant", "tradeoff", "--out", str(out_dir))
        assert code == 0
        with open(out_dir / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 20
        savings = [float(r["savings_fraction"]) for r in rows]
        assert f"mean {100 * statistics.fmean(savings):.3f}%" in out
        assert f"min {100 * min(savings):.3f}%" in out
        assert f"max {100 * max(savings):.3f}%" in out
        dat = (out_dir / "savings.dat").read_text().splitlines()
        assert dat[0].startswith("#") and len(dat) == 1 + 20 + 2
        assert all(len(line.split()) == 2 for line in dat[1:])

    def test_pipeline_idempotent(self, tmp_path, capsys):
        for name in ("x", "y"):
            assert run(capsys, "compare", "--pipeline", "--seeds", "3", "--out", str(tmp_path / name))[0] == 0
        for f in (tmp_path / "x").iterdir():
            assert f.read_bytes() == (tmp_path / "y" / f.name).read_bytes()

    def test_needs_inputs(self, tmp_path, capsys):
        assert run(capsys, "compare", "--out", str(tmp_path))[0] == 2


def test_usage_error_exit_2():
    proc = subprocess.run([sys.executable, "-m", "greengrid", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "greengrid", "generate", "--preset", "eega3", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "catalog.json").exists()
