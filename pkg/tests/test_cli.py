import csv
import re

import pytest

from conftest import line, product
from hoistplan.benchgen import make_static_instance, static_suite, write_manifest
from hoistplan.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from hoistplan.core.io import dump_instance
from hoistplan.pddlio import read_plan
from hoistplan.sim import CSV_HEADER

PLAN_LINE = re.compile(r"\d+\.0 {4}\((Move-Hoist hoist\d+ tank\d+ tank\d+|(PickUp|PutDown)-Hoist hoist\d+ tank\d+ p\d+)\) {4}\d+\.00")


@pytest.fixture
def figure_scale(tmp_path):
    path = tmp_path / "a6.json"
    dump_instance(make_static_instance("A", 2, 8), path)
    return path


def test_solve_writes_plan_and_trace(tmp_path, figure_scale):
    out, trace = tmp_path / "plan.txt", tmp_path / "trace.log"
    assert main(["solve", str(figure_scale), "--out", str(out), "--trace", str(trace)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines and all(PLAN_LINE.fullmatch(l) for l in lines)
    assert trace.read_text().splitlines()[0] == "# alpha=2 cutoff=180 planner=embedded"
    assert len(read_plan(out)) == len(lines)


def test_solve_alpha_echoed(tmp_path, figure_scale):
    trace = tmp_path / "trace.log"
    main(["solve", str(figure_scale), "--alpha", "5", "--out", str(tmp_path / "p"), "--trace", str(trace)])
    assert trace.read_text().startswith("# alpha=5 ")


def test_solve_missing_file():
    assert main(["solve", "/nonexistent/instance.json"]) == EXIT_INPUT


def test_solve_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == EXIT_INPUT


def test_solve_failure_exit(tmp_path, capsys):
    inst = line(["O1"], products=[product(0, ("O1", 25, 55))]).with_tank_available(1, False)
    path = tmp_path / "blocked.json"
    dump_instance(inst, path)
    out = tmp_path / "plan.txt"
    assert main(["solve", str(path), "--out", str(out), "--trace", str(tmp_path / "t")]) == EXIT_FAIL
    assert not out.exists()


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code == EXIT_INPUT


def test_bench_requires_seed(tmp_path):
    manifest = write_manifest([], tmp_path / "m.csv")
    with pytest.raises(SystemExit) as exc:
        main(["bench", str(manifest)])
    assert exc.value.code == EXIT_INPUT


def test_bench_empty_manifest(tmp_path):
    manifest = write_manifest([], tmp_path / "m.csv")
    out = tmp_path / "metrics.csv"
    assert main(["bench", str(manifest), "--seed", "1", "--out", str(out)]) == EXIT_OK
    assert out.read_text() == CSV_HEADER + "\n"


def _columns(path):
    with open(path, newline="") as fh:
        return [{k: r[k] for k in ("seed", "NT", "NH", "Nrho", "success", "makespan", "wait_s")}
                for r in csv.DictReader(fh)]


def test_bench_rerun_is_deterministic(tmp_path, capsys):
    manifest = static_suite(tmp_path / "suite", groups=((1, 6, 2), (2, 9, 2)), per_group=1)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["bench", str(manifest), "--seed", "4", "--out", str(a)]) == EXIT_OK
    table = capsys.readouterr().out
    assert main(["bench", str(manifest), "--seed", "4", "--out", str(b)]) == EXIT_OK
    assert _columns(a) == _columns(b)
    assert len(_columns(a)) == 2
    # one summary row per tank count
    assert [l.split()[0] for l in table.splitlines()[2:]] == ["6", "9"]


def test_simulate_prints_metrics_row(figure_scale, capsys):
    assert main(["simulate", str(figure_scale), "--seed", "3"]) == EXIT_OK
    header, row = capsys.readouterr().out.splitlines()
    assert header == CSV_HEADER
    assert row.startswith("3,8,1,2,1,")


def test_export_pddl(tmp_path, figure_scale):
    assert main(["export-pddl", str(figure_scale), "--out-dir", str(tmp_path / "docs")]) == EXIT_OK
    problem = (tmp_path / "docs" / "problem.pddl").read_text()
    assert "(product_at p0 tank7)" in problem.split(":goal")[1]
    assert "(:durative-action PickUp-Hoist" in (tmp_path / "docs" / "domain.pddl").read_text()


def test_gen_static_then_solve(tmp_path):
    path = tmp_path / "gen.json"
    assert main(["gen", "static", "--out", str(path), "--seed", "0", "--recipe", "E", "--products", "2",
                 "--tanks", "6"]) == EXIT_OK
    assert main(["solve", str(path), "--out", str(tmp_path / "p"), "--trace", str(tmp_path / "t")]) == EXIT_OK


def test_gantt_refuses_invalid_plan(tmp_path, figure_scale):
    plan = tmp_path / "bad.txt"
    plan.write_text("0.0    (Move-Hoist hoist0 tank0 tank3)    2.00\n")
    svg = tmp_path / "c.svg"
    assert main(["gantt", str(plan), str(figure_scale), "--out", str(svg)]) == EXIT_FAIL
    assert not svg.exists()
    assert main(["gantt", str(plan), str(figure_scale), "--out", str(svg), "--allow-invalid"]) == EXIT_OK
    assert svg.exists()


def test_gantt_bad_plan_file(tmp_path, figure_scale):
    plan = tmp_path / "bad.txt"
    plan.write_text("0.0 (Jump hoist0) 2\n")
    assert main(["gantt", str(plan), str(figure_scale)]) == EXIT_INPUT
