"""Command-line entry point ``hit``.

Exit codes: 0 success, 2 the planner failed on the instance, 3 bad input
(unreadable file, malformed document or invalid arguments).
"""

from __future__ import annotations

import argparse
import io
import statistics
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

from .core.io import load_instance
from .core.model import InstanceError
from .core.state import initial_state
from .core.validate import validate_plan
from .hierarchy import HitConfig, HitSession
from .pddlio import ExternalPlanner, PlanParseError, export_domain, export_problem, read_plan, render_plan
from .goals import SubGoal
from .sim import CSV_HEADER, load_scenario, run_simulation
from .tplanner import EmbeddedPlanner, PlannerConfig

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


def _instance(path):
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except (InstanceError, OSError) as exc:
        raise InputError(str(exc))


def _planner(spec: str, cutoff: float):
    if spec == "embedded":
        return EmbeddedPlanner(PlannerConfig(cutoff=cutoff))
    if spec.startswith("external:"):
        return ExternalPlanner(spec[len("external:"):])
    raise InputError(f"unknown planner {spec!r}")


def cmd_solve(args) -> int:
    inst = _instance(args.instance)
    cfg = HitConfig(alpha=args.alpha, planner_cutoff=args.cutoff)
    planner = _planner(args.planner, args.cutoff)
    header = f"# alpha={cfg.alpha} cutoff={cfg.planner_cutoff:g} planner={args.planner}"
    session = HitSession(inst, cfg, planner)
    res = session.run()
    trace = "\n".join([header] + res.trace) + "\n"
    if args.trace:
        Path(args.trace).write_text(trace)
    else:
        sys.stderr.write(trace)
    if not res.success:
        print(f"HIT failed: {res.reason}", file=sys.stderr)
        return EXIT_FAIL
    report = validate_plan(inst, res.plan)
    if not report.ok and not args.allow_invalid:
        print(f"refusing to write an invalid plan: {report.summary()}", file=sys.stderr)
        return EXIT_FAIL
    text = render_plan(res.plan)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"makespan {report.makespan}, {len(res.plan)} actions, cpu {res.cpu_time:.2f}s", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = _instance(args.instance)
    try:
        events = load_scenario(args.scenario) if args.scenario else []
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"{args.scenario}: {exc}")
    cfg = HitConfig(alpha=args.alpha, planner_cutoff=args.cutoff)
    m = run_simulation(inst, events, cfg, _planner(args.planner, args.cutoff))
    row = m.csv_row(args.seed if args.seed is not None else "", len(inst.tanks), len(inst.hoists),
                    len(inst.products))
    print(CSV_HEADER)
    print(row)
    if args.plan_out and m.success:
        Path(args.plan_out).write_text(render_plan(m.plan))
    if not m.success:
        print(f"simulation failed: {m.reason}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _bench_one(base: Path, row: dict, alpha: int, cutoff: float):
    inst = _instance(base / row["instance"])
    events = load_scenario(base / row["scenario"]) if row.get("scenario") else []
    m = run_simulation(inst, events, HitConfig(alpha=alpha, planner_cutoff=cutoff))
    return m, inst


def summary_table(rows: Sequence[dict]) -> str:
    groups: dict = defaultdict(list)
    for r in rows:
        groups[int(r["NT"])].append(r)
    lines = [f"{'NT':>4} {'success':>8} {'makespan':>10} {'cpu_s':>8} {'wait_s':>8}"]
    for nt in sorted(groups):
        rs = groups[nt]
        ok = [r for r in rs if int(r["success"])]
        rate = len(ok) / len(rs)
        mk = statistics.mean(float(r["makespan"]) for r in ok) if ok else float("nan")
        cpu = statistics.mean(float(r["cpu_s"]) for r in rs)
        wait = statistics.mean(float(r["wait_s"]) for r in rs)
        lines.append(f"{nt:>4} {rate:>8.2f} {mk:>10.2f} {cpu:>8.2f} {wait:>8.2f}")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    from .benchgen import read_manifest

    manifest = Path(args.manifest)
    try:
        entries = read_manifest(manifest)
    except OSError as exc:
        raise InputError(str(exc))
    base = manifest.parent
    out_rows = []
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in entries:
        try:
            m, inst = _bench_one(base, row, args.alpha, args.cutoff)
        except InputError as exc:
            print(f"{row.get('id')}: {exc}", file=sys.stderr)
            continue
        line = m.csv_row(row["seed"], len(inst.tanks), len(inst.hoists), len(inst.products))
        buf.write(line + "\n")
        out_rows.append(dict(zip(CSV_HEADER.split(","), line.split(","))))
        if args.verbose:
            print(f"{row['id']}: {'ok' if m.success else 'FAIL ' + m.reason}", file=sys.stderr)
    Path(args.out).write_text(buf.getvalue())
    table = summary_table(out_rows) if out_rows else "no runs\n"
    print(f"# bench seed={args.seed} alpha={args.alpha}")
    sys.stdout.write(table)
    return EXIT_OK


def cmd_export(args) -> int:
    inst = _instance(args.instance)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(export_domain(inst).text)
    state = initial_state(inst)
    unload = inst.unloading_tanks
    goals = [SubGoal.product_at(p, unload[0]) for p in range(len(inst.products))] if unload else []
    (out / "problem.pddl").write_text(export_problem(state, goals, inst).text)
    print(f"wrote {out / 'domain.pddl'} and {out / 'problem.pddl'}")
    return EXIT_OK


def cmd_gantt(args) -> int:
    from .gantt import render_svg

    inst = _instance(args.instance)
    try:
        plan = read_plan(args.plan)
    except FileNotFoundError:
        raise InputError(f"{args.plan}: no such file")
    except PlanParseError as exc:
        raise InputError(f"{args.plan}: {exc}")
    report = validate_plan(inst, plan, require_complete=False)
    if not report.ok and not args.allow_invalid:
        print(f"plan does not validate: {report.summary()}", file=sys.stderr)
        return EXIT_FAIL
    Path(args.out).write_text(render_svg(plan, inst, args.scale))
    return EXIT_OK


def cmd_gen(args) -> int:
    from .benchgen import GeneratorParams, dynamic_suite, make_dynamic_instance, make_static_instance, static_suite
    from .core.io import dump_instance
    from .sim import dump_scenario

    if args.kind == "static":
        inst = make_static_instance(args.recipe, args.products, args.tanks, args.hoists, args.seed,
                                    fit="truncate")
        dump_instance(inst, args.out)
    elif args.kind == "dynamic":
        inst, events = make_dynamic_instance(GeneratorParams(args.tanks, args.hoists, args.K, args.seed))
        dump_instance(inst, args.out)
        dump_scenario(events, Path(args.out).with_suffix(".scenario.json"))
    elif args.kind == "dynamic-suite":
        print(dynamic_suite(args.out, K=args.K, base_seed=args.seed))
    else:
        print(static_suite(args.out, base_seed=args.seed))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hit", description="Hierarchical temporal planning for hoist scheduling.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--alpha", type=int, default=2)
        sp.add_argument("--cutoff", type=float, default=180.0)
        sp.add_argument("--planner", default="embedded", help="embedded or external:<command>")

    s = sub.add_parser("solve", help="plan a static instance")
    s.add_argument("instance")
    common(s)
    s.add_argument("--out", help="plan file (default stdout)")
    s.add_argument("--trace", help="trace log file (default stderr)")
    s.add_argument("--allow-invalid", action="store_true")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="run the line with concurrent replanning")
    s.add_argument("instance")
    s.add_argument("--scenario")
    s.add_argument("--seed", type=int)
    s.add_argument("--plan-out")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bench", help="run every instance of a suite manifest")
    s.add_argument("manifest")
    s.add_argument("--out", default="metrics.csv")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--alpha", type=int, default=2)
    s.add_argument("--cutoff", type=float, default=180.0)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("export-pddl", help="write domain and problem documents")
    s.add_argument("instance")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("gantt", help="draw a plan as SVG")
    s.add_argument("plan")
    s.add_argument("instance")
    s.add_argument("--out", default="chart.svg")
    s.add_argument("--scale", type=float, default=1.0, help="pixels per tick")
    s.add_argument("--allow-invalid", action="store_true")
    s.set_defaults(func=cmd_gantt)

    s = sub.add_parser("gen", help="generate instances")
    s.add_argument("kind", choices=["static", "dynamic", "dynamic-suite", "static-suite"])
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--recipe", default="A")
    s.add_argument("--products", type=int, default=6)
    s.add_argument("--tanks", type=int, default=8)
    s.add_argument("--hoists", type=int, default=1)
    s.add_argument("-K", type=int, default=10)
    s.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"hit: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
