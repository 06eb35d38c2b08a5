"""Command line harness: generate, schedule, simulate, compare.

Exit status is 0 on success, 2 for invalid input or usage, 1 for
anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .experiment import run_comparison
from .hgreen import BaselinePolicy, baseline_map, hga_map
from .model import (
    AnalyzerVariant,
    FormulaVariant,
    GreenConfig,
    ModelError,
    ValidationError,
    dumps,
    load_catalog,
    load_schedule,
    load_workflow,
)
from .powergate import GatingKind, GatingPolicy
from .simulator import EnergyLedger, compare, simulate, timeline_to_csv
from .workload import PRESETS, CatalogSpec, Preset, WorkflowSpec, gen_catalog, gen_workflow

log = logging.getLogger("greengrid")


class UsageError(ModelError):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _green_config(args) -> GreenConfig:
    return GreenConfig(
        gf=args.gf,
        formula_variant=FormulaVariant(args.variant),
        normalize_metrics=not args.raw_metrics,
        analyzer_variant=AnalyzerVariant(args.analyzer),
    )


def _gating(args) -> GatingPolicy:
    return GatingPolicy(
        GatingKind(args.gating),
        wake_latency_s=args.wake_latency,
        wake_energy_j=args.wake_energy,
        residual_fraction=args.residual,
    )


def _preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UsageError(f"unknown preset {name!r} (have: {', '.join(PRESETS)})") from None


# -- generate ----------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.preset:
        preset = _preset(args.preset)
        wspec, cspec = preset.workflow, preset.catalog
    elif args.spec:
        try:
            doc = json.loads(_read(args.spec))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.spec}: malformed JSON ({exc})") from None
        if not isinstance(doc, dict) or set(doc) - {"workflow", "catalog"}:
            raise ValidationError("spec", "expected an object with 'workflow' and 'catalog'")
        wspec = WorkflowSpec.from_dict(doc.get("workflow", {}))
        cspec = CatalogSpec.from_dict(doc.get("catalog", {}))
    else:
        wspec = WorkflowSpec(
            n_tasks=args.n_tasks,
            n_layers=args.n_layers,
            edge_density=args.edge_density,
            cycles_range=tuple(args.cycles),
            io_range=tuple(args.io),
            dil_range=tuple(args.dil),
        )
        cspec = CatalogSpec(n_sites=args.n_sites, cpe_range=tuple(args.cpe), ipc_range=tuple(args.ipc))
    if args.seed is not None:
        wspec = WorkflowSpec.from_dict({**wspec.to_dict(), "seed": args.seed})
        cspec = CatalogSpec.from_dict({**cspec.to_dict(), "seed": args.seed})
    workflow = gen_workflow(wspec)
    catalog = gen_catalog(cspec, workflow)
    out = Path(args.out)
    print(_write(out, "workflow.json", dumps(workflow.to_dict())))
    print(_write(out, "catalog.json", dumps(catalog.to_dict())))
    return 0


# -- schedule ----------------------------------------------------------------


def cmd_schedule(args) -> int:
    config = _green_config(args)
    workflow = load_workflow(_read(args.workflow))
    catalog = load_catalog(_read(args.catalog))
    if args.scheduler == "hga":
        schedule = hga_map(workflow, catalog, config)
    else:
        seed = args.seed if args.seed is not None else 0
        schedule = baseline_map(workflow, catalog, BaselinePolicy(args.scheduler), seed)
    path = Path(args.output) if args.output else Path(args.out) / "schedule.json"
    _write(path.parent, path.name, schedule.to_json())
    print(f"scheduler={args.scheduler} tasks={len(workflow)} mapped={len(schedule.assignment)} -> {path}")
    return 0


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    policy = _gating(args)
    workflow = load_workflow(_read(args.workflow))
    catalog = load_catalog(_read(args.catalog))
    schedule = load_schedule(_read(args.schedule))
    result = simulate(workflow, catalog, schedule, policy)
    out = Path(args.out)
    if (args.format or "json") == "csv":
        _write(out, "ledger.csv", result.ledger.to_csv())
    else:
        _write(out, "ledger.json", dumps(result.ledger.to_dict()))
    _write(out, "timeline.csv", timeline_to_csv(result.timeline))
    print(f"makespan_s={result.ledger.makespan_s!r} total_j={result.ledger.total_j!r}")
    return 0


# -- compare -----------------------------------------------------------------


def _load_ledger(path: str) -> EnergyLedger:
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValidationError("ledger", f"{path}: expected an object")
    return EnergyLedger.from_dict(doc)


def _emit_report(out: Path, fmt: str, header: list[str], rows: list[list], dat: list[tuple[str, float]]):
    if (fmt or "csv") == "json":
        _write(out, "report.json", dumps([dict(zip(header, r)) for r in rows]))
    else:
        _write(out, "report.csv", _csv([header, *[[repr(v) if isinstance(v, float) else v for v in r] for r in rows]]))
    lines = ["# label savings_pct"] + [f"{label} {pct!r}" for label, pct in dat]
    _write(out, "savings.dat", "\n".join(lines) + "\n")


def cmd_compare(args) -> int:
    out = Path(args.out)
    if not args.pipeline:
        if not (args.ledger_a and args.ledger_b):
            raise UsageError("compare needs --ledger-a and --ledger-b, or --pipeline")
        report = compare(_load_ledger(args.ledger_a), _load_ledger(args.ledger_b))
        header = ["label", "total_a_j", "total_b_j", "savings_fraction", "makespan_delta_s"]
        row = [args.label, report.total_a, report.total_b, report.savings_fraction, report.makespan_delta_s]
        _emit_report(out, args.format, header, [row], [(args.label, 100.0 * report.savings_fraction)])
        print(
            f"{args.label}: a uses {100.0 * report.savings_fraction:.3f}% less energy than b "
            f"({report.total_a:.6g} J vs {report.total_b:.6g} J, "
            f"makespan a-b {report.makespan_delta_s:+.6g} s)"
        )
        return 0

    if args.workflow and args.catalog:
        workflow = load_workflow(_read(args.workflow))
        catalog = load_catalog(_read(args.catalog))
    else:
        workflow, catalog = _preset(args.preset or "eega3").build()
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    base = args.seed if args.seed is not None else 0
    cmp = run_comparison(
        workflow, catalog, _green_config(args), _gating(args), range(base, base + args.seeds)
    )
    per_seed = cmp.per_seed_savings()
    header = ["label", "seed", "hga_total_j", "baseline_total_j", "savings_fraction"]
    rows = [
        [run.label, base + i, cmp.hga.total_j, run.total_j, s]
        for i, (run, s) in enumerate(zip(cmp.random_runs, per_seed))
    ]
    dat = [(run.label, 100.0 * s) for run, s in zip(cmp.random_runs, per_seed)]
    for other in cmp.others:
        dat.append((other.label, 100.0 * compare(cmp.hga.result.ledger, other.result.ledger).savings_fraction))
    _emit_report(out, args.format, header, rows, dat)
    _write(out, "schedule_hga.json", cmp.hga.schedule.to_json())
    _write(out, "ledger_hga.json", dumps(cmp.hga.result.ledger.to_dict()))
    _write(out, "timeline_hga.csv", timeline_to_csv(cmp.hga.result.timeline))

    summary = cmp.summary()
    print(f"hga total_j={cmp.hga.total_j:.6g} makespan_s={cmp.hga.result.ledger.makespan_s:.6g}")
    print(
        f"hga vs random ({args.seeds} seeds): {100 * summary['headline']:.3f}% less energy than mean random"
    )
    print(
        f"per-seed savings: mean {100 * summary['mean']:.3f}% "
        f"min {100 * summary['min']:.3f}% max {100 * summary['max']:.3f}%"
    )
    for label, pct in dat[len(per_seed):]:
        print(f"hga vs {label}: savings {pct:.3f}%")
    return 0


# -- parser ------------------------------------------------------------------


def _range_arg(parser, flag, default, kind=float, help=None):
    parser.add_argument(flag, nargs=2, type=kind, default=list(default), metavar=("MIN", "MAX"), help=help)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument(
        "--format", choices=("json", "csv"), default=None, help="ledger/report format"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    green = argparse.ArgumentParser(add_help=False)
    green.add_argument("--gf", type=float, default=0.5, help="green factor in [0, 1]")
    green.add_argument("--variant", choices=[v.value for v in FormulaVariant], default="literal")
    green.add_argument("--raw-metrics", action="store_true", help="skip min-max normalization")
    green.add_argument("--analyzer", choices=[v.value for v in AnalyzerVariant], default="cycles_plus_io")

    gating = argparse.ArgumentParser(add_help=False)
    gating.add_argument("--gating", choices=[k.value for k in GatingKind], default="fine")
    gating.add_argument("--wake-latency", type=float, default=1e-3, help="seconds")
    gating.add_argument("--wake-energy", type=float, default=0.01, help="joules per wake")
    gating.add_argument("--residual", type=float, default=0.05, help="leak fraction when gated")

    parser = argparse.ArgumentParser(prog="greengrid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write workflow.json and catalog.json")
    p.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("--spec", help="JSON file with 'workflow' and 'catalog' generator specs")
    p.add_argument("--n-tasks", type=int, default=30)
    p.add_argument("--n-layers", type=int, default=5)
    p.add_argument("--edge-density", type=float, default=0.1)
    p.add_argument("--n-sites", type=int, default=3)
    _range_arg(p, "--cycles", WorkflowSpec.cycles_range, int)
    _range_arg(p, "--io", WorkflowSpec.io_range, int)
    _range_arg(p, "--dil", WorkflowSpec.dil_range)
    _range_arg(p, "--cpe", CatalogSpec.cpe_range)
    _range_arg(p, "--ipc", CatalogSpec.ipc_range)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("schedule", parents=[common, green], help="map a workflow onto sites")
    p.add_argument("--workflow", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--scheduler", choices=["hga", *(b.value for b in BaselinePolicy)], default="hga")
    p.add_argument("--output", help="schedule file (default OUT/schedule.json)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", parents=[common, gating], help="execute a schedule")
    p.add_argument("--workflow", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--schedule", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common, green, gating], help="energy savings report")
    p.add_argument("--ledger-a")
    p.add_argument("--ledger-b")
    p.add_argument("--label", default="a_vs_b")
    p.add_argument("--pipeline", action="store_true", help="generate, schedule, simulate and compare")
    p.add_argument("--preset", default=None)
    p.add_argument("--workflow")
    p.add_argument("--catalog")
    p.add_argument("--seeds", type=int, default=20, help="number of random baseline seeds")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
