"""Command-line entry point: ``cloudconf <group> <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .acquisition import AcquisitionSpec
from .bench import ExperimentSpec, Strategy, export_csv, report_to_dict, run_experiment
from .catalog import DEFAULT_SIZES, default_catalog, enumerate_space, order_vm_axis, read_catalog
from .cost import Mode, pi_fraction
from .exceptions import CloudConfError, ValidationError
from .pareto import FrontPoint, normalize_objectives, pareto_front, recommend
from .search import Budget, SearchPolicy, run_search
from .synthcloud import PRESET_MODELS, SyntheticBackend, read_model, synth_trace_rows
from .trace import DEFAULT_FAILURE_DETECT_S, TraceBackend, format_trace, read_trace

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _write_output(text: str, out: str | None) -> None:
    """Write to ``out`` atomically (temp file then rename), or to stdout."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _sizes(text: str | None):
    if not text:
        return DEFAULT_SIZES
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise ValidationError(f"bad size list {text!r}") from None


def _space(catalog: str | None, sizes: str | None = None):
    vms = read_catalog(catalog) if catalog else default_catalog()
    return enumerate_space(order_vm_axis(vms), _sizes(sizes))


def make_backend(descriptor: str, space, workload=None, pi_frac=None, failure_detect_s=DEFAULT_FAILURE_DETECT_S,
                 base_dir: Path | None = None):
    """Build a backend from ``trace:FILE``, ``synth:FILE`` or ``preset:NAME``."""
    kind, sep, arg = descriptor.partition(":")
    if not sep or not arg:
        raise UsageError(f"backend must look like trace:FILE, synth:FILE or preset:NAME, got {descriptor!r}")
    path = Path(arg) if base_dir is None or Path(arg).is_absolute() else base_dir / arg
    if kind == "trace":
        return TraceBackend(read_trace(path), space, workload, failure_detect_s)
    if kind in ("synth", "preset"):
        if kind == "preset":
            if arg not in PRESET_MODELS:
                raise UsageError(f"unknown preset {arg!r}; choose from {sorted(PRESET_MODELS)}")
            model = PRESET_MODELS[arg]
        else:
            model = read_model(path)
        if pi_frac is None:
            pi_frac = 0.14 if workload is None else pi_fraction(workload)
        return SyntheticBackend(model, space, pi_frac, failure_detect_s)
    raise UsageError(f"unknown backend kind {kind!r}")


# -- subcommands ----------------------------------------------------------------------------------

def cmd_catalog_list(args):
    space = _space(args.catalog, args.sizes)
    rows = [
        {"index": i, "name": vm.name, "vcpus": vm.vcpus, "mem_gib": vm.mem_gib,
         "network_gbps": vm.network_gbps, "price_usd_hour": vm.price_usd_hour}
        for i, vm in enumerate(space.vms)
    ]
    if args.format == "json":
        return _dump_json({"schema_version": SCHEMA_VERSION, "kind": "catalog", "sizes": list(space.sizes),
                           "vms": rows})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_synth_generate(args):
    if (args.model is None) == (args.preset is None):
        raise UsageError("give exactly one of --model or --preset")
    model = read_model(args.model) if args.model else PRESET_MODELS[args.preset]
    if args.seed is not None:
        from dataclasses import replace
        model = replace(model, seed=args.seed)
    space = _space(args.catalog, args.sizes)
    rows = synth_trace_rows(model, space, args.workload, args.input_class, args.pi_fraction)
    return format_trace(rows)


def cmd_trace_validate(args):
    trace = read_trace(args.trace)
    space = _space(args.catalog, args.sizes)
    workloads = {}
    for wl in trace.workloads:
        rows = [trace[k] for k in trace if k[0] == wl]
        present = {(r.vm_name, r.n) for r in rows}
        missing = [space.label(c) for c in space if (space.vm(c).name, c.n) not in present]
        workloads[wl] = {
            "rows": len(rows),
            "feasible": sum(r.feasible for r in rows),
            "with_full_runtime": sum(r.total_runtime_s is not None for r in rows if r.feasible),
            "missing_configurations": missing,
        }
    report = {"schema_version": SCHEMA_VERSION, "kind": "trace_validation", "rows": len(trace),
              "workloads": workloads, "unknown_vms": trace.unknown_vms(space)}
    return _dump_json(report)


def _search_policy(args) -> SearchPolicy:
    if args.policy == "smbo":
        return SearchPolicy("smbo", args.surrogate, AcquisitionSpec(args.acquisition, args.xi, args.kappa))
    return SearchPolicy(args.policy, None, None)


def cmd_search_run(args):
    space = _space(args.catalog, args.sizes)
    backend = make_backend(args.backend, space, args.workload, args.pi_fraction, args.failure_detect_s)
    budget = Budget(args.budget, min(args.init, args.budget), Mode(args.mode))
    seed = 0 if args.seed is None else args.seed
    result = run_search(_search_policy(args), backend, budget, seed)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "config", "feasible", "runtime_estimate_s", "charged_cost_usd",
                         "objective_cost_usd", "best_cost_usd", "accumulated_charge_usd"])
        for step, (obs, best, charge) in enumerate(zip(result.history, result.best_curve, result.charge_curve), 1):
            writer.writerow([step, space.label(obs.config), str(obs.feasible).lower(),
                             repr(obs.runtime_estimate_s) if obs.feasible else "", repr(obs.charged_cost_usd),
                             repr(obs.objective_cost_usd) if obs.feasible else "",
                             "" if best == float("inf") else repr(best), repr(charge)])
        return buf.getvalue()
    out = {"schema_version": SCHEMA_VERSION, "kind": "search_result", "backend": args.backend,
           "budget": {"max_observations": budget.max_observations, "init_random": budget.init_random,
                      "mode": budget.mode.value}}
    out.update(result.to_dict(space))
    out["pareto_recommendations"] = [
        {"config": space.label(p.config), "runtime_s": p.runtime_s, "cost_usd": p.cost_usd}
        for p in recommend([result.history])
    ]
    return _dump_json(out)


def _load_experiment(path: Path):
    data = json.loads(path.read_text(encoding="utf-8"))
    known = {"backend", "catalog", "sizes", "workload", "pi_fraction", "failure_detect_s", "strategies",
             "budget", "repetitions", "base_seed"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown experiment keys {sorted(unknown)}")
    if "backend" not in data or "strategies" not in data:
        raise ValidationError("experiment spec needs 'backend' and 'strategies'")
    base = path.parent
    catalog = data.get("catalog")
    space = _space(str(base / catalog) if catalog else None,
                   ",".join(map(str, data["sizes"])) if data.get("sizes") else None)
    backend = make_backend(data["backend"], space, data.get("workload"), data.get("pi_fraction"),
                           float(data.get("failure_detect_s", DEFAULT_FAILURE_DETECT_S)), base)
    b = data.get("budget", {})
    budget = Budget(int(b.get("max_observations", 32)), int(b.get("init_random", 8)), Mode(b.get("mode", "full")))
    policies, labels = [], []
    for entry in data["strategies"]:
        entry = dict(entry)
        labels.append(entry.pop("label", None))
        policies.append(SearchPolicy.from_dict(entry))
    spec = ExperimentSpec.from_policies(policies, budget=budget, repetitions=int(data.get("repetitions", 50)),
                                        base_seed=int(data.get("base_seed", 0)))
    if any(labels):
        spec = ExperimentSpec([Strategy(lbl or s.label, s.policy) for lbl, s in zip(labels, spec.strategies)],
                              budget=spec.budget, repetitions=spec.repetitions, base_seed=spec.base_seed)
    return spec, backend, space


def cmd_bench_run(args):
    spec, backend, space = _load_experiment(Path(args.spec))
    if args.seed is not None:
        spec.base_seed = args.seed
    report = report_to_dict(run_experiment(spec, backend), space)
    if args.format == "csv":
        return export_csv(report)
    return _dump_json(report)


def cmd_bench_export_csv(args):
    report = json.loads(Path(args.input).read_text(encoding="utf-8"))
    if report.get("kind") != "bench_report":
        raise ValidationError("input is not a bench report")
    return export_csv(report)


def _points_from_results(data: dict, strategy: str | None):
    if data.get("kind") == "search_result":
        return [
            (h["config"], h["runtime_estimate_s"], h["objective_cost_usd"], 1.0)
            for h in data["history"] if h["feasible"]
        ]
    if data.get("kind") == "bench_report":
        strategies = data["strategies"]
        if strategy is None:
            strategy = "gp-ei" if "gp-ei" in strategies else next(iter(strategies))
        if strategy not in strategies:
            raise ValidationError(f"report has no strategy {strategy!r}; have {sorted(strategies)}")
        return [(p["config"], p["runtime_s"], p["cost_usd"], p["frequency"]) for p in strategies[strategy]["observed"]]
    raise ValidationError("input is neither a search result nor a bench report")


def cmd_pareto_show(args):
    data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    rows = _points_from_results(data, args.strategy)
    if not rows:
        raise ValidationError("no feasible observations in input")
    # labels stand in for configurations; their order doubles as the tie-break order
    from .catalog import CloudConfiguration
    labels = sorted({r[0] for r in rows})
    ids = {label: CloudConfiguration(i, 1) for i, label in enumerate(labels)}
    points = [FrontPoint(ids[c], rt, cost, freq) for c, rt, cost, freq in rows]
    front = set(pareto_front(points).points)
    norm = normalize_objectives(points)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["config", "runtime_s", "cost_usd", "norm_runtime", "norm_cost", "frequency", "on_front"])
    for (label, rt, cost, freq), p, (nr, nc) in zip(rows, points, norm):
        writer.writerow([label, repr(rt), repr(cost), repr(float(nr)), repr(float(nc)), repr(freq),
                         str(p in front).lower()])
    return buf.getvalue()


# -- parser ---------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    space_opts = argparse.ArgumentParser(add_help=False)
    space_opts.add_argument("--catalog", help="catalog CSV (default: built-in AWS table)")
    space_opts.add_argument("--sizes", help="comma-separated cluster sizes (default: 1,2,4,8,16,32)")

    parser = argparse.ArgumentParser(prog="cloudconf", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="{catalog,synth,trace,search,bench,pareto}")

    catalog = groups.add_parser("catalog", help="inspect VM catalogs").add_subparsers(dest="command")
    p = catalog.add_parser("list", parents=[common, space_opts], help="print the ordered VM axis")
    p.set_defaults(func=cmd_catalog_list, default_format="csv")

    synth = groups.add_parser("synth", help="synthetic cost spaces").add_subparsers(dest="command")
    p = synth.add_parser("generate", parents=[common, space_opts], help="emit a synthetic trace")
    p.add_argument("--model", help="model file (key=value or CSV)")
    p.add_argument("--preset", choices=sorted(PRESET_MODELS))
    p.add_argument("--workload", default="synth")
    p.add_argument("--class", dest="input_class", default="")
    p.add_argument("--pi-fraction", type=float, default=0.14)
    p.set_defaults(func=cmd_synth_generate, default_format="csv")

    trace = groups.add_parser("trace", help="recorded traces").add_subparsers(dest="command")
    p = trace.add_parser("validate", parents=[common, space_opts], help="check a trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_trace_validate, default_format="json")

    search = groups.add_parser("search", help="run one search").add_subparsers(dest="command")
    p = search.add_parser("run", parents=[common, space_opts], help="run a seeded search")
    p.add_argument("--policy", choices=("random", "grid", "smbo"), default="smbo")
    p.add_argument("--surrogate", choices=("gp", "rf"), default="gp")
    p.add_argument("--acquisition", choices=("ei", "mpi", "lcb"), default="ei")
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--budget", type=int, default=32)
    p.add_argument("--init", type=int, default=8)
    p.add_argument("--mode", choices=("full", "pi"), default="full")
    p.add_argument("--backend", required=True, help="trace:FILE, synth:FILE or preset:NAME")
    p.add_argument("--workload", help="workload id inside a trace, or PI-fraction key for synth backends")
    p.add_argument("--pi-fraction", type=float, default=None, help="PI charge fraction for synth backends")
    p.add_argument("--failure-detect-s", type=float, default=DEFAULT_FAILURE_DETECT_S)
    p.set_defaults(func=cmd_search_run, default_format="json")

    bench = groups.add_parser("bench", help="repeated experiments").add_subparsers(dest="command")
    p = bench.add_parser("run", parents=[common], help="run an experiment spec")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_bench_run, default_format="json")
    p = bench.add_parser("export-csv", parents=[common], help="flatten report curves to CSV")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_bench_export_csv, default_format="csv")

    pareto = groups.add_parser("pareto", help="Pareto recommendations").add_subparsers(dest="command")
    p = pareto.add_parser("show", parents=[common], help="tabulate observed points and the front")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--strategy", help="strategy label when reading a bench report")
    p.set_defaults(func=cmd_pareto_show, default_format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
        _write_output(text, args.out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except (CloudConfError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
