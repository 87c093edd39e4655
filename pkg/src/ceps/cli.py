"""Command-line interface.

Subcommands: generate, generate-vrp, mutate, oracle, construct, evaluate,
report, budget, experiment. The CEPS_WORKERS environment variable caps
concurrency (default: logical core count).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ceps import instgen
from ceps import tsp as tsp_mod
from ceps import vrpspdtw as vrp_mod
from ceps.configurator import TuneBudget
from ceps.coevolution import METHODS, CepsSettings
from ceps.core import Portfolio, RunCache
from ceps.harness import (
    BUDGET_PRESETS,
    EvaluationReport,
    ExperimentSpec,
    budget_report,
    construct,
    evaluate_portfolio,
    generate_vrp_instances,
    leaked_fingerprints,
    load_spec_instances,
    preset_settings,
    split_train_test,
)
from ceps.problems import TSP, VRPSPDTW, Runner, make_problem, worker_count
from ceps.reporting import emit_report, write_summary


def _write_json(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# instance generation and mutation
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = instgen.GeneratorParams(n_cities=args.n_cities, n_clusters=args.n_clusters,
                                     intensity=args.intensity)
    for i in range(args.count):
        inst = instgen.generate(args.kind, params, args.seed * 100_003 + i)
        tsp_mod.write_tsplib(inst, out / f"{inst.name}.tsp")
    print(f"wrote {args.count} {args.kind} instances to {out}")
    return 0


def cmd_generate_vrp(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    instances = generate_vrp_instances(
        count=args.count, n_customers=args.n_customers, seed=args.seed,
        pool_size=args.pool_size, vehicles=args.vehicles,
        screen_cutoff=args.screen_cutoff)
    for inst in instances:
        vrp_mod.write_vrp(inst, out / f"{inst.name}.json")
    print(f"wrote {len(instances)} feasibility-screened instances to {out}")
    return 0


def cmd_mutate(args) -> int:
    src = Path(args.input)
    dst = Path(args.output)
    if src.suffix == ".tsp":
        inst = tsp_mod.read_tsplib(src)
        tsp_mod.write_tsplib(instgen.mutate_tsp(inst, args.seed), dst)
    elif src.suffix == ".json":
        inst = vrp_mod.read_vrp(src)
        vrp_mod.write_vrp(vrp_mod.mutate_vrp(inst, args.seed), dst)
    else:
        print(f"cannot tell the instance format of {src} (expect .tsp or .json)",
              file=sys.stderr)
        return 2
    print(f"wrote {dst}")
    return 0


def cmd_oracle(args) -> int:
    directory = Path(args.dir)
    instances = tsp_mod.load_instance_dir(directory)
    records = tsp_mod.load_optima(directory / tsp_mod.OPTIMA_FILENAME)
    mismatches = 0
    for inst in instances:
        exact_capable = inst.n <= tsp_mod.HELD_KARP_MAX_N
        if args.verify:
            if inst.reference_optimum is None:
                print(f"{inst.name}: no recorded optimum")
                mismatches += 1
            elif exact_capable:
                value = tsp_mod.held_karp_optimum(inst)
                if value != inst.reference_optimum:
                    print(f"{inst.name}: recorded {inst.reference_optimum}, exact {value}")
                    mismatches += 1
            continue
        if inst.reference_optimum is not None:
            continue
        if exact_capable:
            certified = inst.with_optimum(tsp_mod.held_karp_optimum(inst), tsp_mod.EXACT)
        else:
            certified = tsp_mod.certify_optimum(inst, args.cutoff, runs=args.runs)
        records[certified.fingerprint] = {
            "value": certified.reference_optimum,
            "provenance": certified.optimum_provenance,
        }
        print(f"{inst.name}: {certified.reference_optimum} ({certified.optimum_provenance})")
    if not args.verify:
        tsp_mod.save_optima(records, directory / tsp_mod.OPTIMA_FILENAME)
    if args.verify and mismatches:
        print(f"{mismatches} mismatches", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# construction / evaluation / reporting
# ---------------------------------------------------------------------------

def _settings_from_args(args) -> CepsSettings:
    return CepsSettings(
        k=args.k,
        max_ite=args.max_ite,
        n_paps=args.n_paps,
        init_sample_size=args.init_samples,
        t_init=TuneBudget(max_runs=args.budget_runs * 2),
        t_c=TuneBudget(max_runs=args.budget_runs),
        t_v=TuneBudget(max_runs=max(1, args.budget_runs // 2)),
        instance_evolution_generations=args.gens,
        seed=args.seed,
    )


def _portfolio_doc(portfolio: Portfolio) -> dict:
    return portfolio.to_dict()


def cmd_construct(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = worker_count()

    if args.spec:
        spec = ExperimentSpec.from_dict(json.loads(Path(args.spec).read_text()))
        problem = make_problem(spec.problem, spec.cutoff)
        instances = load_spec_instances(spec, problem)
        train, test = split_train_test(instances, spec.split_fraction, spec.seed)
    else:
        if not args.train_dir:
            print("construct needs --train-dir or --spec", file=sys.stderr)
            return 2
        settings = _settings_from_args(args)
        spec = ExperimentSpec(
            problem=args.problem, method=args.method,
            instances={"dir": args.train_dir}, settings=settings,
            cutoff=args.cutoff, seed=args.seed,
        )
        problem = make_problem(spec.problem, spec.cutoff)
        train = problem.load_instances(args.train_dir)
        test = []

    result = construct(spec, train, workers=workers)
    leaked = sorted(leaked_fingerprints(result.audit, test, problem)) if test else []

    _write_json(_portfolio_doc(result.portfolio), out / "portfolio.json")
    _write_json(_portfolio_doc(result.initial_portfolio), out / "initial_portfolio.json")
    result.audit.save(out / "audit.jsonl")
    result.runner.cache.save(out / "cache.jsonl")
    if test:
        _write_json({"test": [problem.instance_fingerprint(i) for i in test]},
                    out / "test_manifest.json")
    summary = {
        "method": spec.method,
        "problem": spec.problem,
        "seed": spec.seed,
        "K": spec.settings.k,
        "MaxIte": spec.settings.max_ite,
        "n": spec.settings.n_paps,
        "cutoff": spec.cutoff,
        "train": [problem.instance_fingerprint(i) for i in train],
        "portfolio": list(result.portfolio.fingerprints),
        "initial_portfolio": list(result.initial_portfolio.fingerprints),
        "training_score": result.runner.pap_set_score(
            result.portfolio.members, [problem.prepare(i) for i in train]),
        "pool": result.pool.fingerprints(),
        "audit_events": len(result.audit.events),
        "leakage": leaked,
    }
    write_summary(summary, out / "construct_summary.json")
    print(f"{spec.method}: portfolio {list(result.portfolio.fingerprints)} -> {out}")
    if leaked:
        print("leakage check FAILED", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    problem = make_problem(args.problem, args.cutoff)
    instances = [problem.prepare(i) for i in problem.load_instances(args.test_dir)]
    portfolio = Portfolio.from_dict(json.loads(Path(args.portfolio).read_text()))
    cache = RunCache.load(args.cache) if args.cache and Path(args.cache).exists() else None
    runner = Runner(problem, cache, workers=worker_count())
    report = evaluate_portfolio(portfolio, instances, runner, args.runs)
    doc = report.to_dict()
    doc["label"] = args.label
    _write_json(doc, Path(args.out))
    print(f"{args.label}: {report.metric_name}={report.aggregate:.4g} "
          f"#TOs={report.timeouts} over {len(instances)} instances -> {args.out}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        doc = json.loads(Path(path).read_text())
        reports.append((doc.get("label", Path(path).stem), EvaluationReport.from_dict(doc)))
    written = emit_report(reports, args.out)
    for name, path in sorted(written.items()):
        print(f"{name}: {path}")
    return 0


def cmd_budget(args) -> int:
    if args.preset:
        settings = preset_settings(args.problem, args.method, k=args.k,
                                   max_ite=args.max_ite, n_paps=args.n_paps)
    else:
        settings = CepsSettings(
            k=args.k, max_ite=args.max_ite, n_paps=args.n_paps,
            t_init=TuneBudget(wall_clock=args.t_init or 1e-9),
            t_c=TuneBudget(wall_clock=args.t_c),
            t_v=TuneBudget(wall_clock=args.t_v),
            t_i=TuneBudget(wall_clock=args.t_i or 1e-9),
        )
    estimate, warning = budget_report(args.method, settings, args.problem)
    print(f"{args.method} estimated total: {estimate:g}h")
    if warning:
        print(f"warning: {warning}")
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_dict(json.loads(Path(args.spec).read_text()))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from ceps.harness import run_experiment

    results = run_experiment(spec, workers=worker_count())
    for entry in results:
        repeat_dir = out / f"repeat{entry['repeat']}"
        repeat_dir.mkdir(exist_ok=True)
        result = entry["construction"]
        _write_json(_portfolio_doc(result.portfolio), repeat_dir / "portfolio.json")
        result.audit.save(repeat_dir / "audit.jsonl")
        emit_report([(spec.method, entry["report"])], repeat_dir,
                    context={"k": spec.settings.k, "max_ite": spec.settings.max_ite,
                             "n_paps": spec.settings.n_paps, "seed": entry["split_seed"]})
        report = entry["report"]
        print(f"repeat {entry['repeat']}: {report.metric_name}={report.aggregate:.4g} "
              f"#TOs={report.timeouts} (train {entry['train_size']}, "
              f"test {entry['test_size']})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ceps",
        description="Construct and evaluate parallel algorithm portfolios for "
                    "TSP and VRPSPDTW via co-evolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate TSP instances")
    p.add_argument("--kind", choices=instgen.GENERATOR_KINDS, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--n-cities", type=int, default=10)
    p.add_argument("--n-clusters", type=int, default=5)
    p.add_argument("--intensity", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("generate-vrp", help="generate feasibility-screened "
                                            "synthetic VRPSPDTW instances")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--n-customers", type=int, default=8)
    p.add_argument("--pool-size", type=int, default=60)
    p.add_argument("--vehicles", type=int, default=4)
    p.add_argument("--screen-cutoff", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate_vrp)

    p = sub.add_parser("mutate", help="mutate one instance file")
    p.add_argument("input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("oracle", help="compute or verify TSP reference optima")
    p.add_argument("--dir", required=True)
    p.add_argument("--cutoff", type=float, default=10.0,
                   help="experiment cutoff; consensus runs use 10x this")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("construct", help="construct a portfolio")
    p.add_argument("--method", choices=METHODS, default="ceps")
    p.add_argument("--problem", choices=(TSP, VRPSPDTW), default=TSP)
    p.add_argument("--train-dir")
    p.add_argument("--spec", help="ExperimentSpec JSON; overrides the flags above")
    p.add_argument("--K", dest="k", type=int, default=4)
    p.add_argument("--max-ite", type=int, default=4)
    p.add_argument("--n-paps", type=int, default=10)
    p.add_argument("--init-samples", type=int, default=16)
    p.add_argument("--budget-runs", type=int, default=40,
                   help="run-count budget per tune call")
    p.add_argument("--gens", type=int, default=10,
                   help="instance-evolution generations per iteration")
    p.add_argument("--cutoff", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("evaluate", help="evaluate a portfolio on a test set")
    p.add_argument("--portfolio", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--problem", choices=(TSP, VRPSPDTW), default=TSP)
    p.add_argument("--cutoff", type=float, default=10.0)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--cache", help="optional run-cache JSONL to reuse")
    p.add_argument("--label", default="portfolio")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="emit tables, summaries and boxplots")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("budget", help="closed-form CPU-time estimate")
    p.add_argument("--method", choices=("ceps", "global", "parhydra"), required=True)
    p.add_argument("--problem", choices=(TSP, VRPSPDTW), default=TSP)
    p.add_argument("--preset", action="store_true",
                   help="use the reference budget preset for --problem")
    p.add_argument("--t-c", type=float, default=BUDGET_PRESETS[TSP]["ceps"]["t_c"])
    p.add_argument("--t-v", type=float, default=BUDGET_PRESETS[TSP]["ceps"]["t_v"])
    p.add_argument("--t-i", type=float, default=BUDGET_PRESETS[TSP]["ceps"]["t_i"])
    p.add_argument("--t-init", type=float, default=BUDGET_PRESETS[TSP]["ceps"]["t_init"])
    p.add_argument("--K", dest="k", type=int, default=4)
    p.add_argument("--max-ite", type=int, default=4)
    p.add_argument("--n-paps", type=int, default=10)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("experiment", help="full protocol from an ExperimentSpec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
