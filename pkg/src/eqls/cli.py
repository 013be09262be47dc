"""Command line: ``eqls bench|run|verify|list-gates``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .evaluate import FitnessParams, read_target
from .evolve import GAConfig, MUTATION_KINDS, run
from .gates import PRIMITIVE_SET, builtin_catalog, catalog_listing
from .genome import decode, parse_restrictions, read_genomes
from .minimize import format_merge_events, minimize

log = logging.getLogger("eqls")


def _config_defaults(path: str | None) -> dict[str, str]:
    """key=value lines; keys are flag names without dashes, '-' or '_' alike."""
    if not path:
        return {}
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise SystemExit(f"{path}:{n}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _add_ga_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["classical", "baldwinian", "lamarckian"], default="classical")
    p.add_argument("--no-wgs", action="store_true", help="lamarckian mode with uniform mutation instead of WGS")
    p.add_argument("--fitness", choices=["f0", "f1"], default="f1")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--restrict", action="append", default=None, metavar="GATE=WIRES",
                   help="confine a gate to wires, e.g. H3=2; repeatable; 'none' clears defaults")
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--gens", type=int, default=10000)
    p.add_argument("--mutation-rate", type=float, default=0.05)
    p.add_argument("--mutation-kind", choices=MUTATION_KINDS, default="free")
    p.add_argument("--crossover-rate", type=float, default=0.8)
    p.add_argument("--eigs-cap", type=int, default=50)
    p.add_argument("--pool", default=",".join(PRIMITIVE_SET), help="comma-separated gate ids")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--no-elitism", action="store_true")
    p.add_argument("--seed-circuit", metavar="FILE", help="genome file whose circuits join the initial population")
    p.add_argument("--report", metavar="FILE", help="write the report here instead of stdout")
    p.add_argument("--dump-merges", metavar="FILE", help="write the best circuit's merge events")
    p.add_argument("--workers", type=int, default=None, help="parallel runs (default: $EQLS_WORKERS or 1)")
    p.add_argument("--config", metavar="FILE", help="key=value defaults for any flag")


def _ga_config(args, restrictions) -> GAConfig:
    seeds = ()
    if args.seed_circuit:
        seeds = tuple(g.text for g in read_genomes(args.seed_circuit))
    return GAConfig(
        mode=args.mode,
        population_size=args.pop,
        max_generations=args.gens,
        mutation_rate=args.mutation_rate,
        mutation_kind=args.mutation_kind,
        crossover_rate=args.crossover_rate,
        fitness=FitnessParams(args.alpha, args.beta, args.fitness),
        restrictions=restrictions,
        eigs_cap=args.eigs_cap,
        rng_seed=args.seed,
        use_wgs=not args.no_wgs,
        elitism=0 if args.no_elitism else 1,
        pool=tuple(g.strip() for g in args.pool.split(",") if g.strip()),
        seed_genomes=seeds,
    )


def _restrictions(args, defaults):
    if args.restrict is None:
        return dict(defaults)
    items = [r for r in args.restrict if r.lower() != "none"]
    return parse_restrictions(items)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_merges(path: str, genome: str, target, cfg: GAConfig) -> None:
    from .evolve import pool_lexicon

    lex = pool_lexicon(cfg.pool, target.n_wires, target.radix)
    res = minimize(decode(genome, lex), lex.overlay(), "baldwinian")
    Path(path).write_text(format_merge_events(res.events, res.lexicon))


def _run_target(args, target, restrictions) -> int:
    cfg = _ga_config(args, restrictions)
    if args.runs == 1:
        rep = run(cfg, target)
        _emit(rep.to_text(), args.report)
        if args.dump_merges:
            _dump_merges(args.dump_merges, rep.best.genome, target, cfg)
        return 0 if rep.success else 1
    texts = []
    for k in range(args.runs):
        rep = run(replace(cfg, rng_seed=args.seed + k), target)
        texts.append(rep.to_text())
    _emit("\n".join(texts), args.report)
    return 0


def cmd_bench(args) -> int:
    names = bench.BENCHMARKS if args.name.lower() == "all" else [args.name]
    b0 = bench.load_benchmark(names[0], args.any_toffoli_variant)
    restrictions = _restrictions(args, b0.restrictions)
    base = _ga_config(args, restrictions)
    if args.compare:
        configs = bench.comparison_configs(args.compare, base, restrictions or b0.restrictions)
    else:
        configs = {args.mode: base}
    if len(names) > 1 and args.restrict is None:
        # per-benchmark default restrictions
        results = [
            bench.run_campaign([n], _with_defaults(configs, bench.load_benchmark(n), args.compare), args.runs,
                               range(args.seed, args.seed + args.runs), args.workers, args.any_toffoli_variant)
            for n in names
        ]
        result = bench.CampaignResult(
            [r for res in results for r in res.rows],
            [a for res in results for a in res.aggregates],
            [t for res in results for t in res.reports],
        )
    else:
        result = bench.run_campaign(names, configs, args.runs, range(args.seed, args.seed + args.runs), args.workers,
                                    args.any_toffoli_variant)
    out = [
        "# summary", bench.render_table(result, list(configs), cost=args.fitness_table),
        "# aggregates", bench.render_aggregates(result),
        "# runs", bench.render_runs(result),
    ]
    _emit("\n".join(out), args.report)
    if args.reports_dir:
        d = Path(args.reports_dir)
        d.mkdir(parents=True, exist_ok=True)
        for b, label, seed, text in result.reports:
            (d / f"{b}_{label}_{seed}.txt").write_text(text)
    return 0


def _with_defaults(configs, b, compare):
    out = {}
    for label, cfg in configs.items():
        if compare == "restrictions" and label == "unrestricted":
            out[label] = cfg
        else:
            out[label] = replace(cfg, restrictions=dict(b.restrictions))
    return out


def cmd_run(args) -> int:
    try:
        b = bench.load_benchmark(args.target, args.any_toffoli_variant)
        target, defaults = b.target, b.restrictions
    except bench.BenchmarkError:
        if not Path(args.target).exists():
            raise SystemExit(f"--target {args.target!r} is neither a benchmark nor a file")
        target, defaults = read_target(args.target), {}
    return _run_target(args, target, _restrictions(args, defaults))


def cmd_verify(args) -> int:
    checks = bench.verify_constructions()
    text = bench.format_checks(checks)
    claim = bench.miller_majority_claim()
    text += "info  Miller output wires equal to majority: " + ", ".join(f"wire {w}: {'yes' if ok else 'no'}" for w, ok in claim) + "\n"
    _emit(text, args.report)
    return 0 if all(c.passed for c in checks) else 1


def cmd_list_gates(args) -> int:
    gates = builtin_catalog()
    if args.radix:
        gates = [g for g in gates if g.radix == args.radix]
    print(catalog_listing(gates))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqls", description="Genetic search for reversible circuits over qutrit gates.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a benchmark campaign")
    b.add_argument("name", help=f"one of {', '.join(bench.BENCHMARKS)} or 'all'")
    _add_ga_flags(b)
    b.add_argument("--compare", choices=bench.COMPARISONS, help="run a standard comparison instead of one config")
    b.add_argument("--any-toffoli-variant", action="store_true", help="accept the [101,100] Toffoli as well")
    b.add_argument("--fitness-table", action="store_true", help="summary columns show Cost/Corr")
    b.add_argument("--reports-dir", metavar="DIR", help="also write every run report here")
    b.set_defaults(func=cmd_bench, runs=10)

    r = sub.add_parser("run", help="evolve one target")
    r.add_argument("--target", required=True, help="benchmark name or target file")
    _add_ga_flags(r)
    r.add_argument("--any-toffoli-variant", action="store_true")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check the hand-built constructions")
    v.add_argument("--report", metavar="FILE")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("list-gates", help="print the gate catalog")
    g.add_argument("--radix", type=int, choices=[2, 3])
    g.set_defaults(func=cmd_list_gates)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # a --config file supplies defaults that explicit flags override
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        defaults = _config_defaults(known.config)
        for action in parser._subparsers._group_actions[0].choices.values():
            valid = {a.dest for a in action._actions}
            action.set_defaults(**{k: _coerce(action, k, v) for k, v in defaults.items() if k in valid})
        args = parser.parse_args(argv)
        unknown = set(defaults) - {a.dest for a in parser._subparsers._group_actions[0].choices[args.command]._actions}
        if unknown:
            parser.error(f"unknown keys in {known.config}: {', '.join(sorted(unknown))}")
    else:
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


def _coerce(parser: argparse.ArgumentParser, dest: str, value: str):
    for a in parser._actions:
        if a.dest != dest:
            continue
        if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            return value.lower() in ("1", "true", "yes", "on")
        if isinstance(a, argparse._AppendAction):
            return [v.strip() for v in value.split(";") if v.strip()]
        if a.type is not None:
            return a.type(value)
        return value
    return value


if __name__ == "__main__":
    sys.exit(main())
