"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
The default seed is 0 unless ``SELEST_SEED`` is set.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, bench, model as model_mod, synth
from .encode import SchemaSpec, load_schema, save_schema
from .geometry import Box, GeometryError, parse_box, parse_region
from .subpop import SubpopConfig
from .trainer import TrainConfig, assemble, dump_system, fit, make_supports

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("SELEST_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SELEST_SEED must be an integer, got {raw!r}") from None


def _schema_for(data_path: str, schema_path: str | None) -> SchemaSpec:
    path = Path(schema_path) if schema_path else Path(data_path).with_suffix(".schema.json")
    if not path.exists():
        raise synth.DataError(f"schema file {path} not found (pass --schema)")
    return load_schema(path)


def _domain_for(args, wl: synth.WorkloadFile | None = None) -> Box:
    if getattr(args, "domain", None):
        return parse_box(args.domain)
    if wl is not None and wl.domain is not None:
        return wl.domain
    if getattr(args, "dim", None):
        return Box.unit(args.dim)
    raise synth.DataError("no domain: pass --domain or use a workload file with a '# domain:' header")


def _training_queries(args):
    wl = synth.load_workload(args.workload)
    domain = _domain_for(args, wl)
    queries = wl.queries(domain)
    if args.first is not None:
        queries = queries[:args.first]
    if not queries:
        raise synth.DataError("no observed queries to train on")
    return queries, domain


def _configs(args) -> tuple[TrainConfig, SubpopConfig]:
    tc = TrainConfig(
        lam=args.lam,
        ridge=args.ridge,
        solver="projected_gradient" if args.solver == "pg" else "analytic",
    )
    sc = SubpopConfig(
        points_per_predicate=args.points_per_predicate,
        m_override=args.m,
        neighbor_count=args.neighbors,
        seed=args.seed,
        method=args.subpop,
    )
    return tc, sc


# -- commands ------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    if args.distribution == "uniform":
        data = synth.gen_uniform(args.rows, args.dim, args.seed)
    else:
        data = synth.gen_gaussian(args.rows, args.dim, args.correlation, args.seed)
    synth.save_csv(data, args.out)
    schema_path = Path(args.out).with_suffix(".schema.json")
    save_schema(data.schema, schema_path)
    print(f"wrote {data.N} rows to {args.out} (schema {schema_path})")
    return 0


def cmd_gen_workload(args) -> int:
    domain = _domain_for(args)
    regions = tuple(parse_box(r) for r in args.regions.split(";")) if args.regions else ()
    spec = synth.WorkloadSpec(
        kind=args.kind.replace("-", "_"),
        count=args.count,
        selectivity_target=args.selectivity_target,
        seed=args.seed,
        jump_regions=regions,
        width=args.width,
        constrained_dims=args.constrained_dims,
    )
    preds = synth.gen_workload(spec, domain)
    synth.save_workload(args.out, preds, domain)
    print(f"wrote {len(preds)} predicates to {args.out}")
    return 0


def cmd_label(args) -> int:
    data = synth.load_csv(args.data, _schema_for(args.data, args.schema))
    wl = synth.load_workload(args.workload)
    queries = synth.label_workload(data, wl.predicates)
    synth.save_labeled(args.out, queries, data.domain)
    msg = f"labeled {len(queries)} predicates against {data.N} rows"
    if data.rejected:
        msg += f" ({data.rejected} rows rejected)"
    print(msg)
    return 0


def cmd_train(args) -> int:
    queries, domain = _training_queries(args)
    if args.method == "maxent-hist":
        hist = baselines.build_maxent(queries, domain)
        mdl = hist.as_mixture()
    else:
        tc, sc = _configs(args)
        mdl, _ = fit(queries, domain, tc, sc)
    model_mod.save(mdl, args.out)
    res = model_mod.training_residuals(mdl, queries)
    print(f"m={mdl.m} sum_w={mdl.total_mass!r} max_residual={float(np.max(np.abs(res)))!r} "
          f"mean_abs_residual={float(np.mean(np.abs(res)))!r}")
    return 0


def cmd_estimate(args) -> int:
    mdl = model_mod.load(args.model)
    est = mdl.estimate(parse_region(args.predicate))
    print(f"{est!r} {100.0 * est:.6f}%")
    return 0


def cmd_bench(args) -> int:
    cfg = bench.BenchConfig.load(args.config)
    rows = bench.run(cfg)
    out = args.out or cfg.output
    if out:
        bench.write_results(rows, out)
        print(f"wrote {len(rows)} result rows to {out}")
    else:
        bench.write_results(rows, sys.stdout)
    return 0


def cmd_dump_system(args) -> int:
    queries, domain = _training_queries(args)
    tc, sc = _configs(args)
    supports = make_supports(queries, domain, tc, sc)
    sys_ = assemble(queries, supports, tc, domain)
    dump_system(sys_, args.out)
    print(f"wrote Q {sys_.m}x{sys_.m}, A {sys_.n}x{sys_.m}, s {sys_.n} to {args.out}")
    return 0


# -- parser --------------------------------------------------------------------

def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help="labeled workload file")
    p.add_argument("--domain", help="domain box text; defaults to the workload's '# domain:' header")
    p.add_argument("--first", type=int, help="use only the first N observed queries")
    p.add_argument("--subpop", choices=["sampling", "clustering"], default="sampling",
                   help="subpopulation generator")
    p.add_argument("--solver", choices=["analytic", "pg"], default="analytic",
                   help="analytic penalized solve or projected gradient")
    p.add_argument("--lambda", dest="lam", type=float, default=1e6, help="consistency penalty weight")
    p.add_argument("--ridge", type=float, default=1e-8, help="diagonal regularizer, relative to the diagonal of Q")
    p.add_argument("--points-per-predicate", type=int, default=10, help="random points per predicate")
    p.add_argument("--neighbors", type=int, default=10, help="nearest centers used to size a support")
    p.add_argument("--m", type=int, default=None, help="number of subpopulations (default min(4n, 4000))")


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="selest", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV", formatter_class=fmt)
    p.add_argument("--dim", type=int, default=2, help="number of attributes")
    p.add_argument("--rows", type=int, default=10_000, help="number of tuples")
    p.add_argument("--correlation", type=float, default=0.5, help="pairwise correlation")
    p.add_argument("--distribution", choices=["gaussian", "uniform"], default="gaussian", help="data distribution")
    p.add_argument("--seed", type=int, default=seed, help="random seed")
    p.add_argument("--out", required=True, help="output CSV; the schema is written next to it")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gen-workload", help="generate query predicates", formatter_class=fmt)
    p.add_argument("--kind", choices=["random", "sliding-shift", "no-shift", "jump"], default="random",
                   help="workload pattern")
    p.add_argument("--count", type=int, default=100, help="number of predicates")
    p.add_argument("--dim", type=int, default=2, help="dimension of the unit domain")
    p.add_argument("--domain", help="domain box text (overrides --dim)")
    p.add_argument("--regions", help="';'-separated boxes for the jump workload")
    p.add_argument("--width", type=float, default=0.2, help="window side fraction for sliding-shift")
    p.add_argument("--selectivity-target", type=float, default=None, help="predicate volume fraction")
    p.add_argument("--constrained-dims", type=int, default=None, help="attributes constrained per predicate")
    p.add_argument("--seed", type=int, default=seed, help="random seed")
    p.add_argument("--out", required=True, help="output workload file")
    p.set_defaults(func=cmd_gen_workload)

    p = sub.add_parser("label", help="attach true selectivities to a workload", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--schema", help="schema JSON (default: <data>.schema.json)")
    p.add_argument("--workload", required=True, help="workload file")
    p.add_argument("--out", required=True, help="labeled workload output")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train a model from observed queries", formatter_class=fmt)
    _add_training_flags(p)
    p.add_argument("--method", choices=["mixture", "maxent-hist"], default="mixture", help="model family")
    p.add_argument("--seed", type=int, default=seed, help="random seed")
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="estimate the selectivity of a predicate", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--predicate", required=True, help="box text, 'U'-joined for unions")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="run an experiment from a JSON config", formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", help="results CSV (default: config 'output' or stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump-system", help="write the Q/A/s training system", formatter_class=fmt)
    _add_training_flags(p)
    p.add_argument("--seed", type=int, default=seed, help="random seed")
    p.add_argument("--out", required=True, help="output matrix text file")
    p.set_defaults(func=cmd_dump_system)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
    except UsageError as e:
        print(f"selest: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"selest: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, GeometryError, OSError) as e:
        print(f"selest: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
