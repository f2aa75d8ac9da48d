"""Experiment runner: RMS error and timing across methods and workload scenarios.

All randomness comes from one experiment seed split into named substreams
(data, workload, subpop, sample), so any stage can be varied on its own.
Timing columns are recorded only when ``timing`` is enabled; otherwise they
are written as zero and result files are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence, TextIO

import numpy as np

from .baselines import (
    bins_for_budget,
    build_equiwidth,
    build_maxent,
    build_sample,
    estimate_equiwidth,
    estimate_sample,
)
from .geometry import Box, Region, parse_box
from .model import ObservedQuery, UniformPrior
from .subpop import SubpopConfig
from .synth import (
    Dataset,
    WorkloadSpec,
    gen_gaussian,
    gen_uniform,
    gen_workload,
    label_workload,
    true_selectivity,
)
from .trainer import TrainConfig, assemble, fit, make_supports, solve_analytic, solve_projected_gradient

RESULT_COLUMNS = ("method", "n_observed", "params", "rms_error_pct", "train_ms", "estimate_us_mean", "seed")
METHODS = ("mixture", "mixture-clustering", "maxent-hist", "equiwidth", "sample")
STREAMS = {"data": 0, "workload": 1, "subpop": 2, "sample": 3, "test": 4}


class BenchError(ValueError):
    pass


@dataclass
class ExperimentResult:
    method: str
    n_observed: int
    params: int
    rms_error_pct: float
    train_ms: float
    estimate_us_mean: float
    seed: int
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d


def rms_error(truth: Sequence[float], est: Sequence[float]) -> float:
    """RMS error in percentage points."""
    t = np.asarray(truth, dtype=float)
    e = np.asarray(est, dtype=float)
    if t.shape != e.shape:
        raise BenchError(f"length mismatch: {t.shape} vs {e.shape}")
    if t.size == 0:
        raise BenchError("rms_error needs at least one value")
    return float(np.sqrt(np.mean((100.0 * t - 100.0 * e) ** 2)))


def substream(seed: int, name: str, *extra: int) -> int:
    """Deterministic 63-bit seed for a named stage of an experiment."""
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS[name], *extra))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))


@dataclass
class BenchConfig:
    kind: str = "learning_curve"
    seed: int = 0
    seeds: list[int] | None = None
    data: str = "gaussian"
    rows: int = 10_000
    dim: int = 2
    correlation: float = 0.5
    methods: list[str] = field(default_factory=lambda: ["mixture"])
    schedule: list[int] = field(default_factory=lambda: [10, 100])
    test_count: int = 100
    budget: int | None = None
    lam: float = 1e6
    constrained_dims: int | None = None
    timing: bool = False
    # workload shift
    shift: str = "jump"
    jump_regions: list[str] = field(default_factory=list)
    per_region: int = 100
    width: float = 0.2
    window: int = 10
    # solver comparison
    pg_max_iters: int = 10_000
    # scan comparison
    batch: int = 100
    batches: int = 10
    insert_rows: int = 2_000
    correlation_step: float = 0.1
    # file-driven evaluation
    data_path: str | None = None
    schema_path: str | None = None
    workload_path: str | None = None
    train_count: int | None = None
    output: str | None = None

    @classmethod
    def from_json(cls, obj: dict) -> BenchConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise BenchError(f"unknown config keys: {unknown}")
        cfg = cls(**obj)
        bad = [m for m in cfg.methods if m not in METHODS]
        if bad:
            raise BenchError(f"unknown methods {bad}; choose from {list(METHODS)}")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> BenchConfig:
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise BenchError(f"{path}: invalid JSON ({e})") from None
        return cls.from_json(obj)

    def all_seeds(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.seed]


# -- method plumbing -------------------------------------------------------------

@dataclass
class Built:
    estimate: Callable[[Region | Box], float]
    params: int
    train_ms: float


def build_method(
    method: str,
    queries: Sequence[ObservedQuery],
    data: Dataset,
    seed: int,
    budget: int | None = None,
    lam: float = 1e6,
) -> Built:
    """Train or build one estimator.

    ``budget`` caps the parameter count: subpopulations for the mixture,
    cells for the equiwidth histogram, tuples for the sample. Without it the
    mixture uses its default ``min(4n, 4000)`` and the scan baselines use 100.
    """
    domain = data.domain
    t0 = time.perf_counter()
    if method in ("mixture", "mixture-clustering"):
        sub = SubpopConfig(
            m_override=budget,
            seed=substream(seed, "subpop"),
            method="clustering" if method == "mixture-clustering" else "sampling",
        )
        model, _ = fit(queries, domain, TrainConfig(lam=lam), sub)
        built = Built(model.estimate, model.m, 0.0)
    elif method == "maxent-hist":
        hist = build_maxent(queries, domain)
        built = Built(hist.estimate, hist.params, 0.0)
    elif method == "equiwidth":
        h = build_equiwidth(data.tuples, bins_for_budget(budget or 100, domain.d), domain)
        built = Built(lambda p: estimate_equiwidth(h, p), h.params, 0.0)
    elif method == "sample":
        rng = np.random.default_rng(substream(seed, "sample"))
        e = build_sample(data.tuples, budget or 100, domain, rng)
        built = Built(lambda p: estimate_sample(e, p), e.sample_size, 0.0)
    else:
        raise BenchError(f"unknown method {method!r}")
    built.train_ms = (time.perf_counter() - t0) * 1e3
    return built


def evaluate(built: Built, tests: Sequence[Region | Box], truth: Sequence[float], timing: bool) -> tuple[float, float]:
    t0 = time.perf_counter()
    est = [built.estimate(p) for p in tests]
    us = (time.perf_counter() - t0) * 1e6 / len(tests)
    return rms_error(truth, est), (us if timing else 0.0)


def make_data(cfg: BenchConfig, seed: int, dim: int | None = None, correlation: float | None = None) -> Dataset:
    dim = cfg.dim if dim is None else dim
    ds = substream(seed, "data")
    if cfg.data == "uniform":
        return gen_uniform(cfg.rows, dim, ds)
    if cfg.data == "gaussian":
        return gen_gaussian(cfg.rows, dim, cfg.correlation if correlation is None else correlation, ds)
    raise BenchError(f"unknown data kind {cfg.data!r}")


def _result(method, n, built, rms, us, seed, timing) -> ExperimentResult:
    return ExperimentResult(method, n, built.params, rms, built.train_ms if timing else 0.0, us, seed)


# -- experiments -----------------------------------------------------------------

def run_learning_curve(cfg: BenchConfig) -> list[ExperimentResult]:
    """Error versus number of observed queries, on held-out test predicates."""
    out = []
    n_max = max(cfg.schedule)
    for seed in cfg.all_seeds():
        data = make_data(cfg, seed)
        spec = WorkloadSpec("random", n_max + cfg.test_count, constrained_dims=cfg.constrained_dims)
        preds = gen_workload(spec, data.domain, substream(seed, "workload"))
        train_preds, tests = preds[:n_max], preds[n_max:]
        queries = label_workload(data, train_preds)
        truth = [true_selectivity(data, p) for p in tests]
        for n in cfg.schedule:
            for method in cfg.methods:
                built = build_method(method, queries[:n], data, seed, cfg.budget, cfg.lam)
                rms, us = evaluate(built, tests, truth, cfg.timing)
                out.append(_result(method, n, built, rms, us, seed, cfg.timing))
    return out


def run_workload_shift(cfg: BenchConfig) -> list[ExperimentResult]:
    """Windowed error while the workload moves.

    ``shift`` picks the stream: ``jump`` visits each box in ``jump_regions``
    for ``per_region`` queries; ``no_shift`` repeats one box and
    ``sliding_shift`` slides a window of side ``width`` across the domain,
    both for ``per_region`` queries in total. Before each window of
    ``window`` queries is added to the training set, the current model is
    scored on that window, then retrained on everything seen so far. Jump
    windows are scored on ``test_count`` fresh predicates inside the current
    region instead, since ten queries give too noisy a reading around the
    jump. ``extra`` carries the window index and region.
    """
    if cfg.shift not in ("jump", "no_shift", "sliding_shift"):
        raise BenchError(f"unknown shift {cfg.shift!r}")
    if cfg.shift == "jump" and not cfg.jump_regions:
        raise BenchError("a jump shift needs jump_regions")
    regions = tuple(parse_box(r) for r in cfg.jump_regions)
    dim = regions[0].d if regions else cfg.dim
    out = []
    for seed in cfg.all_seeds():
        data = make_data(cfg, seed, dim=dim)
        count = cfg.per_region * len(regions) if cfg.shift == "jump" else cfg.per_region
        spec = WorkloadSpec(cfg.shift, count, jump_regions=regions, width=cfg.width)
        stream = gen_workload(spec, data.domain, substream(seed, "workload"))
        labeled = label_workload(data, stream)
        starts = list(range(0, count, cfg.window))
        window_tests = []
        for wi, start in enumerate(starts):
            if cfg.shift == "jump":
                ri = start // cfg.per_region
                tests = gen_workload(WorkloadSpec("random", cfg.test_count), regions[ri],
                                     substream(seed, "test", wi))
                truth = [true_selectivity(data, p) for p in tests]
            else:
                ri = 0
                window = labeled[start:start + cfg.window]
                tests, truth = [q.predicate for q in window], [q.selectivity for q in window]
            window_tests.append((ri, tests, truth))
        for method in cfg.methods:
            built = Built(UniformPrior(data.domain).estimate, 1, 0.0)
            for wi, start in enumerate(starts):
                ri, tests, truth = window_tests[wi]
                rms, us = evaluate(built, tests, truth, cfg.timing)
                res = _result(method, start, built, rms, us, seed, cfg.timing)
                res.extra = {"window": wi, "region": ri}
                out.append(res)
                built = build_method(method, labeled[:start + cfg.window], data, seed, cfg.budget, cfg.lam)
    return out


def run_solver_comparison(cfg: BenchConfig) -> list[dict]:
    """Time the analytic and projected-gradient solvers on identical systems.

    The millisecond columns stay zero unless ``timing`` is set.
    """
    rows = []
    seed = cfg.seed
    data = make_data(cfg, seed)
    n_max = max(cfg.schedule)
    preds = gen_workload(WorkloadSpec("random", n_max), data.domain, substream(seed, "workload"))
    queries = label_workload(data, preds)
    for n in cfg.schedule:
        tc = TrainConfig(lam=cfg.lam, pg_max_iters=cfg.pg_max_iters)
        sub = SubpopConfig(m_override=cfg.budget, seed=substream(seed, "subpop"))
        supports = make_supports(queries[:n], data.domain, tc, sub)
        sys = assemble(queries[:n], supports, tc, data.domain)
        a = solve_analytic(sys, tc)
        p = solve_projected_gradient(sys, tc)
        rows.append({
            "n_observed": n,
            "m": len(supports),
            "analytic_ms": a.seconds * 1e3 if cfg.timing else 0.0,
            "pg_ms": p.seconds * 1e3 if cfg.timing else 0.0,
            "pg_iterations": p.iterations,
            "pg_converged": p.converged,
            "analytic_objective": sys.objective(a.weights),
            "pg_objective": sys.objective(p.weights),
        })
    return rows


def needs_refresh(rows_now: int, rows_at_build: int, fraction: float) -> bool:
    """Scan-based statistics are rebuilt once more than ``fraction`` of the rows changed."""
    return rows_now - rows_at_build > fraction * rows_at_build


def run_scan_comparison(cfg: BenchConfig) -> list[ExperimentResult]:
    """Query-driven versus scan-based estimators while data drifts.

    Data starts at correlation 0. After every batch of queries a block of
    ``insert_rows`` tuples with correlation raised by ``correlation_step`` is
    appended. The mixture retrains on all queries so far after each batch;
    the histogram and the sample are rebuilt only once more than 20% and 10%
    of the data changed since their last build.
    """
    out = []
    for seed in cfg.all_seeds():
        data = make_data(cfg, seed, correlation=0.0)
        spec = WorkloadSpec("random", cfg.batch * cfg.batches, constrained_dims=cfg.constrained_dims)
        preds = gen_workload(spec, data.domain, substream(seed, "workload"))
        tests = gen_workload(WorkloadSpec("random", cfg.test_count, constrained_dims=cfg.constrained_dims),
                             data.domain, substream(seed, "test"))
        built: dict[str, Built] = {}
        rows_at_build: dict[str, int] = {}
        labeled: list[ObservedQuery] = []
        refresh = {"equiwidth": 0.2, "sample": 0.1}
        for b in range(cfg.batches):
            batch = preds[b * cfg.batch:(b + 1) * cfg.batch]
            truth = [true_selectivity(data, p) for p in tests]
            for method in cfg.methods:
                if method in refresh:
                    if method not in built or needs_refresh(data.N, rows_at_build[method], refresh[method]):
                        built[method] = build_method(method, labeled, data, seed, cfg.budget, cfg.lam)
                        rows_at_build[method] = data.N
                elif method not in built:
                    built[method] = Built(UniformPrior(data.domain).estimate, 1, 0.0)
                rms, us = evaluate(built[method], tests, truth, cfg.timing)
                res = _result(method, len(labeled), built[method], rms, us, seed, cfg.timing)
                res.extra = {"batch": b, "rows": data.N}
                out.append(res)
            labeled.extend(label_workload(data, batch))
            for method in cfg.methods:
                if method not in refresh:
                    built[method] = build_method(method, labeled, data, seed, cfg.budget, cfg.lam)
            rng = np.random.default_rng(substream(seed, "data", b + 1))
            more = gen_gaussian(cfg.insert_rows, data.schema.d, min(0.95, (b + 1) * cfg.correlation_step),
                                int(rng.integers(2**62)))
            data = data.extend(more.tuples)
    return out


def run_evaluate(cfg: BenchConfig) -> list[ExperimentResult]:
    """Train on the first ``train_count`` labeled queries of a workload file and test on the rest."""
    from .encode import SchemaSpec, load_schema
    from .synth import load_csv, load_workload

    if not (cfg.data_path and cfg.workload_path):
        raise BenchError("evaluate needs data_path and workload_path")
    schema_path = cfg.schema_path or str(Path(cfg.data_path).with_suffix(".schema.json"))
    schema = load_schema(schema_path) if Path(schema_path).exists() else SchemaSpec.unit(cfg.dim)
    data = load_csv(cfg.data_path, schema)
    wl = load_workload(cfg.workload_path)
    queries = wl.queries(data.domain)
    k = cfg.train_count if cfg.train_count is not None else len(queries) // 2
    train_q, test_q = queries[:k], queries[k:]
    if not test_q:
        raise BenchError("no test queries left after the training split")
    tests = [q.predicate for q in test_q]
    truth = [q.selectivity for q in test_q]
    out = []
    for method in cfg.methods:
        built = build_method(method, train_q, data, cfg.seed, cfg.budget, cfg.lam)
        rms, us = evaluate(built, tests, truth, cfg.timing)
        out.append(_result(method, len(train_q), built, rms, us, cfg.seed, cfg.timing))
    return out


RUNNERS = {
    "learning_curve": run_learning_curve,
    "workload_shift": run_workload_shift,
    "solver_comparison": run_solver_comparison,
    "scan_comparison": run_scan_comparison,
    "evaluate": run_evaluate,
}


def run(cfg: BenchConfig) -> list:
    try:
        runner = RUNNERS[cfg.kind]
    except KeyError:
        raise BenchError(f"unknown experiment kind {cfg.kind!r}; choose from {sorted(RUNNERS)}") from None
    return runner(cfg)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: Sequence[ExperimentResult | dict], dest: str | Path | TextIO) -> None:
    """CSV with the fixed result header, or the dict keys for solver tables."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            return write_results(rows, fh)
    w = csv.writer(dest, lineterminator="\n")
    if rows and isinstance(rows[0], dict):
        header = list(rows[0])
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])
        return
    extra_keys = sorted({k for r in rows for k in r.extra})
    w.writerow(list(RESULT_COLUMNS) + extra_keys)
    for r in rows:
        d = r.row()
        w.writerow([_fmt(d[c]) for c in RESULT_COLUMNS] + [_fmt(r.extra.get(k, "")) for k in extra_keys])
