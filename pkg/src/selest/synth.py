"""Synthetic datasets and query workloads, ground-truth selectivities, CSV I/O."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encode import SchemaError, SchemaSpec, encode_domain, encode_row
from .geometry import (
    Box,
    GeometryError,
    Region,
    as_region,
    format_box,
    format_region,
    parse_box,
    parse_region,
    points_in_region,
)
from .model import ObservedQuery

log = logging.getLogger(__name__)

WORKLOAD_KINDS = ("random", "sliding_shift", "no_shift", "jump")


class DataError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: SchemaSpec
    tuples: np.ndarray
    rejected: int = 0

    def __post_init__(self):
        t = np.asarray(self.tuples, dtype=float).reshape(-1, self.schema.d)
        object.__setattr__(self, "tuples", t)

    @property
    def domain(self) -> Box:
        return encode_domain(self.schema)

    @property
    def N(self) -> int:
        return len(self.tuples)

    def extend(self, more: np.ndarray) -> Dataset:
        return Dataset(self.schema, np.vstack([self.tuples, more]))


def gen_gaussian(n_tuples: int, dim: int, correlation: float, seed: int,
                 mean: float = 0.5, std: float = 0.15) -> Dataset:
    """Equicorrelated multivariate normal mapped into ``[0, 1]^dim`` and clamped."""
    if dim < 1:
        raise DataError("dim must be at least 1")
    cov = (1.0 - correlation) * np.eye(dim) + correlation * np.ones((dim, dim))
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise DataError(f"correlation {correlation} does not give a positive definite covariance") from None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_tuples, dim)) @ L.T
    x = np.clip(mean + std * z, 0.0, 1.0)
    return Dataset(SchemaSpec.unit(dim), x)


def gen_uniform(n_tuples: int, dim: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(SchemaSpec.unit(dim), rng.random((n_tuples, dim)))


@dataclass(frozen=True)
class WorkloadSpec:
    """What kind of predicate stream to generate.

    ``width`` is the side of a sliding or fixed window as a fraction of each
    domain side; ``constrained_dims`` limits each random predicate to that
    many randomly chosen attributes (the rest span the full domain).
    """

    kind: str = "random"
    count: int = 100
    selectivity_target: float | None = None
    seed: int = 0
    jump_regions: tuple[Box, ...] = field(default_factory=tuple)
    width: float = 0.2
    constrained_dims: int | None = None

    def __post_init__(self):
        if self.kind not in WORKLOAD_KINDS:
            raise DataError(f"unknown workload kind {self.kind!r}")
        if self.count < 1:
            raise DataError("workload count must be at least 1")
        if self.kind == "jump" and not self.jump_regions:
            raise DataError("a jump workload needs jump_regions")
        object.__setattr__(self, "jump_regions", tuple(self.jump_regions))


def _random_box(region: Box, rng: np.random.Generator, target: float | None,
                constrained: int | None) -> Box:
    d = region.d
    lo = np.array(region.lo)
    hi = np.array(region.hi)
    dims = np.arange(d) if constrained is None else np.sort(rng.choice(d, size=min(constrained, d), replace=False))
    a, b = lo.copy(), hi.copy()
    if target is None:
        u = np.sort(rng.random((len(dims), 2)), axis=1)
        a[dims] = lo[dims] + u[:, 0] * (hi[dims] - lo[dims])
        b[dims] = lo[dims] + u[:, 1] * (hi[dims] - lo[dims])
    else:
        side = target ** (1.0 / len(dims))
        start = rng.random(len(dims)) * (1.0 - side)
        a[dims] = lo[dims] + start * (hi[dims] - lo[dims])
        b[dims] = a[dims] + side * (hi[dims] - lo[dims])
    return Box(tuple(a), tuple(b))


def gen_workload(spec: WorkloadSpec, domain: Box, seed: int | None = None) -> list[Box]:
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    if spec.kind == "random":
        return [_random_box(domain, rng, spec.selectivity_target, spec.constrained_dims) for _ in range(spec.count)]
    if spec.kind == "no_shift":
        b = _random_box(domain, rng, spec.selectivity_target, spec.constrained_dims)
        return [b] * spec.count
    if spec.kind == "sliding_shift":
        lo = np.array(domain.lo)
        span = np.array(domain.hi) - lo
        w = spec.width * span
        steps = np.linspace(0.0, 1.0, spec.count) if spec.count > 1 else np.zeros(1)
        out = []
        for t in steps:
            a = lo + t * (span - w)
            out.append(Box(tuple(a), tuple(np.minimum(a + w, domain.hi))))
        return out
    # jump: the stream moves through the regions in order, an even share each
    k = len(spec.jump_regions)
    shares = [spec.count // k + (1 if i < spec.count % k else 0) for i in range(k)]
    out = []
    for region, c in zip(spec.jump_regions, shares):
        out.extend(_random_box(region, rng, spec.selectivity_target, spec.constrained_dims) for _ in range(c))
    return out


def true_selectivity(data: Dataset, predicate: Box | Region) -> float:
    if data.N == 0:
        raise DataError("empty dataset")
    return float(points_in_region(data.tuples, as_region(predicate), data.domain).mean())


def label_workload(data: Dataset, predicates: Sequence[Box | Region]) -> list[ObservedQuery]:
    dom = data.domain
    return [ObservedQuery.within(dom, p, true_selectivity(data, p)) for p in predicates]


# -- files -------------------------------------------------------------------

def load_csv(path: str | Path, schema: SchemaSpec) -> Dataset:
    """Read a header-matched CSV; rows with unparseable or unknown values are skipped and counted."""
    rows, rejected = [], 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty CSV") from None
        header = [h.strip() for h in header]
        missing = [n for n in schema.names if n not in header]
        if missing:
            raise DataError(f"{path}: CSV lacks columns {missing}")
        pos = [header.index(n) for n in schema.names]
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                if len(rec) != len(header):
                    raise SchemaError(f"expected {len(header)} fields, got {len(rec)}")
                rows.append(encode_row(schema, [rec[p].strip() for p in pos]))
            except SchemaError as e:
                rejected += 1
                log.warning("%s:%d rejected: %s", path, lineno, e)
    if rejected:
        log.info("%s: %d rows rejected", path, rejected)
    return Dataset(schema, np.array(rows).reshape(-1, schema.d), rejected)


def save_csv(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.schema.names)
        cols = data.schema.columns
        for row in data.tuples:
            w.writerow([repr(float(c.decode_value(x))) if c.kind == "real" else c.decode_value(x)
                        for c, x in zip(cols, row)])


def save_workload(path: str | Path, predicates: Sequence[Box | Region], domain: Box | None = None,
                  selectivities: Sequence[float] | None = None) -> None:
    """One predicate per line, optionally followed by ``,selectivity``; the domain goes in a header comment."""
    with open(path, "w") as fh:
        if domain is not None:
            fh.write(f"# domain: {format_box(domain)}\n")
        for i, p in enumerate(predicates):
            line = format_region(as_region(p))
            if selectivities is not None:
                line += f",{float(selectivities[i])!r}"
            fh.write(line + "\n")


def save_labeled(path: str | Path, queries: Sequence[ObservedQuery], domain: Box | None = None) -> None:
    save_workload(path, [q.predicate for q in queries], domain, [q.selectivity for q in queries])


@dataclass
class WorkloadFile:
    predicates: list[Region]
    selectivities: list[float] | None
    domain: Box | None

    def queries(self, domain: Box | None = None) -> list[ObservedQuery]:
        dom = domain or self.domain
        if self.selectivities is None:
            raise DataError("workload is not labeled")
        if dom is None:
            return [ObservedQuery(p, s) for p, s in zip(self.predicates, self.selectivities)]
        return [ObservedQuery.within(dom, p, s) for p, s in zip(self.predicates, self.selectivities)]


def load_workload(path: str | Path) -> WorkloadFile:
    preds: list[Region] = []
    sels: list[float] = []
    domain = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("domain:"):
                    try:
                        domain = parse_box(body[len("domain:"):])
                    except GeometryError as e:
                        raise DataError(f"{path}:{lineno}: {e}") from None
                continue
            text, _, sel = line.partition("],")
            try:
                if _:
                    preds.append(parse_region(text + "]"))
                    sels.append(float(sel))
                else:
                    preds.append(parse_region(line))
            except (GeometryError, ValueError) as e:
                raise DataError(f"{path}:{lineno}: {e}") from None
    if sels and len(sels) != len(preds):
        raise DataError(f"{path}: some lines are labeled and some are not")
    return WorkloadFile(preds, sels if sels else None, domain)
