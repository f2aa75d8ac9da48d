"""Baselines: scan-based histograms and samples, and a max-entropy bucket histogram.

The bucket histogram follows the query-driven recipe: every new predicate
splits the buckets it partially covers, so each bucket ends up either fully
inside or fully outside every predicate, and bucket frequencies are then set
to the maximum-entropy distribution consistent with the observed
selectivities via iterative scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    Box,
    Region,
    as_region,
    boxes_to_arrays,
    intersect,
    points_in_region,
    region_overlap_volumes,
    volume,
)
from .model import MixtureModel, ObservedQuery

MAX_CELLS = 10_000_000
MAX_BUCKETS = 50_000


class BaselineError(ValueError):
    pass


class BucketLimitExceeded(BaselineError):
    pass


class ScalingDiverged(ArithmeticError):
    pass


# -- AutoHist ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EquiwidthHistogram:
    domain: Box
    bins_per_dim: int
    frequencies: np.ndarray

    @property
    def params(self) -> int:
        return self.frequencies.size

    def edges(self, k: int) -> np.ndarray:
        return np.linspace(self.domain.lo[k], self.domain.hi[k], self.bins_per_dim + 1)


def build_equiwidth(data: np.ndarray, bins_per_dim: int, domain: Box) -> EquiwidthHistogram:
    d = domain.d
    if bins_per_dim < 1:
        raise BaselineError("bins_per_dim must be positive")
    if bins_per_dim**d > MAX_CELLS:
        raise BaselineError(f"{bins_per_dim}^{d} cells exceeds the {MAX_CELLS} cell budget")
    data = np.asarray(data, dtype=float).reshape(-1, d)
    if len(data) == 0:
        raise BaselineError("cannot build a histogram from no data")
    counts, _ = np.histogramdd(data, bins=bins_per_dim, range=list(zip(domain.lo, domain.hi)))
    return EquiwidthHistogram(domain, bins_per_dim, counts / len(data))


def bins_for_budget(budget: int, d: int) -> int:
    """Largest per-dimension bin count whose grid stays within ``budget`` cells."""
    b = max(1, int(math.floor(budget ** (1.0 / d) + 1e-9)))
    while (b + 1) ** d <= budget:
        b += 1
    return b


def _axis_fractions(h: EquiwidthHistogram, box: Box) -> list[np.ndarray]:
    out = []
    for k in range(h.domain.d):
        e = h.edges(k)
        ov = np.clip(np.minimum(e[1:], box.hi[k]) - np.maximum(e[:-1], box.lo[k]), 0.0, None)
        out.append(ov / np.diff(e))
    return out


def estimate_equiwidth(h: EquiwidthHistogram, predicate: Box | Region) -> float:
    """Frequency-weighted overlap fraction, assuming uniformity within each cell."""
    total = 0.0
    for sign, b in as_region(predicate).signed_boxes():
        t = h.frequencies
        # contract one axis at a time: the overlap fraction of a cell factorizes over axes
        for frac in _axis_fractions(h, b):
            t = np.tensordot(frac, t, axes=(0, 0))
        total += sign * float(t)
    return min(1.0, max(0.0, total))


# -- AutoSample --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampleEstimator:
    sample: np.ndarray
    domain: Box

    @property
    def sample_size(self) -> int:
        return len(self.sample)

    params = sample_size


def build_sample(data: np.ndarray, size: int, domain: Box, rng: np.random.Generator) -> SampleEstimator:
    data = np.asarray(data, dtype=float)
    size = min(size, len(data))
    idx = rng.choice(len(data), size=size, replace=False)
    return SampleEstimator(data[np.sort(idx)], domain)


def estimate_sample(e: SampleEstimator, predicate: Box | Region) -> float:
    if e.sample_size == 0:
        raise BaselineError("empty sample")
    return float(points_in_region(e.sample, as_region(predicate), e.domain).mean())


# -- max-entropy bucket histogram ---------------------------------------------

@dataclass(frozen=True, eq=False)
class BucketHistogram:
    domain: Box
    buckets: tuple[Box, ...]
    frequencies: np.ndarray

    @classmethod
    def initial(cls, domain: Box) -> BucketHistogram:
        return cls(domain, (domain,), np.array([1.0]))

    @property
    def params(self) -> int:
        return len(self.buckets)

    def coverage_error(self) -> float:
        """Relative gap between total bucket volume and domain volume."""
        vol = sum(volume(b) for b in self.buckets)
        return abs(vol - volume(self.domain)) / volume(self.domain)

    def as_mixture(self) -> MixtureModel:
        return MixtureModel(self.domain, self.buckets, self.frequencies)

    def estimate(self, predicate: Box | Region) -> float:
        lo, hi = boxes_to_arrays(self.buckets)
        frac = region_overlap_volumes(as_region(predicate), lo, hi) / np.prod(hi - lo, axis=1)
        return min(1.0, max(0.0, float(frac @ self.frequencies)))


def _guillotine(bucket: Box, inner: Box) -> list[Box]:
    """``bucket`` minus ``inner`` as at most ``2d`` slabs, axis by axis."""
    pieces = []
    lo, hi = list(bucket.lo), list(bucket.hi)
    for k in range(bucket.d):
        if lo[k] < inner.lo[k]:
            pieces.append(Box(tuple(lo), tuple(hi[:k] + [inner.lo[k]] + hi[k + 1:])))
            lo[k] = inner.lo[k]
        if inner.hi[k] < hi[k]:
            pieces.append(Box(tuple(lo[:k] + [inner.hi[k]] + lo[k + 1:]), tuple(hi)))
            hi[k] = inner.hi[k]
    return pieces


def split_buckets(hist: BucketHistogram, new_predicate: Box, max_buckets: int = MAX_BUCKETS) -> BucketHistogram:
    """Split every bucket the predicate partially covers.

    Pieces inherit the parent's frequency in proportion to their volume.
    """
    buckets, freqs = [], []
    for b, f in zip(hist.buckets, hist.frequencies):
        inner = intersect(b, new_predicate)
        vb = volume(b)
        if inner.empty or volume(inner) == 0 or volume(inner) >= vb:
            buckets.append(b)
            freqs.append(f)
            continue
        for piece in [inner] + _guillotine(b, inner):
            vp = volume(piece)
            if vp == 0:
                # a sliver thinner than float resolution carries no mass
                continue
            buckets.append(piece)
            freqs.append(f * vp / vb)
        if len(buckets) > max_buckets:
            raise BucketLimitExceeded(
                f"bucket count passed {max_buckets}; partitioning grows exponentially with the workload"
            )
    return BucketHistogram(hist.domain, tuple(buckets), np.array(freqs))


def containment_matrix(buckets: Sequence[Box], queries: Sequence[ObservedQuery], tol: float = 1e-9) -> np.ndarray:
    """0/1 matrix of bucket-inside-predicate; raises on partial overlap."""
    lo, hi = boxes_to_arrays(buckets)
    vol = np.prod(hi - lo, axis=1)
    A = np.empty((len(queries), len(buckets)))
    for i, q in enumerate(queries):
        A[i] = region_overlap_volumes(q.predicate, lo, hi) / vol
    partial = (A > tol) & (A < 1 - tol)
    if partial.any():
        i, j = np.argwhere(partial)[0]
        raise BaselineError(f"bucket {j} partially overlaps predicate {i}; split buckets first")
    return (A > 0.5).astype(float)


def iterative_scaling(
    hist: BucketHistogram,
    queries: Sequence[ObservedQuery],
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> BucketHistogram:
    """Maximum-entropy bucket frequencies consistent with the observed queries.

    Frequencies have the product form ``w_j = |G_j| / e * prod_i z_i^{A_ij}``.
    Each update rescales one multiplier ``z_i`` so that its assertion holds
    exactly with the others fixed; sweeps run in query order until no
    multiplier changes by more than ``tol`` relatively. The full-domain
    assertion is always included.
    """
    queries = list(queries) + [ObservedQuery(as_region(hist.domain), 1.0)]
    A = containment_matrix(hist.buckets, queries).astype(bool)
    s = np.array([q.selectivity for q in queries])
    vol = np.array([volume(b) for b in hist.buckets])
    w = vol / math.e
    members = [np.flatnonzero(row) for row in A]
    for _ in range(max_sweeps):
        worst = 0.0
        for i, idx in enumerate(members):
            cur = w[idx].sum()
            if cur == 0.0:
                if s[i] > 0:
                    raise ScalingDiverged(f"assertion {i} (selectivity {s[i]}) contradicts earlier assertions")
                continue
            ratio = s[i] / cur
            if not np.isfinite(ratio):
                raise ScalingDiverged(f"assertion {i} produced a non-finite multiplier")
            w[idx] *= ratio
            worst = max(worst, abs(ratio - 1.0))
        if worst <= tol:
            break
    if not np.all(np.isfinite(w)):
        raise ScalingDiverged("iterative scaling produced non-finite frequencies")
    return BucketHistogram(hist.domain, hist.buckets, w)


def build_maxent(
    queries: Sequence[ObservedQuery], domain: Box, max_buckets: int = MAX_BUCKETS
) -> BucketHistogram:
    hist = BucketHistogram.initial(domain)
    for q in queries:
        for t in q.predicate.terms:
            if not t.empty:
                hist = split_buckets(hist, t, max_buckets)
    return iterative_scaling(hist, queries)
