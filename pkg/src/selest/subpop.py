"""Subpopulation supports generated from the observed predicates.

Both generators start from random points scattered inside each predicate.
The sampling generator picks ``m`` of them as centers and sizes each box from
the spacing of nearby centers; the clustering generator runs k-means++ on all
points and takes the bounding box of every cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Box, bounding_box, intersect, volume
from .model import ObservedQuery

EPS_REL = 1e-9
MAX_M = 4000


class SubpopError(ValueError):
    pass


@dataclass(frozen=True)
class SubpopConfig:
    points_per_predicate: int = 10
    m_override: int | None = None
    neighbor_count: int = 10
    seed: int = 0
    method: str = "sampling"
    kmeans_max_iters: int = 50

    def __post_init__(self):
        if self.method not in ("sampling", "clustering"):
            raise SubpopError(f"unknown subpopulation method {self.method!r}")
        if self.points_per_predicate < 1 or self.neighbor_count < 1:
            raise SubpopError("points_per_predicate and neighbor_count must be positive")
        if self.m_override is not None and self.m_override < 1:
            raise SubpopError("m_override must be positive")

    def m_for(self, n: int) -> int:
        if self.m_override is not None:
            return self.m_override
        return min(4 * n, MAX_M)


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=stream))


def _sample_region(terms: list[Box], k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` uniform points from a union of boxes.

    A term is chosen with probability proportional to its volume and a point
    is drawn in it; the point is kept with probability 1 / (number of terms
    covering it), which makes overlapping unions uniform.
    """
    d = terms[0].d
    lo = np.array([t.lo for t in terms])
    hi = np.array([t.hi for t in terms])
    vols = np.prod(hi - lo, axis=1)
    if len(terms) == 1 or vols.sum() == 0:
        return lo[0] + rng.random((k, d)) * (hi[0] - lo[0])
    p = vols / vols.sum()
    out = []
    while len(out) < k:
        j = rng.choice(len(terms), p=p)
        x = lo[j] + rng.random(d) * (hi[j] - lo[j])
        cover = np.sum(np.all((x >= lo) & (x <= hi), axis=1))
        if rng.random() * cover < 1.0:
            out.append(x)
    return np.array(out)


def scatter_points(queries: Sequence[ObservedQuery], cfg: SubpopConfig) -> np.ndarray:
    """Random points inside every predicate, ``points_per_predicate`` each.

    Each query uses its own RNG stream derived from ``(seed, query index)``.
    """
    chunks = []
    for i, q in enumerate(queries):
        terms = [t for t in q.predicate.terms if not t.empty]
        if not terms:
            raise SubpopError(f"query {i} has an empty predicate")
        chunks.append(_sample_region(terms, cfg.points_per_predicate, _rng(cfg.seed, 0, i)))
    if not chunks:
        raise SubpopError("no queries to scatter points from")
    return np.vstack(chunks)


def _finish_boxes(lo: np.ndarray, hi: np.ndarray, domain: Box) -> list[Box]:
    """Widen zero-width sides to epsilon, then clip to the domain."""
    eps = EPS_REL * np.asarray(domain.widths)
    flat = (hi - lo) <= 0
    lo = np.where(flat, lo - eps / 2, lo)
    hi = np.where(flat, hi + eps / 2, hi)
    lo = np.maximum(lo, domain.lo)
    hi = np.minimum(hi, domain.hi)
    boxes = [Box(tuple(a), tuple(b)) for a, b in zip(lo, hi)]
    return [b for b in boxes if volume(b) > 0]


def _fallback_box(queries: Sequence[ObservedQuery], domain: Box) -> list[Box]:
    bb = bounding_box(t for q in queries for t in q.predicate.terms)
    bb = intersect(bb, domain)
    if bb.empty:
        bb = domain
    return _finish_boxes(np.array([bb.lo]), np.array([bb.hi]), domain)


def generate_sampling(queries: Sequence[ObservedQuery], cfg: SubpopConfig, domain: Box) -> list[Box]:
    points = scatter_points(queries, cfg)
    m = min(cfg.m_for(len(queries)), len(points))
    rng = _rng(cfg.seed, 1)
    centers = points[np.sort(rng.choice(len(points), size=m, replace=False))]
    if m < 2:
        return _fallback_box(queries, domain)
    k = min(cfg.neighbor_count, m - 1)
    # query k+1 neighbours: the nearest one is the center itself
    _, idx = cKDTree(centers).query(centers, k=k + 1)
    idx = idx[:, 1:]
    gaps = np.abs(centers[idx] - centers[:, None, :])
    half = gaps.mean(axis=1)
    return _finish_boxes(centers - half, centers + half, domain)


def kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; stops early once every point coincides with a center."""
    n = len(points)
    first = int(rng.integers(n))
    centers = [points[first]]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    while len(centers) < k:
        total = d2.sum()
        if total <= 0:
            break
        # inverse-CDF draw; searchsorted picks the lowest index on ties
        c = np.cumsum(d2)
        j = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
        j = min(j, n - 1)
        centers.append(points[j])
        d2 = np.minimum(d2, np.sum((points - points[j]) ** 2, axis=1))
    return np.array(centers)


def _assign(points: np.ndarray, centers: np.ndarray, chunk: int = 2048) -> np.ndarray:
    labels = np.empty(len(points), dtype=int)
    c2 = np.sum(centers**2, axis=1)
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        dist = c2[None, :] - 2.0 * p @ centers.T
        labels[s:s + chunk] = np.argmin(dist, axis=1)
    return labels


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator, max_iters: int = 50) -> np.ndarray:
    """Lloyd iterations from k-means++ seeds; returns cluster labels."""
    centers = kmeans_pp(points, k, rng)
    labels = _assign(points, centers)
    for _ in range(max_iters):
        counts = np.bincount(labels, minlength=len(centers))
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        keep = counts > 0
        centers = np.where(keep[:, None], sums / np.maximum(counts, 1)[:, None], centers)
        new = _assign(points, centers)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels


def generate_clustering(queries: Sequence[ObservedQuery], cfg: SubpopConfig, domain: Box) -> list[Box]:
    points = scatter_points(queries, cfg)
    m = min(cfg.m_for(len(queries)), len(points))
    labels = kmeans(points, m, _rng(cfg.seed, 2), cfg.kmeans_max_iters)
    used = np.unique(labels)
    lo = np.array([points[labels == c].min(axis=0) for c in used])
    hi = np.array([points[labels == c].max(axis=0) for c in used])
    return _finish_boxes(lo, hi, domain)


def generate(queries: Sequence[ObservedQuery], cfg: SubpopConfig, domain: Box) -> list[Box]:
    if cfg.method == "clustering":
        return generate_clustering(queries, cfg, domain)
    return generate_sampling(queries, cfg, domain)
