"""Axis-aligned hyperrectangle algebra.

Boxes are measure-theoretic: boundaries carry no volume, so two boxes that
only touch intersect in the canonical empty box. Regions are finite unions
of boxes whose measure is computed exactly by inclusion-exclusion.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_REGION_TERMS = 20


class GeometryError(ValueError):
    pass


class DimensionMismatch(GeometryError):
    pass


class RegionTooLarge(GeometryError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    empty: bool = False

    def __post_init__(self):
        if self.empty:
            object.__setattr__(self, "lo", 0.0)
            object.__setattr__(self, "hi", 0.0)
        elif not self.lo <= self.hi:
            raise GeometryError(f"interval bounds out of order: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo


@dataclass(frozen=True)
class Box:
    """A d-dimensional axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``.

    The empty box keeps its dimension but has all bounds set to zero.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    empty: bool = False

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise GeometryError("box needs matching, non-empty lo/hi bounds")
        if self.empty:
            lo = hi = (0.0,) * len(lo)
        else:
            for a, b in zip(lo, hi):
                if not a <= b:
                    raise GeometryError(f"box bounds out of order: [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_intervals(cls, dims: Sequence[Interval]) -> Box:
        d = len(dims)
        if any(iv.empty for iv in dims):
            return cls.empty_box(d)
        return cls(tuple(iv.lo for iv in dims), tuple(iv.hi for iv in dims))

    @classmethod
    def empty_box(cls, d: int) -> Box:
        return cls((0.0,) * d, (0.0,) * d, empty=True)

    @classmethod
    def unit(cls, d: int) -> Box:
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def dims(self) -> list[Interval]:
        if self.empty:
            return [Interval(0.0, 0.0, empty=True) for _ in range(self.d)]
        return [Interval(a, b) for a, b in zip(self.lo, self.hi)]

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    def contains_box(self, other: Box) -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def __str__(self) -> str:
        return format_box(self)


def _check_dims(a: Box, b: Box) -> None:
    if a.d != b.d:
        raise DimensionMismatch(f"dimension mismatch: {a.d} vs {b.d}")


def intersect(a: Box, b: Box) -> Box:
    """Componentwise ``[max(lo), min(hi)]``; touching or disjoint boxes give the empty box."""
    _check_dims(a, b)
    if a.empty or b.empty:
        return Box.empty_box(a.d)
    lo, hi = [], []
    for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi):
        l, h = max(alo, blo), min(ahi, bhi)
        if l > h:
            return Box.empty_box(a.d)
        # a shared boundary point is kept only when both sides are that same point
        if l == h and not (alo == ahi == blo == bhi):
            return Box.empty_box(a.d)
        lo.append(l)
        hi.append(h)
    return Box(tuple(lo), tuple(hi))


def volume(b: Box) -> float:
    if b.empty:
        return 0.0
    v = 1.0
    for lo, hi in zip(b.lo, b.hi):
        v *= hi - lo
    return v


def clip(b: Box, domain: Box) -> Box:
    return intersect(b, domain)


@dataclass(frozen=True)
class Region:
    """A union of boxes (a predicate in disjunctive normal form)."""

    terms: tuple[Box, ...] = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        if terms and len({t.d for t in terms}) != 1:
            raise DimensionMismatch("region terms have different dimensions")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *boxes: Box) -> Region:
        return cls(tuple(boxes))

    @property
    def d(self) -> int:
        if not self.terms:
            raise GeometryError("empty region has no dimension")
        return self.terms[0].d

    @property
    def is_empty(self) -> bool:
        return all(t.empty for t in self.terms)

    def signed_boxes(self) -> list[tuple[int, Box]]:
        """Inclusion-exclusion expansion of the union.

        Returns ``(sign, box)`` pairs, one per subset of terms with a
        non-empty common intersection, such that the measure of the union
        intersected with any box ``b`` is ``sum(sign * volume(box & b))``.
        """
        terms = [t for t in self.terms if not t.empty]
        if len(terms) > MAX_REGION_TERMS:
            raise RegionTooLarge(
                f"region has {len(terms)} terms; inclusion-exclusion is limited to "
                f"{MAX_REGION_TERMS}, split the predicate into smaller queries"
            )
        if len(terms) == 1:
            return [(1, terms[0])]
        out: list[tuple[int, Box]] = []

        # depth-first over subsets; an empty partial intersection prunes all supersets
        def walk(start: int, current: Box, size: int) -> None:
            for k in range(start, len(terms)):
                nxt = intersect(current, terms[k])
                if nxt.empty:
                    continue
                out.append((1 if size % 2 == 0 else -1, nxt))
                walk(k + 1, nxt, size + 1)

        for i, t in enumerate(terms):
            out.append((1, t))
            walk(i + 1, t, 1)
        return out

    def __str__(self) -> str:
        return format_region(self)


def as_region(p: Box | Region) -> Region:
    return p if isinstance(p, Region) else Region((p,))


def region_volume(r: Region) -> float:
    return sum(sign * volume(b) for sign, b in r.signed_boxes())


def region_intersect_volume(r: Region, b: Box) -> float:
    if r.terms:
        _check_dims(r.terms[0], b)
    if b.empty:
        return 0.0
    return region_volume(Region(tuple(intersect(t, b) for t in r.terms)))


def region_and(a: Region, b: Region) -> Region:
    """Conjunction of two unions, distributed into DNF."""
    terms = [intersect(x, y) for x in a.terms for y in b.terms]
    return Region(tuple(t for t in terms if not t.empty))


def region_or(a: Region, b: Region) -> Region:
    return Region(a.terms + b.terms)


def complement(b: Box, domain: Box) -> Region:
    """Disjoint slab decomposition of ``domain`` minus ``b``."""
    _check_dims(b, domain)
    inner = intersect(b, domain)
    if inner.empty:
        return Region((domain,))
    pieces = []
    lo, hi = list(domain.lo), list(domain.hi)
    for k in range(domain.d):
        if lo[k] < inner.lo[k]:
            pieces.append(Box(tuple(lo), tuple(hi[:k] + [inner.lo[k]] + hi[k + 1:])))
            lo[k] = inner.lo[k]
        if inner.hi[k] < hi[k]:
            pieces.append(Box(tuple(lo[:k] + [inner.hi[k]] + lo[k + 1:]), tuple(hi)))
            hi[k] = inner.hi[k]
    return Region(tuple(pieces))


def region_not(r: Region, domain: Box) -> Region:
    out = Region((domain,))
    for t in r.terms:
        out = region_and(out, complement(t, domain))
    return out


def clip_region(r: Region, domain: Box) -> Region:
    return Region(tuple(intersect(t, domain) for t in r.terms))


# -- vectorized helpers ------------------------------------------------------

def boxes_to_arrays(boxes: Sequence[Box]) -> tuple[np.ndarray, np.ndarray]:
    """Stack boxes into ``(k, d)`` lower and upper bound arrays."""
    lo = np.array([b.lo for b in boxes], dtype=float)
    hi = np.array([b.hi for b in boxes], dtype=float)
    return lo, hi


def overlap_volumes(lo: np.ndarray, hi: np.ndarray, box: Box) -> np.ndarray:
    """Volume of ``box`` intersected with each row box in ``(lo, hi)``."""
    if box.empty:
        return np.zeros(len(lo))
    ext = np.minimum(hi, box.hi) - np.maximum(lo, box.lo)
    return np.prod(np.clip(ext, 0.0, None), axis=1)


def pairwise_overlap_volumes(lo1, hi1, lo2, hi2, chunk: int = 512) -> np.ndarray:
    """``(k1, k2)`` matrix of intersection volumes between two box stacks."""
    out = np.empty((len(lo1), len(lo2)))
    for s in range(0, len(lo1), chunk):
        a_lo = lo1[s:s + chunk, None, :]
        a_hi = hi1[s:s + chunk, None, :]
        ext = np.minimum(a_hi, hi2[None]) - np.maximum(a_lo, lo2[None])
        out[s:s + chunk] = np.prod(np.clip(ext, 0.0, None), axis=2)
    return out


def region_overlap_volumes(r: Region, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``region_intersect_volume(r, G)`` for every row box ``G`` at once."""
    total = np.zeros(len(lo))
    for sign, b in r.signed_boxes():
        total += sign * overlap_volumes(lo, hi, b)
    return total


def points_in_box(points: np.ndarray, box: Box, domain: Box | None = None) -> np.ndarray:
    """Half-open membership ``lo <= x < hi``.

    An upper bound that coincides with the domain's upper bound is closed,
    so the full domain selects every tuple.
    """
    if box.empty:
        return np.zeros(len(points), dtype=bool)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    inside = (points >= lo) & (points < hi)
    if domain is not None:
        closed = hi >= np.asarray(domain.hi)
        inside |= (points >= lo) & (points == hi) & closed
    return inside.all(axis=1)


def points_in_region(points: np.ndarray, r: Region, domain: Box | None = None) -> np.ndarray:
    mask = np.zeros(len(points), dtype=bool)
    for t in r.terms:
        mask |= points_in_box(points, t, domain)
    return mask


# -- text form ---------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_INTERVAL = re.compile(rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\]")


def format_box(b: Box) -> str:
    if b.empty:
        return "x".join("[]" for _ in range(b.d))
    return "x".join(f"[{lo!r},{hi!r}]" for lo, hi in zip(b.lo, b.hi))


def format_region(r: Region) -> str:
    return "U".join(format_box(t) for t in r.terms)


def parse_box(text: str) -> Box:
    """Parse ``[lo1,hi1]x[lo2,hi2]x...``; ``[]`` marks the empty box."""
    parts = [p.strip() for p in text.strip().split("x")]
    if not parts or parts == [""]:
        raise GeometryError(f"cannot parse box: {text!r}")
    if all(p == "[]" for p in parts):
        return Box.empty_box(len(parts))
    lo, hi = [], []
    for p in parts:
        m = _INTERVAL.fullmatch(p)
        if m is None:
            raise GeometryError(f"cannot parse interval {p!r} in box {text!r}")
        lo.append(float(m.group(1)))
        hi.append(float(m.group(2)))
    return Box(tuple(lo), tuple(hi))


def parse_region(text: str) -> Region:
    return Region(tuple(parse_box(t) for t in text.strip().split("U")))


def bounding_box(boxes: Iterable[Box]) -> Box:
    boxes = [b for b in boxes if not b.empty]
    if not boxes:
        raise GeometryError("no non-empty boxes to bound")
    lo, hi = boxes_to_arrays(boxes)
    return Box(tuple(lo.min(axis=0)), tuple(hi.max(axis=0)))
