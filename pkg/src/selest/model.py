"""Uniform mixture model over hyperrectangular supports.

The density is ``f(x) = sum_z w_z * 1[x in G_z] / |G_z|`` and the selectivity
of a predicate ``B`` is ``sum_z w_z * |G_z & B| / |G_z|``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import (
    Box,
    DimensionMismatch,
    Region,
    as_region,
    boxes_to_arrays,
    clip_region,
    format_box,
    parse_box,
    region_overlap_volumes,
    region_volume,
    volume,
)

log = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-3


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ObservedQuery:
    """A predicate together with its observed selectivity."""

    predicate: Region
    selectivity: float

    def __post_init__(self):
        object.__setattr__(self, "predicate", as_region(self.predicate))
        s = float(self.selectivity)
        if not 0.0 <= s <= 1.0:
            raise ModelError(f"selectivity {s} outside [0, 1]")
        object.__setattr__(self, "selectivity", s)

    @classmethod
    def within(cls, domain: Box, predicate: Box | Region, selectivity: float) -> ObservedQuery:
        """Build a query whose predicate terms are clipped to ``domain``."""
        return cls(clip_region(as_region(predicate), domain), selectivity)


def _check_dim(predicate: Region, d: int) -> None:
    if predicate.terms and predicate.d != d:
        raise DimensionMismatch(f"predicate has dimension {predicate.d}, model has {d}")


@dataclass(frozen=True, eq=False)
class MixtureModel:
    domain: Box
    supports: tuple[Box, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        supports = tuple(self.supports)
        weights = np.asarray(self.weights, dtype=float).copy()
        weights.setflags(write=False)
        if not supports:
            raise ModelError("a mixture model needs at least one support")
        if weights.shape != (len(supports),):
            raise ModelError(f"{len(supports)} supports but weights of shape {weights.shape}")
        for i, g in enumerate(supports):
            if g.d != self.domain.d:
                raise ModelError(f"support {i} has dimension {g.d}, domain has {self.domain.d}")
            if not volume(g) > 0:
                raise ModelError(f"support {i} has zero volume: {format_box(g)}")
        if not np.all(np.isfinite(weights)):
            raise ModelError("non-finite weights")
        object.__setattr__(self, "supports", supports)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.supports)

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = boxes_to_arrays(self.supports)
        return lo, hi, np.prod(hi - lo, axis=1)

    def estimate_raw(self, predicate: Box | Region) -> float:
        """Unclamped selectivity; may leave [0, 1] since weights can be negative."""
        predicate = as_region(predicate)
        _check_dim(predicate, self.d)
        lo, hi, vol = self._arrays
        frac = region_overlap_volumes(predicate, lo, hi) / vol
        return float(frac @ self.weights)

    def estimate(self, predicate: Box | Region) -> float:
        return min(1.0, max(0.0, self.estimate_raw(predicate)))

    def estimate_many(self, predicates: Sequence[Box | Region]) -> np.ndarray:
        return np.array([self.estimate(p) for p in predicates])

    def density_at(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"point has shape {x.shape}, model dimension is {self.d}")
        lo, hi, vol = self._arrays
        inside = np.all((x >= lo) & (x <= hi), axis=1)
        return float(np.sum(self.weights[inside] / vol[inside]))

    def to_json(self) -> dict:
        return {
            "domain": format_box(self.domain),
            "supports": [format_box(g) for g in self.supports],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_json(cls, obj: dict) -> MixtureModel:
        try:
            domain = parse_box(obj["domain"])
            supports = tuple(parse_box(t) for t in obj["supports"])
            weights = np.array([float(w) for w in obj["weights"]])
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"malformed model: {e}") from None
        model = cls(domain, supports, weights)
        if abs(model.total_mass - 1.0) > MASS_TOLERANCE:
            log.warning("model weights sum to %.6g, expected 1 +/- %g", model.total_mass, MASS_TOLERANCE)
        return model


def save(model: MixtureModel, path: str | Path) -> None:
    # repr() of a float is its shortest exact round-trip form (17 significant digits at most)
    Path(path).write_text(json.dumps(model.to_json(), indent=1) + "\n")


def load(path: str | Path) -> MixtureModel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ModelError(f"{path}: cannot parse model file ({e.msg} at line {e.lineno})") from None
    if not isinstance(obj, dict):
        raise ModelError(f"{path}: model file must hold a JSON object")
    return MixtureModel.from_json(obj)


@dataclass(frozen=True)
class UniformPrior:
    """Estimator used before any query is observed: selectivity is the volume fraction."""

    domain: Box

    def estimate(self, predicate: Box | Region) -> float:
        predicate = as_region(predicate)
        _check_dim(predicate, self.domain.d)
        inside = region_volume(clip_region(predicate, self.domain))
        return min(1.0, max(0.0, inside / volume(self.domain)))


def training_residuals(model: MixtureModel, queries: Sequence[ObservedQuery]) -> np.ndarray:
    """Raw estimate minus observed selectivity, per training query."""
    return np.array([model.estimate_raw(q.predicate) - q.selectivity for q in queries])
