"""Integer and categorical columns mapped onto real ranges.

An integer column over ``{a, ..., b}`` is treated as the real interval
``[a, b + 1]``; the equality ``C = k`` becomes ``k <= C < k + 1`` and a
stored value ``k`` is encoded as the cell midpoint ``k + 0.5``.
Categorical values are mapped to 1-based codes in declaration order first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .geometry import Box, Interval

KINDS = ("real", "integer", "categorical")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    domain: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        dom = tuple(self.domain)
        if self.kind == "categorical":
            if not dom:
                raise SchemaError(f"column {self.name!r}: empty categorical domain")
            if len(set(dom)) != len(dom):
                raise SchemaError(f"column {self.name!r}: duplicate categorical values")
            dom = tuple(str(v) for v in dom)
        else:
            if len(dom) != 2:
                raise SchemaError(f"column {self.name!r}: domain must be [lo, hi]")
            lo, hi = dom
            if self.kind == "integer":
                if int(lo) != lo or int(hi) != hi:
                    raise SchemaError(f"column {self.name!r}: integer bounds must be integral")
                dom = (int(lo), int(hi))
            else:
                dom = (float(lo), float(hi))
            if not dom[0] < dom[1] and not (self.kind == "integer" and dom[0] == dom[1]):
                raise SchemaError(f"column {self.name!r}: empty domain {list(dom)}")
        object.__setattr__(self, "domain", dom)

    @property
    def encoded(self) -> Interval:
        if self.kind == "real":
            return Interval(*self.domain)
        if self.kind == "integer":
            return Interval(float(self.domain[0]), float(self.domain[1] + 1))
        return Interval(1.0, float(len(self.domain) + 1))

    def code(self, value: Any) -> int:
        """Integer code of a discrete value (1-based position for categoricals)."""
        if self.kind == "categorical":
            try:
                return self.domain.index(str(value)) + 1
            except ValueError:
                raise SchemaError(f"column {self.name!r}: unknown value {value!r}") from None
        if self.kind == "integer":
            try:
                f = float(value)
            except (TypeError, ValueError):
                raise SchemaError(f"column {self.name!r}: non-numeric value {value!r}") from None
            k = int(f) if math.isfinite(f) else None
            if k is None or k != f or not self.domain[0] <= k <= self.domain[1]:
                raise SchemaError(f"column {self.name!r}: value {value!r} outside {list(self.domain)}")
            return k
        raise SchemaError(f"column {self.name!r} is real-valued; no discrete code")

    def encode_value(self, value: Any) -> float:
        if self.kind == "real":
            try:
                x = float(value)
            except (TypeError, ValueError):
                raise SchemaError(f"column {self.name!r}: non-numeric value {value!r}") from None
            if not self.domain[0] <= x <= self.domain[1]:
                raise SchemaError(f"column {self.name!r}: value {value!r} outside {list(self.domain)}")
            return x
        return self.code(value) + 0.5

    def decode_value(self, x: float) -> Any:
        if self.kind == "real":
            return x
        k = math.floor(x)
        if self.kind == "integer":
            return k
        return self.domain[k - 1]


def encode_equality(col: ColumnSpec, value: Any) -> Interval:
    """``C = v`` as the half-open cell ``[k, k + 1)``."""
    k = col.code(value)
    return Interval(float(k), float(k + 1))


def encode_range(col: ColumnSpec, lo: Any = None, hi: Any = None) -> Interval:
    """Inclusive range ``lo <= C <= hi`` in encoded coordinates; ``None`` means unbounded."""
    enc = col.encoded
    if col.kind == "real":
        a = enc.lo if lo is None else max(float(lo), enc.lo)
        b = enc.hi if hi is None else min(float(hi), enc.hi)
    else:
        a = enc.lo if lo is None else encode_equality(col, lo).lo
        b = enc.hi if hi is None else encode_equality(col, hi).hi
    if a > b:
        return Interval(0.0, 0.0, empty=True)
    return Interval(a, b)


@dataclass(frozen=True)
class SchemaSpec:
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        if not cols:
            raise SchemaError("schema has no columns")
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        object.__setattr__(self, "columns", cols)

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"unknown column {name!r}")

    @classmethod
    def unit(cls, d: int) -> SchemaSpec:
        return cls(tuple(ColumnSpec(f"c{i}", "real", (0.0, 1.0)) for i in range(d)))

    def to_json(self) -> dict:
        return {"columns": [{"name": c.name, "kind": c.kind, "domain": list(c.domain)} for c in self.columns]}

    @classmethod
    def from_json(cls, obj: dict) -> SchemaSpec:
        try:
            cols = obj["columns"]
            return cls(tuple(ColumnSpec(c["name"], c["kind"], tuple(c["domain"])) for c in cols))
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed schema: {e}") from None


def encode_domain(schema: SchemaSpec) -> Box:
    return Box.from_intervals([c.encoded for c in schema.columns])


def encode_row(schema: SchemaSpec, row: Sequence[Any]) -> list[float]:
    if len(row) != schema.d:
        raise SchemaError(f"row has {len(row)} values, schema has {schema.d} columns")
    return [c.encode_value(v) for c, v in zip(schema.columns, row)]


def load_schema(path: str | Path) -> SchemaSpec:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None
    return SchemaSpec.from_json(obj)


def save_schema(schema: SchemaSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n")
