import pytest
from hypothesis import given, strategies as st

from selest.encode import (
    ColumnSpec,
    SchemaError,
    SchemaSpec,
    encode_domain,
    encode_equality,
    encode_range,
    encode_row,
    load_schema,
    save_schema,
)
from selest.geometry import Box, Interval, intersect, volume

COLORS = ColumnSpec("color", "categorical", ("red", "green", "blue"))


def test_integer_equality():
    col = ColumnSpec("k", "integer", (1, 10))
    assert encode_equality(col, 3) == Interval(3.0, 4.0)


def test_categorical_equality_uses_declared_order():
    assert encode_equality(COLORS, "green") == Interval(2.0, 3.0)


def test_top_integer_value_stays_in_domain():
    b = 7
    col = ColumnSpec("k", "integer", (1, b))
    iv = encode_equality(col, b)
    assert iv == Interval(b, b + 1)
    assert col.encoded == Interval(1.0, b + 1.0)


def test_domains():
    assert encode_domain(SchemaSpec((ColumnSpec("x", "real", (0, 1)),))) == Box((0.0,), (1.0,))
    assert encode_domain(SchemaSpec((ColumnSpec("k", "integer", (1, 5)),))) == Box((1.0,), (6.0,))
    two = SchemaSpec((ColumnSpec("x", "real", (0, 1)), COLORS))
    assert encode_domain(two) == Box((0.0, 1.0), (1.0, 4.0))


@given(st.integers(1, 40))
def test_integer_cells_tile_domain(b):
    col = ColumnSpec("k", "integer", (1, b))
    cells = [Box((encode_equality(col, v).lo,), (encode_equality(col, v).hi,)) for v in range(1, b + 1)]
    assert sum(volume(c) for c in cells) == b
    assert all(volume(intersect(p, q)) == 0 for i, p in enumerate(cells) for q in cells[i + 1:])


@given(st.integers(-20, 20), st.integers(0, 30))
def test_midpoint_decodes_back(lo, span):
    col = ColumnSpec("k", "integer", (lo, lo + span))
    for v in range(lo, lo + span + 1):
        iv = encode_equality(col, v)
        assert col.decode_value((iv.lo + iv.hi) / 2) == v


def test_categorical_round_trip():
    for v in COLORS.domain:
        iv = encode_equality(COLORS, v)
        assert COLORS.decode_value((iv.lo + iv.hi) / 2) == v


def test_ranges():
    col = ColumnSpec("k", "integer", (1, 10))
    assert encode_range(col, 2, 4) == Interval(2.0, 5.0)
    assert encode_range(col, None, 3) == Interval(1.0, 4.0)
    assert encode_range(col, 5, 2).empty
    real = ColumnSpec("x", "real", (0, 1))
    assert encode_range(real, -1, 0.5) == Interval(0.0, 0.5)


def test_encode_row_maps_integers_to_cell_midpoints():
    schema = SchemaSpec((ColumnSpec("x", "real", (0, 1)), ColumnSpec("k", "integer", (1, 3)), COLORS))
    assert encode_row(schema, ["0.25", "2", "blue"]) == [0.25, 2.5, 3.5]


@pytest.mark.parametrize("col,value", [
    (ColumnSpec("k", "integer", (1, 3)), "4"),
    (ColumnSpec("k", "integer", (1, 3)), "2.5"),
    (ColumnSpec("k", "integer", (1, 3)), "two"),
    (COLORS, "purple"),
    (ColumnSpec("x", "real", (0, 1)), "nan"),
    (ColumnSpec("x", "real", (0, 1)), "1.5"),
])
def test_bad_values_rejected(col, value):
    with pytest.raises(SchemaError):
        col.encode_value(value)


@pytest.mark.parametrize("kind,domain", [
    ("categorical", ("a", "a")),
    ("categorical", ()),
    ("real", (1, 0)),
    ("integer", (1.5, 3)),
    ("text", (0, 1)),
])
def test_bad_columns_rejected(kind, domain):
    with pytest.raises(SchemaError):
        ColumnSpec("c", kind, domain)


def test_schema_file_round_trip(tmp_path):
    schema = SchemaSpec((ColumnSpec("x", "real", (0, 2)), ColumnSpec("k", "integer", (1, 9)), COLORS))
    save_schema(schema, tmp_path / "s.json")
    assert load_schema(tmp_path / "s.json") == schema


def test_malformed_schema_file(tmp_path):
    (tmp_path / "s.json").write_text('{"columns": [{"name": "x"}]}')
    with pytest.raises(SchemaError):
        load_schema(tmp_path / "s.json")
    (tmp_path / "t.json").write_text("{")
    with pytest.raises(SchemaError):
        load_schema(tmp_path / "t.json")
