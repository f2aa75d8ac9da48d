import json

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from selest import model as model_mod
from selest.geometry import Box, Region, intersect, volume
from selest.model import MixtureModel, ModelError, ObservedQuery, UniformPrior, training_residuals


def B(*pairs):
    return Box(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


@st.composite
def unit_boxes(draw, d=2):
    pairs = []
    for _ in range(d):
        a, b = sorted(draw(st.tuples(st.floats(0, 1), st.floats(0, 1))))
        pairs.append((a, b))
    return B(*pairs)


@st.composite
def models(draw, d=2, positive=False):
    m = draw(st.integers(1, 6))
    sup = [draw(unit_boxes(d)) for _ in range(m)]
    assume(all(volume(g) > 1e-6 for g in sup))
    lo = 0.0 if positive else -1.0
    w = draw(st.lists(st.floats(lo, 1.0), min_size=m, max_size=m))
    return MixtureModel(Box.unit(d), tuple(sup), np.array(w))


def test_uniform_model_half_domain():
    m = MixtureModel(Box.unit(2), (Box.unit(2),), np.array([1.0]))
    assert m.estimate(B((0, 0.5), (0, 1))) == 0.5


def test_predicate_covering_one_support():
    m = MixtureModel(Box.unit(1), (B((0, 0.5)), B((0.5, 1))), np.array([0.8, 0.2]))
    assert m.estimate(B((0, 0.5))) == pytest.approx(0.8)


@given(models())
def test_full_domain_estimate_is_total_mass(m):
    assert m.estimate_raw(m.domain) == pytest.approx(m.total_mass, abs=1e-12)


def test_density_examples():
    m = MixtureModel(Box.unit(2), (Box.unit(2),), np.array([1.0]))
    assert m.density_at([0.3, 0.3]) == 1.0
    assert m.density_at([2.0, 2.0]) == 0.0
    m2 = MixtureModel(B((0, 2)), (B((0, 1)), B((0.5, 1.5))), np.array([0.5, 0.5]))
    assert m2.density_at([0.75]) == 1.0


def test_estimates_are_clamped():
    m = MixtureModel(Box.unit(1), (B((0, 0.5)), B((0.5, 1))), np.array([1.5, -0.5]))
    assert m.estimate_raw(B((0, 0.5))) == 1.5
    assert m.estimate(B((0, 0.5))) == 1.0
    assert m.estimate(B((0.5, 1))) == 0.0


@given(models(), unit_boxes(), unit_boxes())
def test_raw_estimate_additive_over_disjoint_predicates(m, a, b):
    assume(volume(intersect(a, b)) == 0)
    both = m.estimate_raw(Region.of(a, b))
    assert both == pytest.approx(m.estimate_raw(a) + m.estimate_raw(b), abs=1e-9)


@given(models(positive=True), unit_boxes(), unit_boxes())
def test_raw_estimate_monotone_under_containment(m, a, b):
    inner = intersect(a, b)
    assume(not inner.empty)
    assert m.estimate_raw(inner) <= m.estimate_raw(a) + 1e-12


def test_zero_volume_support_names_index():
    with pytest.raises(ModelError, match="support 1"):
        MixtureModel(Box.unit(1), (B((0, 1)), B((0.5, 0.5))), np.array([0.5, 0.5]))


def test_shape_and_finiteness_checks():
    with pytest.raises(ModelError):
        MixtureModel(Box.unit(1), (B((0, 1)),), np.array([1.0, 2.0]))
    with pytest.raises(ModelError):
        MixtureModel(Box.unit(1), (B((0, 1)),), np.array([np.nan]))
    with pytest.raises(ModelError):
        MixtureModel(Box.unit(1), (), np.array([]))


def test_observed_query_validation_and_clipping():
    with pytest.raises(ModelError):
        ObservedQuery(Region.of(Box.unit(1)), 1.5)
    q = ObservedQuery.within(Box.unit(1), B((-1, 0.5)), 0.3)
    assert q.predicate.terms == (B((0, 0.5)),)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    u = np.sort(rng.random((20, 2, 2)), axis=2)
    sup = tuple(Box(tuple(r[:, 0]), tuple(r[:, 1])) for r in u)
    m = MixtureModel(Box.unit(2), sup, rng.dirichlet(np.ones(20)))
    model_mod.save(m, tmp_path / "m.json")
    back = model_mod.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.weights, m.weights)
    for _ in range(100):
        v = np.sort(rng.random((2, 2)), axis=1)
        p = Box(tuple(v[:, 0]), tuple(v[:, 1]))
        assert abs(back.estimate(p) - m.estimate(p)) <= 1e-12


def test_truncated_file_is_parse_error(tmp_path):
    m = MixtureModel(Box.unit(1), (Box.unit(1),), np.array([1.0]))
    model_mod.save(m, tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text()
    (tmp_path / "bad.json").write_text(text[: len(text) // 2])
    with pytest.raises(ModelError, match="cannot parse"):
        model_mod.load(tmp_path / "bad.json")


def test_load_rejects_zero_volume_support(tmp_path):
    obj = {"domain": "[0.0,1.0]", "supports": ["[0.0,1.0]", "[0.2,0.2]"], "weights": [0.5, 0.5]}
    (tmp_path / "m.json").write_text(json.dumps(obj))
    with pytest.raises(ModelError, match="support 1"):
        model_mod.load(tmp_path / "m.json")


def test_load_warns_on_mass(tmp_path, caplog):
    obj = {"domain": "[0.0,1.0]", "supports": ["[0.0,1.0]"], "weights": [0.5]}
    (tmp_path / "m.json").write_text(json.dumps(obj))
    model_mod.load(tmp_path / "m.json")
    assert "sum to" in caplog.text


@settings(deadline=None)
@given(unit_boxes(d=3))
def test_uniform_prior_is_volume_fraction(b):
    assert UniformPrior(Box.unit(3)).estimate(b) == pytest.approx(volume(b))


def test_training_residuals():
    m = MixtureModel(Box.unit(1), (Box.unit(1),), np.array([1.0]))
    qs = [ObservedQuery(Region.of(B((0, 0.5))), 0.4), ObservedQuery(Region.of(Box.unit(1)), 1.0)]
    np.testing.assert_allclose(training_residuals(m, qs), [0.1, 0.0])
