import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalcdf import (ValidationError, WeightedCdf, build_ipw_cdf, cdf_eval,
                       cdf_mean, cdf_quantile)

from conftest import random_ipw_inputs


def two_atom_cdf():
    # y=(1,2), both treated, pi=(0.5,0.25) -> weights (2,4), cum (1/3, 1)
    return build_ipw_cdf(np.array([1.0, 2.0]), np.array([1, 1]),
                         np.array([0.5, 0.25]), "treated")


class TestConstruction:
    def test_two_atom_weights(self):
        f = two_atom_cdf()
        assert f.support.tolist() == [1.0, 2.0]
        assert f.cum_weight[0] == pytest.approx(1 / 3, abs=1e-15)
        assert f.cum_weight[1] == 1.0
        assert f.raw_weight_total == pytest.approx(6.0)

    def test_constant_propensity_matches_plain_ecdf(self, rng):
        y = rng.normal(size=40)
        a = np.array([1, 0] * 20)
        f = build_ipw_cdf(y, a, np.full(40, 0.37), "treated")
        treated = np.sort(y[a == 1])
        assert np.allclose(f.support, np.unique(treated))
        # uniform atom masses: the constant weights cancel in the ratio
        assert np.allclose(f.atom_mass, 1 / 20)

    def test_ties_are_merged(self):
        f = WeightedCdf.from_atoms([2.0, 1.0, 2.0], [1.0, 1.0, 3.0])
        assert f.support.tolist() == [1.0, 2.0]
        assert f.atom_mass.tolist() == [0.2, 0.8]

    def test_empty_arm_rejected(self):
        with pytest.raises(ValidationError):
            build_ipw_cdf(np.array([1.0, 2.0]), np.array([1, 1]),
                          np.array([0.5, 0.5]), "control")

    def test_propensity_on_boundary_rejected(self):
        with pytest.raises(ValidationError):
            build_ipw_cdf(np.array([1.0, 2.0]), np.array([1, 0]),
                          np.array([1.0, 0.5]), "treated")

    def test_serialization_round_trip(self):
        f = two_atom_cdf()
        blob = f.to_arrays()
        g = WeightedCdf(support=np.array(blob["support"]),
                        cum_weight=np.array(blob["cum_weight"]),
                        raw_weight_total=blob["raw_weight_total"])
        assert np.array_equal(f.support, g.support)
        assert np.array_equal(f.cum_weight, g.cum_weight)


class TestEvaluation:
    def test_below_support_is_zero(self):
        assert cdf_eval(two_atom_cdf(), 0.5) == 0.0

    def test_at_and_above_max_is_one(self):
        f = two_atom_cdf()
        assert cdf_eval(f, 2.0) == 1.0
        assert cdf_eval(f, 99.0) == 1.0

    def test_between_atoms(self):
        assert cdf_eval(two_atom_cdf(), 1.5) == pytest.approx(1 / 3)

    def test_right_continuity_at_atoms(self):
        f = two_atom_cdf()
        assert cdf_eval(f, 1.0) == pytest.approx(1 / 3)
        assert cdf_eval(f, np.nextafter(1.0, 0.0)) == 0.0

    def test_vector_evaluation(self):
        out = cdf_eval(two_atom_cdf(), np.array([0.0, 1.0, 1.5, 2.5]))
        assert np.allclose(out, [0.0, 1 / 3, 1 / 3, 1.0])


class TestQuantile:
    def test_level_inside_first_atom(self):
        assert cdf_quantile(two_atom_cdf(), 0.3) == 1.0

    def test_level_beyond_first_atom(self):
        assert cdf_quantile(two_atom_cdf(), 0.5) == 2.0

    def test_exact_hit_uses_weak_inequality(self):
        f = two_atom_cdf()
        level = f.cum_weight[0]
        assert cdf_quantile(f, level) == 1.0

    def test_level_must_be_interior(self):
        with pytest.raises(ValidationError):
            cdf_quantile(two_atom_cdf(), 1.0)


class TestMean:
    def test_two_atom_mean(self):
        assert cdf_mean(two_atom_cdf()) == pytest.approx(5 / 3)

    def test_constant_propensity_gives_arm_mean(self, rng):
        y = rng.normal(size=30)
        a = (np.arange(30) % 3 == 0).astype(int)
        f = build_ipw_cdf(y, a, np.full(30, 0.5), "treated")
        assert cdf_mean(f) == pytest.approx(y[a == 1].mean())

    def test_mean_equals_hajek_ratio(self, rng):
        for _ in range(50):
            y, a, pi = random_ipw_inputs(rng)
            f = build_ipw_cdf(y, a, pi, "treated")
            w = a / pi
            ratio = np.dot(w, y) / w.sum()
            assert f is not None
            assert cdf_mean(f) == pytest.approx(ratio, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cdf_properties_hold_on_random_inputs(seed):
    rng = np.random.default_rng(seed)
    y, a, pi = random_ipw_inputs(rng, n=int(rng.integers(2, 60)))
    for arm in ("treated", "control"):
        f = build_ipw_cdf(y, a, pi, arm)
        assert np.all(np.diff(f.cum_weight) >= -1e-15)  # monotone
        assert f.cum_weight[-1] == 1.0                   # upper limit
        assert cdf_eval(f, f.support[0] - 1.0) == 0.0    # lower limit
        # right-continuity: value at each atom equals its cumulative weight
        assert np.allclose(cdf_eval(f, f.support), f.cum_weight)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_quantile_eval_galois_property(seed, q):
    rng = np.random.default_rng(seed)
    y, a, pi = random_ipw_inputs(rng, n=25)
    f = build_ipw_cdf(y, a, pi, "treated")
    xi = cdf_quantile(f, q)
    assert cdf_eval(f, xi) >= q
    below = f.support[f.support < xi]
    if below.size:
        assert cdf_eval(f, below[-1]) < q


def test_scale_equivariance(rng):
    y, a, pi = random_ipw_inputs(rng)
    c = 3.7
    f = build_ipw_cdf(y, a, pi, "control")
    g = build_ipw_cdf(c * y, a, pi, "control")
    assert cdf_mean(g) == pytest.approx(c * cdf_mean(f), rel=1e-12)
    for q in (0.2, 0.5, 0.9):
        assert cdf_quantile(g, q) == pytest.approx(c * cdf_quantile(f, q), rel=1e-12)
