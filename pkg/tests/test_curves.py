import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membrana.curves import (Flag, Model, expand_bracket, find_root, ghat_slope_formula, slope_formula)
from membrana.errors import NotFound, OutOfDomain
from membrana.geometry import Geometry1D, measures

from conftest import canonical_params


def test_find_root_and_bracket():
    f = lambda x: x ** 3 - 2  # noqa: E731
    assert find_root(f, 0.0, 2.0) == pytest.approx(2 ** (1 / 3), abs=1e-12)
    x, fx, prev = expand_bracket(f, 0.0, 0.5, want_positive=True)
    assert fx > 0 and prev is not None and f(prev) <= 0
    with pytest.raises(NotFound):
        find_root(f, 2.0, 3.0)


def test_H_basics(model):
    assert abs(model.H(0.0)) < 1e-6
    xs = np.linspace(-20, 4.5, 50)
    vals = [model.H(x) for x in xs]
    assert np.all(np.diff(vals) < 0)
    assert model.curve_H(model.sigmas[1] + 0.1).flag is Flag.OUT_OF_DOMAIN
    with pytest.raises(OutOfDomain):
        model.H(10.0)


def test_H_defines_zero_eigenvalue(model):
    for nu2 in (-3.0, 0.5, 4.0):
        assert abs(model.lam(-model.H(nu2), -nu2)) < 1e-8


def test_H_slope_formula(model, g0):
    assert model.curve_H_slope_at_zero() == pytest.approx(slope_formula(g0), rel=1e-3)
    m1, m2 = measures(g0)
    assert slope_formula(g0) == pytest.approx(-(g0.gamma1 / g0.gamma2) * (m2 / m1))


def test_G_is_shifted_H(model):
    p = model.params
    for mu in (0.0, 1.0, 3.0):
        s = model.curve_G(mu)
        assert s.ok and s.value == pytest.approx(p.a1 * mu + model.H(p.lambda2 - p.a2 * mu))


def test_mu0_equals_g(model):
    assert model.compute_mu0(2.0, 1.0) == pytest.approx(0.74822514, abs=1e-7)
    assert model.compute_mu0(2.0, 1.0) == model.curve_g(2.0, 1.0).value
    assert model.curve_g(-5.0, -5.0).flag is Flag.OUT_OF_DOMAIN


def test_mu1_root(model):
    mu1 = model.compute_mu1(2.0, 1.0)
    assert mu1 == pytest.approx(3.05305253, abs=1e-7)
    assert abs(model.mu1_map(2.0, 1.0, mu1)) < 1e-8
    with pytest.raises(OutOfDomain):
        model.compute_mu1(-5.0, -5.0)


def test_g_equal_increasing(model):
    vals = [model.curve_g_equal(lam).value for lam in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(vals) > 0)
    assert model.curve_g_equal(-1.0).flag is Flag.OUT_OF_DOMAIN


def test_ghat_consistency(g0):
    model = Model(canonical_params(a1=1.0, a2=0.5), 48)
    s0, gh = model.curve_sigma0_and_Ghat(2.0)
    p = model.params
    assert gh == pytest.approx(s0 + p.a2 * 2.0)
    assert -s0 + model.H(s0) == pytest.approx((p.a2 - p.a1) * 2.0, abs=1e-8)
    slope = model.curve_sigma0_and_Ghat(1e-3)[1] / 1e-3
    assert slope == pytest.approx(ghat_slope_formula(g0, p.a1, p.a2), rel=2e-2)
    with pytest.raises(OutOfDomain):
        model.curve_sigma0_and_Ghat(-1.0)


def test_bounds(model):
    mu_star = model.mu_star_bound(2.0, 1.0)
    assert mu_star > model.compute_mu1(2.0, 1.0)
    assert model.mu_star_bound(2.0, 1.0) is mu_star or model.mu_star_bound(2.0, 1.0) == mu_star
    lam_star = model.lambda_star_bound(1.0)
    assert lam_star > 0
    with pytest.raises(OutOfDomain):
        model.lambda_star_bound(-1.0)


@settings(max_examples=3, deadline=None)
@given(a=st.floats(0.2, 0.45), b=st.floats(0.55, 0.8), g1=st.floats(0.3, 3), g2=st.floats(0.3, 3))
def test_slope_formula_other_geometries(a, b, g1, g2):
    geom = Geometry1D((0.0, 1.0), (a, b), g1, g2)
    model = Model(canonical_params().replace(geometry=geom), 96)
    assert model.curve_H_slope_at_zero() == pytest.approx(slope_formula(geom), rel=2e-2)


def test_nan_samples_are_flagged(model):
    s = model.curve_H(100.0)
    assert math.isnan(s.value) and not s.ok
