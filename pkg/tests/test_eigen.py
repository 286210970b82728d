import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membrana.eigen import inverse_iteration, lambda1, lambda1_growth_check, sigma1, sigma_one, sigma_two
from membrana.geometry import OMEGA, OMEGA1, OMEGA2, build_mesh
from membrana.operators import assemble_interface, dirichlet_sigma_bc, robin_sigma_bc


def test_zero_potential(mesh96):
    assert abs(lambda1(mesh96).value) < 1e-9
    assert abs(sigma1(mesh96, OMEGA).value) < 1e-9


def test_constant_eigenfunction(mesh96):
    r = lambda1(mesh96, 0.0, 0.0)
    np.testing.assert_allclose(r.eigenfunction, 1.0, atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-20, 20), t=st.floats(-20, 20))
def test_shift(mesh48, c, t):
    base = lambda1(mesh48, c, c).value
    assert lambda1(mesh48, c + t, c + t).value == pytest.approx(base + t, abs=1e-9)


def test_monotone_in_potential(mesh96):
    rng = np.random.default_rng(3)
    c1 = rng.random(mesh96.idx1.size)
    c2 = rng.random(mesh96.idx2.size)
    lo = lambda1(mesh96, c1, c2).value
    hi = lambda1(mesh96, c1 + 0.1, c2).value
    assert lo < hi < lo + 0.1 + 1e-12
    assert 0 < lo < max(c1.max(), c2.max())


def test_eigenfunction_positive_and_normalised(mesh96):
    r = lambda1(mesh96, -2.0, 1.0)
    assert np.all(r.eigenfunction > 0)
    assert r.eigenfunction.max() == pytest.approx(1.0)


def test_dirichlet_laplacian(g0):
    m = build_mesh(g0, 192)
    r = sigma1(m, OMEGA1, 0.0, dirichlet_sigma_bc(OMEGA1))
    assert r.value == pytest.approx((math.pi / (1 / 3)) ** 2, rel=1e-3)


def test_two_piece_region_eigenfunction(mesh96):
    # Omega2 pieces have lengths 1/3 and 1/3: equal eigenvalues on both
    r = sigma_two(mesh96)
    assert r.value > 0
    assert np.all(r.eigenfunction >= 0)


def test_sigma_values_reference(mesh96):
    assert sigma_one(mesh96).value == pytest.approx(5.681277, abs=1e-5)
    assert sigma_two(mesh96).value == pytest.approx(4.875465, abs=1e-5)


def test_growth_check(mesh96):
    rows = lambda1_growth_check(mesh96, 1.0, 2.0, [1, 10, 100])
    vals = [v for _, v in rows]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(ValueError):
        lambda1_growth_check(mesh96, 0.0, 1.0, [1])


def test_large_d_average(g0):
    geom = g0.__class__(g0.outer_interval, g0.inner_interval, 1.0, 1.0)
    m = build_mesh(geom, 96)
    val = lambda1(m, 1.0, 0.0, d=1e3).value
    assert val == pytest.approx(1 / 3, rel=1e-2)


def test_inverse_iteration_dense_agreement(mesh48):
    op = assemble_interface(mesh48, 1.0, np.linspace(0, 3, mesh48.idx1.size), -1.0)
    r = inverse_iteration(op.matrix, op.weights)
    ev = np.linalg.eigvals(op.matrix.toarray())
    assert r.value == pytest.approx(ev.real.min(), abs=1e-9)


def test_robin_between_neumann_and_dirichlet(mesh96):
    n = sigma1(mesh96, OMEGA2).value
    r = sigma1(mesh96, OMEGA2, 0.0, robin_sigma_bc(OMEGA2, 2.0)).value
    d = sigma1(mesh96, OMEGA2, 0.0, dirichlet_sigma_bc(OMEGA2)).value
    assert n < r < d
