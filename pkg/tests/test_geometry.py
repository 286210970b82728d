import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membrana.errors import GeometryError
from membrana.geometry import OMEGA, OMEGA1, OMEGA2, Geometry1D, build_mesh, measures


def test_canonical_layout(mesh96):
    assert mesh96.n_split == 99
    assert mesh96.n_omega == 97
    assert mesh96.interface_nodes == (32, 33, 65, 66)
    assert mesh96.h == pytest.approx((1 / 96,) * 3)
    assert mesh96.idx1.size == 33 and mesh96.idx2.size == 66


def test_interface_coordinates_are_exact(mesh96, g0):
    i2a, i1a, i1b, i2b = mesh96.interface_nodes
    assert mesh96.nodes[i2a] == mesh96.nodes[i1a] == g0.a
    assert mesh96.nodes[i1b] == mesh96.nodes[i2b] == g0.b


@pytest.mark.parametrize("outer,inner,g1,g2", [
    ((0, 1), (0, 0.5), 1, 1),
    ((0, 1), (0.5, 0.4), 1, 1),
    ((0, 1), (0.2, 1.0), 1, 1),
    ((0, 1), (0.2, 0.4), -1, 1),
    ((0, 1), (0.2, 0.4), 1, 0),
    ((0, float("nan")), (0.2, 0.4), 1, 1),
])
def test_invalid_geometry(outer, inner, g1, g2):
    with pytest.raises(GeometryError):
        Geometry1D(outer, inner, g1, g2)


def test_invalid_resolution(g0):
    with pytest.raises(GeometryError):
        build_mesh(g0, 4)
    with pytest.raises(GeometryError):
        build_mesh(g0, 20.5)


def test_region_integrals(mesh96, g0):
    m1, m2 = measures(g0)
    assert mesh96.integrate(np.ones(mesh96.idx1.size), OMEGA1) == pytest.approx(m1, abs=1e-14)
    assert mesh96.integrate(np.ones(mesh96.idx2.size), OMEGA2) == pytest.approx(m2, abs=1e-14)
    assert mesh96.integrate(np.ones(mesh96.n_omega), OMEGA) == pytest.approx(1.0, abs=1e-14)


def test_prolong_matrix_matches_function(mesh96):
    rng = np.random.default_rng(0)
    u = rng.random(mesh96.n_split)
    np.testing.assert_allclose(mesh96.prolong_matrix @ u, mesh96.prolong(u), rtol=0, atol=1e-15)
    v = rng.random(mesh96.n_omega)
    np.testing.assert_array_equal(mesh96.restrict_matrix @ v, mesh96.restrict(v))


geometries = st.tuples(
    st.floats(-2, 0), st.floats(0.05, 0.4), st.floats(0.05, 0.5), st.floats(0.05, 0.4),
    st.floats(0.1, 5), st.floats(0.1, 5),
).map(lambda t: Geometry1D((t[0], t[0] + t[1] + t[2] + t[3]), (t[0] + t[1], t[0] + t[1] + t[2]), t[4], t[5]))


@settings(max_examples=40, deadline=None)
@given(geom=geometries, n=st.integers(8, 64))
def test_mesh_properties(geom, n):
    m = build_mesh(geom, n)
    # prolong of a restricted field reproduces it (duplicates carry the same value)
    v = np.sin(3 * m.x) + 2
    np.testing.assert_allclose(m.prolong(m.restrict(v)), v, rtol=1e-14)
    # control-volume averaging preserves the integral
    u = np.cos(m.nodes)
    total = float(np.dot(m.quadrature_weights, u))
    assert float(np.dot(m.omega_weights, m.prolong(u))) == pytest.approx(total, rel=1e-12, abs=1e-12)
    # nodes are sorted and both layouts cover Omega
    assert np.all(np.diff(m.x) > 0)
    assert m.x[0] == geom.xL and m.x[-1] == pytest.approx(geom.xR)
    s1, s2 = m.omega_region_share
    np.testing.assert_allclose(s1 + s2, 1.0)
