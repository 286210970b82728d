import numpy as np
import pytest

from membrana.curves import Model
from membrana.errors import OutOfDomain
from membrana.regions import (Classification, Confirmation, GridSpec, classify_point, confirm_point,
                              estimate_mu_star, region_curves, region_map, resolve_threads)

from conftest import canonical_params


def test_grid_centres():
    g = GridSpec((0.0, 1.0), (-1.0, 1.0), 4, 2)
    np.testing.assert_allclose(g.xs, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(g.mus, [-0.5, 0.5])
    with pytest.raises(ValueError):
        GridSpec((1.0, 0.0), (0.0, 1.0), 2, 2)
    with pytest.raises(ValueError):
        GridSpec((0.0, 1.0), (0.0, 1.0), 0, 2)


def test_classify_canonical(model):
    assert classify_point(model, 2.0, -0.1) is Classification.NON_EXISTENCE_NECESSARY
    assert classify_point(model, -5.0, 1.0, -5.0) is Classification.NON_EXISTENCE_NECESSARY
    assert classify_point(model, 2.0, 1.5) is Classification.COEXISTENCE
    assert classify_point(model, 2.0, 50.0) is Classification.NON_EXISTENCE_LARGE
    assert classify_point(model, 2.0, 0.5) is Classification.INDETERMINATE


def test_confirm_point(model):
    mark, state = confirm_point(model, 2.0, 1.5)
    assert mark is Confirmation.CONFIRMED and state.coexistence
    mark, state = confirm_point(model, 2.0, 6.0)
    assert mark is Confirmation.REFUTED and state is None


def test_region_map_thread_independent():
    p = canonical_params()
    grid = GridSpec((-1.0, 6.0), (-0.5, 5.0), 4, 5)
    a = region_map(p, grid, 48, confirm=True, threads=1)
    b = region_map(p, grid, 48, confirm=True, threads=2)
    assert a.classes == b.classes and a.confirmed == b.confirmed
    cells = list(a.cells())
    assert len(cells) == 20
    assert all(c[2] is Classification.NON_EXISTENCE_NECESSARY for c in cells if c[1] <= 0)


def test_region_curves(coarse_model):
    grid = GridSpec((-1.0, 6.0), (0.0, 5.0), 4, 4)
    curves = region_curves(coarse_model, grid, samples=8)
    assert set(curves) == {"g", "G"} and len(curves["g"]) > 2
    eq = region_curves(coarse_model, GridSpec((0.0, 6.0), (0.0, 5.0), 4, 4, equal=True), samples=6)
    assert set(eq) == {"g", "Ghat"}


def test_threads_resolution(monkeypatch):
    monkeypatch.setenv("MEMBRANA_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    with pytest.raises(ValueError):
        resolve_threads(0)


def test_mu_star_bracket(coarse_model):
    br = estimate_mu_star(coarse_model, 2.0, 1.0, window=(0.5, 4.0), n_scan=8, rtol=1e-2)
    mu1 = coarse_model.compute_mu1(2.0, 1.0)
    assert br.lower <= br.upper <= br.constructive
    assert br.lower - 0.05 <= mu1 <= br.upper + 0.05
    with pytest.raises(OutOfDomain):
        estimate_mu_star(coarse_model, -5.0, -5.0)
