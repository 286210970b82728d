import math

import numpy as np
import pytest

from membrana.eigen import sigma1
from membrana.geometry import OMEGA1, Geometry1D, build_mesh
from membrana.operators import assemble_scalar, robin_sigma_bc
from membrana.oracles import (EndCondition, TranscendentalSpec, characteristic, dense_eigen_oracle,
                              fine_grid_reference, interval_eigen_oracle)

from conftest import canonical_params


def spec(length, left, right):
    return TranscendentalSpec(length, EndCondition(*left), EndCondition(*right))


def test_neumann_neumann_is_zero():
    assert interval_eigen_oracle(spec(1.0, ("neumann",), ("neumann",))) == pytest.approx(0.0, abs=1e-12)


def test_dirichlet_dirichlet_is_pi_squared():
    assert interval_eigen_oracle(spec(1.0, ("dirichlet",), ("dirichlet",))) == pytest.approx(math.pi ** 2, rel=1e-12)


def test_robin_root_satisfies_symmetric_equation():
    g, ell = 1.0, 1 / 3
    rho = interval_eigen_oracle(spec(ell, ("robin", g), ("robin", g)))
    k = math.sqrt(rho)
    assert k * math.tan(k * ell / 2) == pytest.approx(g, rel=1e-10)
    assert rho == pytest.approx(5.681016883, abs=1e-8)


def test_characteristic_vanishes_at_root():
    s = spec(0.7, ("neumann",), ("robin", 2.0))
    rho = interval_eigen_oracle(s)
    assert abs(characteristic(s, rho)) < 1e-9


def test_invalid_specs():
    with pytest.raises(ValueError):
        EndCondition("periodic")
    with pytest.raises(ValueError):
        TranscendentalSpec(0.0, EndCondition("neumann"), EndCondition("neumann"))


def test_dense_oracle_matches_fd(mesh96):
    op = assemble_scalar(mesh96, OMEGA1, 1.0, 0.0, robin_sigma_bc(OMEGA1, 1.0))
    assert dense_eigen_oracle(op.matrix.toarray()) == pytest.approx(sigma1(mesh96, OMEGA1, 0.0,
                                                                           robin_sigma_bc(OMEGA1, 1.0)).value, abs=1e-9)


def test_fd_converges_to_transcendental():
    geom = Geometry1D((0, 1), (1 / 3, 2 / 3), 1.0, 2.0)
    exact = interval_eigen_oracle(spec(1 / 3, ("robin", 1.0), ("robin", 1.0)))
    errs = [abs(sigma1(build_mesh(geom, n), OMEGA1, 0.0, robin_sigma_bc(OMEGA1, 1.0)).value - exact)
            for n in (48, 96)]
    assert errs[1] < errs[0] / 3.5


def test_fine_grid_reference_dispatch():
    p = canonical_params(mu=2.0)
    assert fine_grid_reference("sigma1", p, 48).value > 0
    sol = fine_grid_reference("logistic", p, 48)
    np.testing.assert_allclose(sol.values, 2.0, atol=1e-10)
    with pytest.raises(ValueError):
        fine_grid_reference("unknown", p, 48)
