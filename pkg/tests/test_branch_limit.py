import numpy as np
import pytest

from membrana.branch import StepSpec, trace_branch
from membrana.curves import Model
from membrana.errors import Degenerate
from membrana.limit import limit_system_solve

from conftest import canonical_params


def test_branch_joins_mu0_to_mu1(model):
    br = trace_branch(model)
    mus = np.array([pt.mu for pt in br.points])
    assert br.reason == "reconnected with a semitrivial state"
    assert mus.min() >= br.mu0 and mus.max() <= br.mu1 + 1e-6
    assert br.mu1 - mus.max() < 1e-3
    assert all(pt.state.coexistence and pt.state.residual < 1e-9 for pt in br.points)
    arcs = [pt.arclength for pt in br.points]
    assert np.all(np.diff(arcs) > 0)


def test_branch_stability_hint(coarse_model):
    br = trace_branch(coarse_model, step=StepSpec(max_points=6), stability=True)
    assert len(br.points) == 6
    assert all(pt.stability_hint == 1 for pt in br.points)


def test_branch_degenerate_window():
    model = Model(canonical_params(), 48)
    with pytest.raises(Degenerate):
        trace_branch(model, step=StepSpec(initial=0.5))


def test_limit_system_boundary_values(coarse_model):
    lim = limit_system_solve(coarse_model, mu=85.0, m_value=1e3)
    assert lim.residual < 1e-6 * 1e3
    m = coarse_model.mesh
    nl = m.segments[0].n + 1
    assert lim.u2[nl - 1] == pytest.approx(1e3) and lim.v2[nl - 1] == 0.0
    assert lim.v2.max() > 0
    assert np.all(lim.v[m.to_omega[m.idx1]] == 0.0)


def test_limit_system_below_threshold_has_no_v(coarse_model):
    lim = limit_system_solve(coarse_model, mu=10.0, m_value=1e3)
    assert np.abs(lim.v2).max() < 1e-8
    with pytest.raises(ValueError):
        limit_system_solve(coarse_model, mu=-1.0)
