"""The Omega2 system obtained when the inner growth rate tends to infinity.

In that limit u1 blows up in Omega1, v vanishes there, and on Omega2 the pair
``(u2, v)`` solves

    -d u2'' = u2 (lambda2 - alpha2 u2 - a2 v),   -d v'' = v (mu - beta v - b2 u2)

with ``u2 = +inf`` and ``v = 0`` on the membrane and Neumann data on the outer
boundary.  The infinite data is replaced by the Dirichlet value ``M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curves import Model
from .errors import Indeterminate, NoPositiveSolution, SolverFailure
from .geometry import OMEGA2
from .nonlinear import EPS, solve_coexistence, solve_logistic_scalar
from .operators import Dirichlet, Neumann, assemble_scalar


@dataclass
class LimitSolution:
    u2: np.ndarray  # Omega2 nodes
    v2: np.ndarray  # Omega2 nodes
    v: np.ndarray  # omega layout, zero on Omega1
    residual: float
    iterations: int


def _bc(value):
    return {"xL": Neumann(), "a": Dirichlet(value), "b": Dirichlet(value), "xR": Neumann()}


def limit_system_solve(model: Model, mu: float | None = None, lambda2_: float | None = None,
                       m_value: float = 1e4, tol: float = 1e-9, maxiter: int = 80) -> LimitSolution:
    p, mesh = model.params, model.mesh
    mu = p.mu if mu is None else float(mu)
    lam2 = p.lambda2 if lambda2_ is None else float(lambda2_)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    alpha2 = np.broadcast_to(np.asarray(p.alpha2, dtype=float), (mesh.idx2.size,))
    A_u = assemble_scalar(mesh, OMEGA2, p.d, 0.0, _bc(m_value))
    A_v = assemble_scalar(mesh, OMEGA2, p.d, 0.0, _bc(0.0))
    rows = A_u.dirichlet
    n = mesh.idx2.size

    u0 = solve_logistic_scalar(mesh, OMEGA2, lam2, 0.0, alpha2, _bc(m_value), d=p.d).values
    try:
        v0 = solve_logistic_scalar(mesh, OMEGA2, mu, p.b2 * u0, p.beta, _bc(0.0), d=p.d).values
    except (NoPositiveSolution, Indeterminate):
        v0 = np.zeros(n)

    def residual(z):
        u, v = z[:n], z[n:]
        fu = A_u.matrix @ u - u * (lam2 - alpha2 * u - p.a2 * v)
        fv = A_v.matrix @ v - v * (mu - p.beta * v - p.b2 * u)
        fu[rows] = u[rows] - m_value
        fv[rows] = v[rows]
        return np.concatenate([fu, fv])

    def jacobian(z):
        u, v = z[:n], z[n:]
        keep = np.ones(n)
        keep[rows] = 0.0
        juu = A_u.matrix - sp.diags(keep * (lam2 - 2 * alpha2 * u - p.a2 * v))
        juv = sp.diags(keep * p.a2 * u)
        jvu = sp.diags(keep * p.b2 * v)
        jvv = A_v.matrix - sp.diags(keep * (mu - 2 * p.beta * v - p.b2 * u))
        return sp.bmat([[juu, juv], [jvu, jvv]], format="csc")

    norm = float(abs(A_u.matrix).sum(axis=1).max())
    z = np.concatenate([u0, v0])
    r = residual(z)
    res = float(np.max(np.abs(r)))
    for it in range(maxiter + 1):
        floor = max(tol, 64 * EPS * norm * float(np.max(np.abs(z))))
        dz = spla.splu(jacobian(z)).solve(r)
        if res <= floor and float(np.max(np.abs(dz))) <= 1e-10 * (1 + float(np.max(np.abs(z)))):
            break
        if it == maxiter:
            raise SolverFailure(f"limit system Newton did not converge (residual {res:.3e})",
                                residual=res, iterations=it)
        step = 1.0
        while step > 1e-4:
            zn = z - step * dz
            rn = residual(zn)
            rn_res = float(np.max(np.abs(rn)))
            if rn_res < (1 - 1e-4 * step) * res or (res <= floor and rn_res <= floor):
                break
            step *= 0.5
        else:
            if res <= floor:
                break
            raise SolverFailure("limit system line search failed", residual=res, iterations=it)
        z, r, res = zn, rn, rn_res
    u2, v2 = z[:n].copy(), z[n:].copy()
    u2[rows], v2[rows] = m_value, 0.0  # Newton leaves rounding noise on the identity rows
    v = np.zeros(mesh.n_omega)
    v[mesh.to_omega[mesh.idx2]] = v2  # interface nodes carry the Dirichlet zero
    return LimitSolution(u2, v2, v, res, it)


@dataclass(frozen=True)
class LimitProbe:
    lambda1: float
    min_u1: float
    sup_distance_v: float  # full v against the limit v on Omega2 nodes
    sup_v_omega1: float


def limit_convergence(model: Model, lambda1_list, mu: float | None = None,
                      m_value: float = 1e4) -> tuple[LimitSolution, list]:
    """Full coexistence states along increasing lambda1 compared with the limit system."""
    p, mesh = model.params, model.mesh
    mu = p.mu if mu is None else float(mu)
    lim = limit_system_solve(model, mu=mu, m_value=m_value)
    probes = []
    for lam1 in lambda1_list:
        state = solve_coexistence(p.replace(lambda1=float(lam1), mu=mu), mesh)
        v = mesh.restrict(state.v)
        probes.append(LimitProbe(float(lam1), float(state.u1.min()),
                                 float(np.max(np.abs(v[mesh.idx2] - lim.v2))),
                                 float(v[mesh.idx1].max())))
    return lim, probes


__all__ = ["LimitSolution", "LimitProbe", "limit_system_solve", "limit_convergence"]
