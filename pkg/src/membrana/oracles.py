"""Independent reference computations for tests and manual inspection.

Nothing in the production solvers imports this module.  The interval oracle
works from exact trigonometric fundamental solutions, the dense oracle from a
full LAPACK eigen-decomposition plus inverse iteration from random starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SolverFailure


@dataclass(frozen=True)
class EndCondition:
    kind: str  # "neumann" | "robin" | "dirichlet"
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neumann", "robin", "dirichlet"):
            raise ValueError(f"unknown end condition {self.kind!r}")


@dataclass(frozen=True)
class TranscendentalSpec:
    length: float
    left: EndCondition
    right: EndCondition

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("interval length must be positive")


def _left_solution(k, x, left: EndCondition):
    """Value and derivative at ``x`` of the solution of ``-phi'' = k^2 phi`` meeting the left condition."""
    if left.kind == "dirichlet":
        # phi(0) = 0, phi'(0) = 1
        s = np.sinc(k * x / math.pi) * x  # sin(kx)/k, smooth at k = 0
        return s, np.cos(k * x)
    g = 0.0 if left.kind == "neumann" else left.gamma
    # outward normal at the left end is -x: -phi'(0) + g phi(0) = 0
    s = np.sinc(k * x / math.pi) * x
    return np.cos(k * x) + g * s, -k * np.sin(k * x) + g * np.cos(k * x)


def characteristic(spec: TranscendentalSpec, rho):
    k = np.sqrt(np.asarray(rho, dtype=float))
    phi, dphi = _left_solution(k, spec.length, spec.left)
    right = spec.right
    if right.kind == "dirichlet":
        return phi
    g = 0.0 if right.kind == "neumann" else right.gamma
    return dphi + g * phi


def interval_eigen_oracle(spec: TranscendentalSpec, *, scan_points: int = 20001) -> float:
    """Smallest eigenvalue of ``-phi'' = rho phi`` on ``(0, length)``."""
    top = (2 * math.pi / spec.length) ** 2
    f0 = float(characteristic(spec, 0.0))
    if f0 == 0.0:
        return 0.0
    rho = np.linspace(0.0, top, scan_points)
    f = characteristic(spec, rho)
    sgn = np.sign(f)
    idx = np.nonzero(sgn[1:] * sgn[:-1] <= 0)[0]
    if idx.size == 0:
        raise SolverFailure("no sign change of the characteristic function in the scan window")
    lo, hi = float(rho[idx[0]]), float(rho[idx[0] + 1])
    flo = float(characteristic(spec, lo))
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        fm = float(characteristic(spec, mid))
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dense_eigen_oracle(matrix, *, starts: int = 20, seed: int = 0, agree: float = 1e-10) -> float:
    """Principal (smallest real part) eigenvalue of a small matrix.

    The full spectrum locates the eigenvalue; inverse iteration from
    ``starts`` random positive vectors with Rayleigh refinement must agree.
    """
    a = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n > 2000:
        raise ValueError("dense oracle limited to 2000 unknowns")
    ev = sla.eigvals(a)
    lam0 = float(ev.real.min())
    if n == 1:
        return lam0
    gap = np.sort(ev.real)[1] - lam0 if n > 1 else 1.0
    shift = lam0 - max(1e-3 * gap, 1e-9 * (1 + abs(lam0)))
    lu = sla.lu_factor(a - shift * np.eye(n))
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(starts):
        x = rng.random(n) + 0.1
        for _ in range(200):
            y = sla.lu_solve(lu, x)
            y /= np.linalg.norm(y)
            if np.linalg.norm(y - x) < 1e-14:
                x = y
                break
            x = y
        # x is a converged eigenvector, so the plain quotient is exact to rounding
        vals.append(float(x @ (a @ x) / (x @ x)))
    vals = np.array(vals)
    if vals.max() - vals.min() > agree * max(1.0, abs(lam0)):
        raise SolverFailure(f"dense oracle starts disagree: spread {vals.max() - vals.min():.3e}")
    return float(np.median(vals))


def fine_grid_reference(problem_id: str, params, n_fine: int, **kwargs):
    """Re-run a named production solver on a finer mesh.

    ``problem_id`` is one of ``"logistic"``, ``"semitrivial"``, ``"coexistence"``,
    ``"sigma1"``, ``"sigma2"``.  Returns the solver's native result.
    """
    from . import eigen, nonlinear
    from .geometry import build_mesh

    mesh = build_mesh(params.geometry, n_fine)
    if problem_id == "sigma1":
        return eigen.sigma_one(mesh, params.d)
    if problem_id == "sigma2":
        return eigen.sigma_two(mesh, params.d)
    if problem_id == "logistic":
        return nonlinear.solve_logistic_scalar(mesh, kwargs.pop("region", "Omega"), params.mu,
                                               kwargs.pop("c", 0.0), params.beta, kwargs.pop("bc", None),
                                               d=params.d)
    if problem_id == "semitrivial":
        return nonlinear.solve_membrane_logistic(mesh, params.lambda1, params.lambda2,
                                                 params.alpha1, params.alpha2, d=params.d)
    if problem_id == "coexistence":
        return nonlinear.solve_coexistence(params, mesh=mesh, **kwargs)
    raise ValueError(f"unknown problem id {problem_id!r}")
