"""Principal eigenpairs of the scalar and membrane-coupled operators.

All operators assembled in :mod:`membrana.operators` are irreducible Z-matrices
on each connected piece, so the principal eigenvalue is the smallest one and
its eigenvector is positive.  We find it by shifted inverse iteration.  For a
positive iterate ``x`` the Collatz-Wielandt quotients ``(A x)_i / x_i`` bracket
the principal eigenvalue from both sides; the shift is moved up to just below
the lower bracket, which keeps ``A - s I`` a non-singular M-matrix (positive
inverse) while accelerating convergence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import EigenConvergenceError
from .geometry import OMEGA, OMEGA1, OMEGA2, Mesh
from .operators import (
    SparseOperator, assemble_interface, assemble_scalar, neumann_bc, robin_sigma_bc,
    tridiagonal_bands,
)

EPS = np.finfo(float).eps


@dataclass
class EigenResult:
    value: float
    eigenfunction: np.ndarray  # sup-norm 1
    residual: float
    iterations: int


def _band_matvec(ab, x):
    y = ab[1] * x
    y[:-1] += ab[0, 1:] * x[1:]
    y[1:] += ab[2, :-1] * x[:-1]
    return y


def inverse_iteration(matrix, weights=None, *, vec_tol=1e-10, res_tol=1e-9, maxiter=10_000) -> EigenResult:
    """Principal eigenpair of an irreducible tridiagonal Z-matrix.

    ``weights`` is an optional positive diagonal that symmetrises the matrix;
    when given, the eigenvalue is the weighted Rayleigh quotient (second-order
    accurate in the eigenvector error).  The residual tolerance is floored at
    the rounding level ``64 eps ||A||``.
    """
    ab = tridiagonal_bands(matrix)
    n = ab.shape[1]
    if n == 1:
        v = float(ab[1, 0])
        return EigenResult(v, np.ones(1), 0.0, 0)
    norm = float(np.max(np.abs(ab).sum(axis=0)))
    res_tol = max(res_tol, 64 * EPS * norm)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    x = np.ones(n)
    shift = float(np.min(_band_matvec(ab, x))) - 1.0
    shifted = ab.copy()
    value = np.nan
    residual = np.inf
    for it in range(1, maxiter + 1):
        shifted[1] = ab[1] - shift
        y = solve_banded((1, 1), shifted, x, overwrite_ab=False, check_finite=False)
        y /= y[np.argmax(np.abs(y))]
        change = float(np.max(np.abs(y - x)))
        x = y
        ax = _band_matvec(ab, x)
        value = float(np.dot(w * x, ax) / np.dot(w * x, x))
        residual = float(np.max(np.abs(ax - value * x)))
        if np.all(x > 1e-250):
            q = ax / x
            lo, hi = float(q.min()), float(q.max())
        else:
            lo, hi = -np.inf, np.inf
        # a tight Collatz-Wielandt bracket also certifies convergence; it is the
        # only test that terminates when two weakly coupled pieces are nearly
        # degenerate and the vector keeps drifting between them
        tight = hi - lo <= vec_tol * (1.0 + abs(value))
        if (change < vec_tol or tight) and residual <= res_tol:
            return EigenResult(value, x, residual, it)
        cand = lo - max(hi - lo, 1e-8 * (1.0 + abs(lo)))
        if np.isfinite(cand) and cand > shift:
            shift = cand
    raise EigenConvergenceError(
        f"inverse iteration did not converge in {maxiter} iterations (residual {residual:.3e})",
        residual=residual, iterations=maxiter,
    )


def _components(op: SparseOperator, mesh: Mesh):
    """Index blocks of the connected pieces of a scalar operator."""
    n = op.dim
    if op.region == OMEGA2:
        nl = mesh.segments[0].n + 1
        return [np.arange(nl), np.arange(nl, n)]
    return [np.arange(n)]


def principal(op: SparseOperator, mesh: Mesh | None = None, **kw) -> EigenResult:
    """Principal eigenpair of an assembled operator (Dirichlet rows eliminated).

    For the two-piece Omega2 the eigenvalue is the minimum over the pieces and
    the eigenfunction is that piece's, extended by zero.
    """
    n = op.dim
    keep = np.ones(n, dtype=bool)
    keep[op.dirichlet] = False
    blocks = _components(op, mesh) if mesh is not None else [np.arange(n)]
    best = None
    total_it = 0
    for blk in blocks:
        blk = blk[keep[blk]]
        if blk.size == 0:
            continue
        sub = op.matrix[blk][:, blk]
        r = inverse_iteration(sub, op.weights[blk], **kw)
        total_it += r.iterations
        if best is None or r.value < best[0].value:
            best = (r, blk)
    r, blk = best
    phi = np.zeros(n)
    phi[blk] = r.eigenfunction
    return EigenResult(r.value, phi, r.residual, total_it)


def sigma1(mesh: Mesh, region: str, c=0.0, bc=None, d: float = 1.0) -> EigenResult:
    """Principal eigenvalue of ``-d u'' + c u`` on a region; Neumann by default."""
    if bc is None:
        bc = neumann_bc(region)
    op = assemble_scalar(mesh, region, d, c, bc)
    return principal(op, mesh)


def lambda1(mesh: Mesh, c1=0.0, c2=0.0, d: float = 1.0) -> EigenResult:
    """Principal eigenvalue of the membrane-coupled pair ``(-d u1'' + c1 u1, -d u2'' + c2 u2)``."""
    op = assemble_interface(mesh, d, c1, c2)
    return principal(op)


def lambda1_growth_check(mesh: Mesh, c1, c2, mu_list, d: float = 1.0):
    """Sample ``mu -> Lambda1(mu c1, mu c2)`` for strictly positive potentials."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if np.any(c1 <= 0) or np.any(c2 <= 0):
        raise ValueError("growth check needs strictly positive potentials")
    return [(float(m), lambda1(mesh, m * c1, m * c2, d).value) for m in mu_list]


def sigma_one(mesh: Mesh, d: float = 1.0) -> EigenResult:
    """Omega1 with Robin(gamma1) on Sigma: the existence threshold of omega_1."""
    return sigma1(mesh, OMEGA1, 0.0, robin_sigma_bc(OMEGA1, mesh.geom.gamma1), d)


def sigma_two(mesh: Mesh, d: float = 1.0) -> EigenResult:
    """Omega2 with Robin(gamma2) on Sigma, Neumann on Gamma: threshold of omega_2."""
    return sigma1(mesh, OMEGA2, 0.0, robin_sigma_bc(OMEGA2, mesh.geom.gamma2), d)


__all__ = [
    "EigenResult", "inverse_iteration", "principal", "sigma1", "lambda1",
    "lambda1_growth_check", "sigma_one", "sigma_two", "OMEGA", "OMEGA1", "OMEGA2",
]
