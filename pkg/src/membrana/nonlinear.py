"""Stationary nonlinear problems and a parabolic evolution oracle.

Every logistic-type problem here has a concave reaction ``u (m - alpha u)``.
The residual ``F(u) = A u - u (m - alpha u)`` is then convex, and Newton's
method started from a constant super-solution produces a monotonically
decreasing sequence of super-solutions that converges to the maximal, hence
the positive, solution.  This is the monotone sub/super-solution scheme with
quadratic convergence; no separate Picard sweep is needed.

The three-species system is discretised as

    A_I u = u (lam - alpha u - a R v)          on the split layout
    A_N v = v (mu - beta v - P(b u))           on the omega layout

with ``R`` sampling ``v`` at split nodes and ``P`` the control-volume average
of split fields onto omega nodes.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .eigen import lambda1, sigma1
from .errors import Indeterminate, NoPositiveSolution, NotFound, SolverFailure
from .geometry import OMEGA, OMEGA1, OMEGA2, Geometry1D, Mesh
from .operators import (
    assemble_interface, assemble_scalar, coefficient, dirichlet_sigma_bc,
    neumann_bc, robin_sigma_bc, tridiagonal_bands,
)

EPS = np.finfo(float).eps
EPS_BAND = 1e-6
DELTA = 1e-8  # positivity threshold for coexistence states
FALLBACK_DT = 0.05  # time step of the parabolic fallback in solve_coexistence


@dataclass(frozen=True)
class ModelParams:
    geometry: Geometry1D
    lambda1: float = 1.0
    lambda2: float = 1.0
    mu: float = 1.0
    alpha1: float | tuple = 1.0
    alpha2: float | tuple = 1.0
    a1: float = 1.0
    a2: float = 1.0
    b1: float = 1.0
    b2: float = 1.0
    beta: float = 1.0
    d: float = 1.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            val = getattr(self, name)
            if np.ndim(val):
                val = tuple(float(t) for t in np.ravel(val))
                object.__setattr__(self, name, val)
            if np.min(val) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("a1", "a2", "b1", "b2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.beta <= 0 or self.d <= 0:
            raise ValueError("beta and d must be positive")
        for name in ("lambda1", "lambda2", "mu"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def replace(self, **kw) -> "ModelParams":
        return dataclasses.replace(self, **kw)

    def alpha_fields(self, mesh: Mesh):
        return (coefficient(self.alpha1, mesh.idx1.size, "alpha1"),
                coefficient(self.alpha2, mesh.idx2.size, "alpha2"))

    @property
    def alpha_min(self) -> tuple[float, float]:
        return float(np.min(self.alpha1)), float(np.min(self.alpha2))

    def saturation(self) -> float:
        """``max{lambda_i / (alpha_i)_L}``: the constant super-solution of the pair."""
        a1, a2 = self.alpha_min
        return max(self.lambda1 / a1, self.lambda2 / a2)


@dataclass
class Steady:
    """A converged field with its solver diagnostics."""

    values: np.ndarray
    residual: float
    iterations: int


@dataclass
class SemitrivialPair:
    theta1: np.ndarray
    theta2: np.ndarray
    residual: float
    iterations: int

    def joined(self, mesh: Mesh) -> np.ndarray:
        return mesh.join(self.theta1, self.theta2)


@dataclass
class StateTriple:
    u1: np.ndarray
    u2: np.ndarray
    v: np.ndarray
    residual: float = np.nan
    iterations: int = 0
    delta: float = DELTA

    @property
    def positive(self) -> tuple[bool, bool, bool]:
        return tuple(bool(np.min(f) > self.delta) for f in (self.u1, self.u2, self.v))

    @property
    def coexistence(self) -> bool:
        return all(self.positive)

    def within_bounds(self, params: ModelParams, tol: float = 1e-8) -> bool:
        """The a priori bounds ``u_i <= max lambda_i/(alpha_i)_L`` and ``v <= mu``."""
        k = max(params.saturation(), 0.0)
        umax = max(np.max(self.u1), np.max(self.u2))
        return umax <= k + tol * (1 + k) and np.max(self.v) <= max(params.mu, 0.0) + tol * (1 + abs(params.mu))

    def stacked(self, mesh: Mesh) -> np.ndarray:
        return np.concatenate([mesh.join(self.u1, self.u2), self.v])

    @classmethod
    def from_stacked(cls, mesh: Mesh, z, **kw) -> "StateTriple":
        u = z[:mesh.n_split]
        return cls(u[mesh.idx1].copy(), u[mesh.idx2].copy(), z[mesh.n_split:].copy(), **kw)


@dataclass
class LargeSolution:
    values: np.ndarray  # on Omega2, largest M
    m_list: tuple
    history: list = field(repr=False)
    increments: np.ndarray = field(repr=False)  # relative change between the last two M
    residual: float = np.nan


# --------------------------------------------------------------------------
# monotone Newton for tridiagonal logistic problems

def _tolerance(tol, ab, u, growth, alpha):
    """``tol`` floored at the rounding level of the terms that cancel in the residual."""
    norm = float(np.max(np.abs(ab).sum(axis=0)))
    scale = norm * np.abs(u) + np.abs(u * growth) + alpha * u * u
    return max(tol, 64 * EPS * float(np.max(scale)))


def _monotone_newton(matrix, growth, alpha, u0, dirichlet=(), tol=1e-10, maxiter=200):
    """Solve ``A u = u (growth - alpha u)`` by Newton from a super-solution.

    ``dirichlet`` is a pair (rows, values) of identity rows of ``A``.
    """
    ab = tridiagonal_bands(matrix)
    rows, vals = dirichlet if len(dirichlet) else (np.zeros(0, int), np.zeros(0))
    u = np.array(u0, dtype=float)
    u[rows] = vals
    band = ab.copy()
    res = np.inf
    for it in range(1, maxiter + 1):
        f = u * (growth - alpha * u)
        df = growth - 2 * alpha * u
        f[rows] = vals
        df[rows] = 0.0
        au = ab[1] * u
        au[:-1] += ab[0, 1:] * u[1:]
        au[1:] += ab[2, :-1] * u[:-1]
        r = au - f
        prev, res = res, float(np.max(np.abs(r)))
        # stop at the tolerance, or once rounding noise stalls the decrease
        if res <= tol or (res <= _tolerance(tol, ab, u, growth, alpha) and res > 0.5 * prev):
            return u, res, it - 1
        band[1] = ab[1] - df
        du = solve_banded((1, 1), band, r, check_finite=False)
        u = u - du
        if not np.all(np.isfinite(u)):
            break
    raise SolverFailure(f"monotone Newton did not converge (residual {res:.3e})", residual=res, iterations=maxiter)


# --------------------------------------------------------------------------
# scalar logistic problems

def solve_logistic_scalar(mesh: Mesh, region: str, mu: float, c=0.0, beta=1.0, bc=None,
                          d: float = 1.0, tol: float = 1e-10) -> Steady:
    """Positive solution of ``-d u'' = u (mu - c - beta u)`` on a region.

    With homogeneous data a positive solution exists iff ``mu`` exceeds the
    principal eigenvalue of ``-d u'' + c u``; otherwise NoPositiveSolution.
    A positive Dirichlet value always gives a positive solution.
    """
    if bc is None:
        bc = neumann_bc(region)
    n = mesh.region_size(region)
    c = coefficient(c, n, "c")
    beta = coefficient(beta, n, "beta")
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    op = assemble_scalar(mesh, region, d, 0.0, bc)
    dvals = op.dirichlet_values
    if np.any(dvals < 0):
        raise ValueError("Dirichlet data must be non-negative")
    forced = dvals.size and np.max(dvals) > 0
    if not forced:
        s = sigma1(mesh, region, c, bc, d).value
        if mu <= s:
            raise NoPositiveSolution(f"mu = {mu:.6g} <= principal eigenvalue {s:.6g}")
        if mu - s < EPS_BAND:
            raise Indeterminate(f"mu within {EPS_BAND:g} of the existence threshold {s:.6g}")
    growth = mu - c
    k = max(float(np.max(growth / beta)), float(np.max(dvals)) if dvals.size else 0.0)
    u, res, it = _monotone_newton(op.matrix, growth, beta, np.full(n, k),
                                  (op.dirichlet, dvals), tol=tol)
    return Steady(u, res, it)


def solve_omega(mesh: Mesh, which: int, lam: float, alpha=1.0, d: float = 1.0) -> Steady:
    """Uncoupled logistic on Omega_which with Robin(gamma_which) on the membrane."""
    region = {1: OMEGA1, 2: OMEGA2}[which]
    gamma = mesh.geom.gamma1 if which == 1 else mesh.geom.gamma2
    return solve_logistic_scalar(mesh, region, lam, 0.0, alpha, robin_sigma_bc(region, gamma), d=d)


def solve_membrane_logistic(mesh: Mesh, lambda1_: float, lambda2_: float, alpha1=1.0, alpha2=1.0,
                            d: float = 1.0, tol: float = 1e-10) -> SemitrivialPair:
    """The positive pair of the membrane-coupled logistic system.

    Exists iff ``Lambda1(-lambda1, -lambda2) < 0``; inside the band of width
    ``EPS_BAND`` around zero the answer is withheld (Indeterminate).
    """
    lam0 = lambda1(mesh, -lambda1_, -lambda2_, d).value
    if lam0 >= EPS_BAND:
        raise NoPositiveSolution(f"Lambda1(-lambda1,-lambda2) = {lam0:.6g} >= 0")
    if lam0 > -EPS_BAND:
        raise Indeterminate(f"Lambda1(-lambda1,-lambda2) = {lam0:.3e} inside the indeterminacy band")
    al1 = coefficient(alpha1, mesh.idx1.size, "alpha1")
    al2 = coefficient(alpha2, mesh.idx2.size, "alpha2")
    growth = mesh.join(np.full(al1.size, float(lambda1_)), np.full(al2.size, float(lambda2_)))
    alpha = mesh.join(al1, al2)
    k = max(lambda1_ / al1.min(), lambda2_ / al2.min())
    op = assemble_interface(mesh, d, 0.0, 0.0)
    u, res, it = _monotone_newton(op.matrix, growth, alpha, np.full(mesh.n_split, k), tol=tol)
    t1, t2 = mesh.split(u)
    return SemitrivialPair(t1.copy(), t2.copy(), res, it)


def semitrivial_stability(mesh: Mesh, pair: SemitrivialPair, lambda1_, lambda2_, alpha1=1.0, alpha2=1.0,
                          d: float = 1.0) -> float:
    """``Lambda1(-lambda1 + 2 alpha1 theta1, -lambda2 + 2 alpha2 theta2)``; positive for a stable pair."""
    al1 = coefficient(alpha1, mesh.idx1.size)
    al2 = coefficient(alpha2, mesh.idx2.size)
    return lambda1(mesh, -lambda1_ + 2 * al1 * pair.theta1, -lambda2_ + 2 * al2 * pair.theta2, d).value


def approximate_large_solution(mesh: Mesh, lambda2_: float, alpha2=1.0, m_list=(1e2, 1e3, 1e4),
                               d: float = 1.0) -> LargeSolution:
    """Boundary blow-up solution on Omega2 approximated by Dirichlet data M on the membrane.

    Solutions are computed for every M and must increase with M at every
    node; the relative increments between the last two are reported.
    """
    m_list = tuple(float(m) for m in m_list)
    if len(m_list) < 2 or any(b <= a for a, b in zip(m_list, m_list[1:])) or m_list[0] <= 0:
        raise ValueError("m_list must be positive and strictly increasing, with at least two entries")
    history = []
    res = np.nan
    for m in m_list:
        sol = solve_logistic_scalar(mesh, OMEGA2, lambda2_, 0.0, alpha2, dirichlet_sigma_bc(OMEGA2, m), d=d)
        history.append(sol.values)
        res = sol.residual
    for lo, hi in zip(history, history[1:]):
        if np.any(hi < lo * (1 - 1e-12) - 1e-12):
            raise SolverFailure("large-solution sequence is not monotone in M")
    inc = (history[-1] - history[-2]) / history[-1]
    return LargeSolution(history[-1], m_list, history, inc, res)


# --------------------------------------------------------------------------
# three-species system

class CoupledSystem:
    """Discrete residual and Jacobian of the three-species system at fixed parameters."""

    def __init__(self, params: ModelParams, mesh: Mesh):
        self.params = params
        self.mesh = mesh
        p = params
        self.ns, self.no = mesh.n_split, mesh.n_omega
        self.A_I = assemble_interface(mesh, p.d, 0.0, 0.0).matrix
        self.A_N = assemble_scalar(mesh, OMEGA, p.d, 0.0, neumann_bc(OMEGA)).matrix
        n1, n2 = mesh.idx1.size, mesh.idx2.size
        al1, al2 = p.alpha_fields(mesh)
        self.lam = mesh.join(np.full(n1, p.lambda1), np.full(n2, p.lambda2))
        self.alpha = mesh.join(al1, al2)
        self.a = mesh.join(np.full(n1, p.a1), np.full(n2, p.a2))
        self.b = mesh.join(np.full(n1, p.b1), np.full(n2, p.b2))
        self.P = mesh.prolong_matrix
        self.R = mesh.restrict_matrix
        self.norm = max(abs(self.A_I).sum(axis=1).max(), abs(self.A_N).sum(axis=1).max())

    def split(self, z):
        return z[:self.ns], z[self.ns:]

    def reaction(self, z, mu=None):
        """Per-capita growth rates (r_u, r_v) at state z."""
        mu = self.params.mu if mu is None else mu
        u, v = self.split(z)
        ru = self.lam - self.alpha * u - self.a * (self.R @ v)
        rv = mu - self.params.beta * v - self.P @ (self.b * u)
        return ru, rv

    def residual(self, z, mu=None):
        u, v = self.split(z)
        ru, rv = self.reaction(z, mu)
        return np.concatenate([self.A_I @ u - u * ru, self.A_N @ v - v * rv])

    def jacobian(self, z, mu=None):
        u, v = self.split(z)
        ru, rv = self.reaction(z, mu)
        juu = self.A_I - sp.diags(ru - self.alpha * u)
        juv = sp.diags(self.a * u) @ self.R
        jvu = sp.diags(v) @ self.P @ sp.diags(self.b)
        jvv = self.A_N - sp.diags(rv - self.params.beta * v)
        return sp.bmat([[juu, juv], [jvu, jvv]], format="csc")

    def dmu(self, z):
        """Derivative of the residual with respect to mu."""
        _, v = self.split(z)
        return np.concatenate([np.zeros(self.ns), -v])

    def tolerance(self, z, tol):
        return max(tol, 64 * EPS * self.norm * max(1.0, float(np.max(np.abs(z)))))

    def newton(self, z0, mu=None, tol=1e-9, maxiter=60, step_tol=1e-10):
        """Damped Newton with backtracking on the sup-norm residual.

        Converged means residual below ``tol`` (floored at rounding level) and
        a Newton correction below ``step_tol`` relative to the state.  The step
        test matters near semitrivial states: there the residual is already
        tiny while a vanishing component is still of order ``tol``.
        """
        z = np.array(z0, dtype=float)
        r = self.residual(z, mu)
        res = float(np.max(np.abs(r)))
        prev = np.inf
        for it in range(maxiter + 1):
            try:
                dz = spla.splu(self.jacobian(z, mu)).solve(r)
            except RuntimeError as exc:  # singular Jacobian
                raise SolverFailure(f"singular Jacobian: {exc}", residual=res, iterations=it) from exc
            small = float(np.max(np.abs(dz))) <= step_tol * (1.0 + float(np.max(np.abs(z))))
            # the rounding floor is only accepted once the residual stops decreasing
            stalled = res <= self.tolerance(z, tol) and res > 0.5 * prev
            if (res <= tol or stalled) and (small or res == 0.0):
                return z, res, it
            if it == maxiter:
                break
            step = 1.0
            while step > 1e-4:
                zn = z - step * dz
                rn = self.residual(zn, mu)
                rn_res = float(np.max(np.abs(rn)))
                if np.isfinite(rn_res) and rn_res < (1 - 1e-4 * step) * res:
                    break
                if np.isfinite(rn_res) and res <= self.tolerance(z, tol) and rn_res <= self.tolerance(z, tol):
                    break  # inside the rounding floor the residual no longer orders iterates
                step *= 0.5
            else:
                if res <= self.tolerance(z, tol):
                    return z, res, it
                raise SolverFailure("line search failed", residual=res, iterations=it)
            prev = res
            z, r, res = zn, rn, rn_res
        raise SolverFailure(f"Newton did not converge (residual {res:.3e})", residual=res, iterations=maxiter)


def _v_mode(params: ModelParams, mesh: Mesh, pair: SemitrivialPair):
    """Principal Neumann eigenfunction of ``-d v'' + P(b theta) v`` on Omega."""
    b = mesh.join(np.full(mesh.idx1.size, params.b1), np.full(mesh.idx2.size, params.b2))
    pot = mesh.prolong(b * pair.joined(mesh))
    return sigma1(mesh, OMEGA, pot, None, params.d).eigenfunction


def _u_mode(params: ModelParams, mesh: Mesh):
    """Principal eigenfunction of the pair at the (0, 0, mu) semitrivial state."""
    p = params
    r = lambda1(mesh, -p.lambda1 + p.a1 * p.mu, -p.lambda2 + p.a2 * p.mu, p.d)
    return r.eigenfunction


def initial_guesses(params: ModelParams, mesh: Mesh):
    """Seeds for the coexistence Newton solve, most likely first.

    A ladder of amplitudes along the unstable v-direction of the semitrivial
    pair, then a small u-perturbation of the ``(0, 0, mu)`` state.  Small
    amplitudes alone fall back onto the semitrivial pair away from the
    bifurcation point.
    """
    p = params
    seeds = []
    mu_pos = max(p.mu, 0.0)
    if mu_pos <= 0:
        return seeds
    try:
        pair = solve_membrane_logistic(mesh, p.lambda1, p.lambda2, p.alpha1, p.alpha2, p.d)
    except (NoPositiveSolution, Indeterminate):
        pair = None
    if pair is not None:
        phi = _v_mode(p, mesh, pair)
        theta = pair.joined(mesh)
        for eps in (0.05, 0.2, 0.5, 0.9):
            seeds.append(np.concatenate([(1 - 0.5 * eps) * theta, eps * mu_pos * phi]))
    if p.saturation() > 0:
        psi = _u_mode(p, mesh)
        seeds.append(np.concatenate([0.05 * p.saturation() * psi, np.full(mesh.n_omega, mu_pos)]))
    return seeds


def solve_coexistence(params: ModelParams, mesh: Mesh, init: StateTriple | str = "auto",
                      tol: float = 1e-9, evolve_fallback: bool = True,
                      evolve_t_end: float = 200.0) -> StateTriple:
    """A coexistence state of the full system, or NotFound.

    ``init="auto"`` tries several seeds (near the bifurcation from the
    semitrivial pair, near the ``(0, 0, mu)`` state, and a mid-range guess),
    then a parabolic run from positive data.  A converged state is accepted
    only if every component exceeds ``DELTA``.
    """
    if params.mu <= 0:
        raise NotFound("mu <= 0: v cannot persist", evidence="necessary")
    system = CoupledSystem(params, mesh)
    if isinstance(init, StateTriple):
        seeds = [init.stacked(mesh)]
    elif init == "auto":
        seeds = initial_guesses(params, mesh)
    else:
        raise ValueError(f"unknown init {init!r}")
    last = "no seeds"
    evidence = "newton"
    for z0 in seeds:
        try:
            z, res, it = system.newton(z0, tol=tol)
        except SolverFailure as exc:
            last = str(exc)
            continue
        state = StateTriple.from_stacked(mesh, z, residual=res, iterations=it)
        if state.coexistence:
            return state
        last = "converged to a state with a vanishing component"
    if evolve_fallback and not isinstance(init, StateTriple) and seeds:
        z0 = positive_initial_state(params, mesh).stacked(mesh)
        try:
            evolved = evolve_parabolic(params, mesh, StateTriple.from_stacked(mesh, z0), t_end=evolve_t_end,
                                       dt=FALLBACK_DT, steady_tol=1e-7)
            z, res, it = system.newton(evolved.stacked(mesh), tol=tol)
            state = StateTriple.from_stacked(mesh, z, residual=res, iterations=it)
            if state.coexistence:
                return state
            last = "parabolic run approached a state with a vanishing component"
            evidence = "parabolic"
        except SolverFailure as exc:
            last = str(exc)
    raise NotFound(f"no coexistence state: {last}", evidence=evidence)


def positive_initial_state(params: ModelParams, mesh: Mesh) -> StateTriple:
    """A bounded, strictly positive initial condition for the evolution oracle."""
    k = max(params.saturation(), 1.0)
    m = max(params.mu, 1.0)
    return StateTriple(np.full(mesh.idx1.size, 0.5 * k), np.full(mesh.idx2.size, 0.5 * k),
                       np.full(mesh.n_omega, 0.5 * m))


def evolve_parabolic(params: ModelParams, mesh: Mesh, init: StateTriple, t_end: float,
                     dt: float | None = None, steady_tol: float | None = None,
                     blowup_factor: float = 10.0) -> StateTriple:
    """IMEX integration: implicit diffusion, explicit reaction.

    Each step solves ``(I + dt A) z_new = z + dt z r(z)``.  ``I + dt A`` is
    an M-matrix, so non-negativity is kept as long as ``1 + dt r >= 0``; the
    step is halved whenever that fails.  Stationary points of the scheme are
    exactly the discrete stationary states.  With ``steady_tol`` the run stops
    early once ``max|z_new - z| / dt`` falls below it.  The default step is
    the mesh width; a larger ``dt`` is allowed since diffusion is implicit.
    """
    system = CoupledSystem(params, mesh)
    z = init.stacked(mesh)
    if np.any(z < 0):
        raise ValueError("initial state must be non-negative")
    h = min(mesh.h)
    dt = h if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    bound = blowup_factor * max(params.saturation(), params.mu, float(np.max(z)), 1.0)
    A = sp.block_diag([system.A_I, system.A_N], format="csc")
    eye = sp.identity(z.size, format="csc")
    solve = spla.factorized((eye + dt * A).tocsc())
    t = 0.0
    steps = 0
    while t < t_end - 1e-14:
        step = min(dt, t_end - t)
        ru, rv = system.reaction(z)
        r = np.concatenate([ru, rv])
        while 1 + step * r.min() < 0:
            step *= 0.5
        if step != dt:
            rhs_solve = spla.factorized((eye + step * A).tocsc())
        else:
            rhs_solve = solve
        zn = rhs_solve(z + step * z * r)
        zn = np.maximum(zn, 0.0)  # clears rounding-level negatives only
        steps += 1
        t += step
        if not np.all(np.isfinite(zn)) or zn.max() > bound:
            raise SolverFailure(f"blow-up detected at t = {t:.4g}", iterations=steps)
        change = float(np.max(np.abs(zn - z))) / step
        z = zn
        if steady_tol is not None and change < steady_tol:
            break
    res = float(np.max(np.abs(system.residual(z))))
    return StateTriple.from_stacked(mesh, z, residual=res, iterations=steps)


__all__ = [
    "ModelParams", "Steady", "SemitrivialPair", "StateTriple", "LargeSolution", "CoupledSystem",
    "solve_logistic_scalar", "solve_omega", "solve_membrane_logistic", "semitrivial_stability",
    "approximate_large_solution", "solve_coexistence", "evolve_parabolic", "initial_guesses",
    "positive_initial_state", "EPS_BAND", "DELTA", "OMEGA", "OMEGA1", "OMEGA2",
]
