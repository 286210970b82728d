"""Threshold curves and bifurcation values built on the eigen and logistic solvers.

A :class:`Model` binds parameters to a mesh and memoises the expensive
subproblems (principal eigenvalues with constant potentials, semitrivial
pairs, the uncoupled thresholds).  Cache keys are the exact float inputs, so
a repeated evaluation returns bit-identical results.

Sign conventions used throughout, with ``Lam(x1, x2)`` the principal
eigenvalue of the membrane pair with constant potentials:

* ``Lam(-nu1, -nu2)`` is decreasing in ``nu1``; its zero set is the graph
  ``nu1 = H(nu2)`` for ``nu2 < sigma2``.
* ``Lam(-lambda1 + a1 mu, -lambda2 + a2 mu)`` is increasing in ``mu``; its
  root is ``mu1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .eigen import lambda1, sigma1, sigma_one, sigma_two
from .errors import Indeterminate, NoPositiveSolution, NotFound, OutOfDomain
from .geometry import OMEGA, Mesh, build_mesh, measures
from .nonlinear import (
    EPS_BAND, ModelParams, SemitrivialPair, solve_logistic_scalar, solve_membrane_logistic,
    solve_omega,
)


class Flag(str, enum.Enum):
    OK = "OK"
    OUT_OF_DOMAIN = "OutOfDomain"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class CurveSample:
    abscissa: float
    value: float
    solver_residual: float
    flag: Flag = Flag.OK

    @property
    def ok(self) -> bool:
        return self.flag is Flag.OK


ROOT_XTOL = 1e-12


def find_root(f, lo: float, hi: float, flo: float | None = None, fhi: float | None = None) -> float:
    """Root of a monotone function on a sign-changing bracket."""
    flo = f(lo) if flo is None else flo
    fhi = f(hi) if fhi is None else fhi
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NotFound(f"no sign change on [{lo:.6g}, {hi:.6g}]")
    return brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)


def expand_bracket(f, x0: float, step: float, want_positive: bool, limit: int = 60):
    """Walk ``x0, x0 + step, x0 + 2 step, x0 + 4 step, ...`` until ``f`` has the wanted sign.

    Returns ``(x, f(x), prev)`` where ``prev`` is the last point visited with
    the other sign, or None when ``x0`` already qualifies.
    """
    x, prev = x0, None
    for k in range(limit):
        fx = f(x)
        if (fx > 0) == want_positive and fx != 0.0:
            return x, fx, prev
        prev = x
        x = x0 + step * 2.0 ** k
    raise NotFound("bracket expansion exhausted")


def slope_formula(geom) -> float:
    """Derivative of the zero-level curve at the origin: ``-(g1/g2)(|O2|/|O1|)``."""
    m1, m2 = measures(geom)
    return -(geom.gamma1 / geom.gamma2) * (m2 / m1)


def ghat_slope_formula(geom, a1: float, a2: float) -> float:
    m1, m2 = measures(geom)
    g1, g2 = geom.gamma1, geom.gamma2
    return (g1 * a2 * m2 + g2 * a1 * m1) / (g1 * m2 + g2 * m1)


def g_equal_small_slope_formula(geom, alpha1: float, alpha2: float, b1: float, b2: float) -> float:
    """Limit of ``g(lam)/lam`` as ``lam -> 0+`` in the equal-growth case.

    The small pair is asymptotically the constant ``s lam`` with
    ``s = (g1|O2| + g2|O1|)/(g1 a2 |O2| + g2 a1 |O1|)``, and the Neumann
    eigenvalue of a small constant-per-region potential is its mean.
    """
    m1, m2 = measures(geom)
    g1, g2 = geom.gamma1, geom.gamma2
    s = (g1 * m2 + g2 * m1) / (g1 * alpha2 * m2 + g2 * alpha1 * m1)
    return s * (b1 * m1 + b2 * m2) / (m1 + m2)


class Model:
    """Parameters bound to a mesh, with per-instance memoisation."""

    def __init__(self, params: ModelParams, n_per_unit: int = 96, mesh: Mesh | None = None):
        self.params = params
        self.mesh = mesh if mesh is not None else build_mesh(params.geometry, n_per_unit)
        self._lam = {}
        self._pair = {}
        self._g = {}
        self._H = {}
        self._mu_star = {}
        self._sigmas = None

    def with_params(self, **kw) -> "Model":
        """A model with changed scalars on the same mesh (fresh cache)."""
        return Model(self.params.replace(**kw), mesh=self.mesh)

    # -- primitives -------------------------------------------------------
    def lam(self, x1: float, x2: float) -> float:
        """Principal eigenvalue of the membrane pair with constant potentials."""
        key = (float(x1), float(x2))
        if key not in self._lam:
            self._lam[key] = lambda1(self.mesh, key[0], key[1], self.params.d).value
        return self._lam[key]

    @property
    def sigmas(self) -> tuple[float, float]:
        if self._sigmas is None:
            self._sigmas = (sigma_one(self.mesh, self.params.d).value, sigma_two(self.mesh, self.params.d).value)
        return self._sigmas

    def pair(self, lambda1_: float, lambda2_: float) -> SemitrivialPair:
        """Semitrivial pair; raises NoPositiveSolution or Indeterminate."""
        key = (float(lambda1_), float(lambda2_))
        hit = self._pair.get(key)
        if hit is None:
            p = self.params
            try:
                hit = solve_membrane_logistic(self.mesh, key[0], key[1], p.alpha1, p.alpha2, p.d)
            except (NoPositiveSolution, Indeterminate) as exc:
                hit = exc
            self._pair[key] = hit
        if isinstance(hit, Exception):
            raise hit
        return hit

    def competition_potential(self, pair: SemitrivialPair) -> np.ndarray:
        """``b1 theta1 chi1 + b2 theta2 chi2`` on the omega layout."""
        p, m = self.params, self.mesh
        return m.prolong(m.join(p.b1 * pair.theta1, p.b2 * pair.theta2))

    # -- H ----------------------------------------------------------------
    def curve_H(self, nu2: float) -> CurveSample:
        nu2 = float(nu2)
        if nu2 in self._H:
            return self._H[nu2]
        s2 = self.sigmas[1]
        if nu2 >= s2 - EPS_BAND:
            out = CurveSample(nu2, math.nan, math.nan, Flag.OUT_OF_DOMAIN)
        else:
            f = lambda nu1: self.lam(-nu1, -nu2)  # noqa: E731
            s1 = self.sigmas[0]
            hi, fhi, _ = expand_bracket(f, s1, 1.0, want_positive=False)
            lo, flo, _ = expand_bracket(f, min(0.0, s1) - 1.0, -1.0, want_positive=True)
            root = find_root(f, lo, hi, flo, fhi)
            out = CurveSample(nu2, root, abs(f(root)))
        self._H[nu2] = out
        return out

    def H(self, nu2: float) -> float:
        s = self.curve_H(nu2)
        if not s.ok:
            raise OutOfDomain(f"H undefined at nu2 = {nu2:.6g} (sigma2 = {self.sigmas[1]:.6g})")
        return s.value

    def curve_H_slope_at_zero(self, step: float = 1e-3) -> float:
        """Central difference at 0, one Richardson step (h, h/2)."""
        def central(s):
            return (self.H(s) - self.H(-s)) / (2 * s)
        d1, d2 = central(step), central(step / 2)
        return (4 * d2 - d1) / 3

    # -- G (script) -------------------------------------------------------
    def curve_G(self, mu: float, lambda2_: float | None = None) -> CurveSample:
        """``a1 mu + H(lambda2 - a2 mu)``, defined for ``mu > (lambda2 - sigma2)/a2``."""
        p = self.params
        lam2 = p.lambda2 if lambda2_ is None else float(lambda2_)
        arg = lam2 - p.a2 * mu
        h = self.curve_H(arg)
        if not h.ok:
            return CurveSample(mu, math.nan, math.nan, h.flag)
        return CurveSample(mu, p.a1 * mu + h.value, h.solver_residual)

    def G_domain_start(self, lambda2_: float | None = None) -> float:
        p = self.params
        lam2 = p.lambda2 if lambda2_ is None else lambda2_
        if p.a2 == 0:
            return -math.inf if lam2 < self.sigmas[1] - EPS_BAND else math.inf
        return (lam2 - self.sigmas[1]) / p.a2

    # -- g and mu0 --------------------------------------------------------
    def curve_g(self, lambda1_: float, lambda2_: float | None = None) -> CurveSample:
        """Neumann eigenvalue on Omega with the semitrivial competition potential."""
        lam2 = self.params.lambda2 if lambda2_ is None else float(lambda2_)
        key = (float(lambda1_), lam2)
        if key in self._g:
            return self._g[key]
        try:
            pair = self.pair(*key)
        except NoPositiveSolution:
            out = CurveSample(key[0], math.nan, math.nan, Flag.OUT_OF_DOMAIN)
        except Indeterminate:
            out = CurveSample(key[0], math.nan, math.nan, Flag.INDETERMINATE)
        else:
            r = sigma1(self.mesh, OMEGA, self.competition_potential(pair), None, self.params.d)
            out = CurveSample(key[0], r.value, r.residual)
        self._g[key] = out
        return out

    def compute_mu0(self, lambda1_: float, lambda2_: float | None = None) -> float:
        s = self.curve_g(lambda1_, lambda2_)
        if not s.ok:
            raise OutOfDomain(f"mu0 needs the semitrivial pair; flag {s.flag.value}")
        return s.value

    def v_growth_at_pair(self, lambda1_, lambda2_, mu) -> float:
        """``sigma1[-Lap + b theta - mu; N]``: negative when v invades the semitrivial pair."""
        pair = self.pair(lambda1_, lambda2_)
        return sigma1(self.mesh, OMEGA, self.competition_potential(pair) - mu, None, self.params.d).value

    def curve_g_equal(self, lam: float) -> CurveSample:
        if lam <= 0:
            return CurveSample(lam, math.nan, math.nan, Flag.OUT_OF_DOMAIN)
        return self.curve_g(lam, lam)

    # -- mu1 --------------------------------------------------------------
    def mu1_map(self, lambda1_, lambda2_, mu) -> float:
        p = self.params
        return self.lam(-lambda1_ + p.a1 * mu, -lambda2_ + p.a2 * mu)

    def compute_mu1(self, lambda1_: float, lambda2_: float | None = None, window=None) -> float:
        """Root in mu of ``Lam(-lambda1 + a1 mu, -lambda2 + a2 mu)``."""
        p = self.params
        lam2 = p.lambda2 if lambda2_ is None else float(lambda2_)
        if self.lam(-lambda1_, -lam2) >= 0:
            raise OutOfDomain("mu1 needs Lambda1(-lambda1, -lambda2) < 0")
        if window is None:
            rates = [lam / a for lam, a in ((lambda1_, p.a1), (lam2, p.a2)) if a > 0]
            if len(rates) < 2:
                raise OutOfDomain("default mu1 window needs a1, a2 > 0; pass a window")
            window = (0.0, max(rates) + 1.0)
        lo, hi = window
        f = lambda mu: self.mu1_map(lambda1_, lam2, mu)  # noqa: E731
        flo, fhi = f(lo), f(hi)
        if flo >= 0 or fhi <= 0:
            raise OutOfDomain(f"no sign change of the mu1 map on [{lo:.6g}, {hi:.6g}]")
        return find_root(f, lo, hi, flo, fhi)

    # -- sigma0 and G hat -------------------------------------------------
    def curve_sigma0_and_Ghat(self, mu: float, check_tol: float = 1e-8) -> tuple[float, float]:
        """Root of ``-sigma + H(sigma) = (a2 - a1) mu`` and ``Ghat = sigma0 + a2 mu``.

        ``H(sigma) - sigma - k`` has the sign of ``Lam(-sigma - k, -sigma)``
        (``Lam`` decreases in its first slot), so the root is bracketed on
        that eigenvalue without nesting a second root solve.
        """
        if mu < 0:
            raise OutOfDomain("mu must be non-negative")
        p = self.params
        k = (p.a2 - p.a1) * mu
        f = lambda s: self.lam(-s - k, -s)  # noqa: E731
        hi, fhi, _ = expand_bracket(f, 0.0, 1.0, want_positive=False)
        lo, flo, _ = expand_bracket(f, 0.0, -1.0, want_positive=True)
        s0 = find_root(f, lo, hi, flo, fhi)
        ghat = s0 + p.a2 * mu
        if s0 < self.sigmas[1] - EPS_BAND:
            alt = self.H(s0) + p.a1 * mu
            if abs(alt - ghat) > check_tol * max(1.0, abs(ghat)):
                raise NotFound(f"Ghat consistency check failed: {ghat!r} vs {alt!r}")
        return s0, ghat

    # -- large-parameter helpers ------------------------------------------
    def neumann_logistic(self, mu: float, c) -> np.ndarray:
        """Neumann logistic on Omega, zero when it has no positive solution."""
        try:
            return solve_logistic_scalar(self.mesh, OMEGA, mu, c, self.params.beta, None, d=self.params.d).values
        except (NoPositiveSolution, Indeterminate):
            return np.zeros(self.mesh.n_omega)

    def omega_field(self, which: int, lam: float) -> np.ndarray:
        p = self.params
        alpha = p.alpha1 if which == 1 else p.alpha2
        try:
            return solve_omega(self.mesh, which, lam, alpha, p.d).values
        except (NoPositiveSolution, Indeterminate):
            return np.zeros(self.mesh.region_size("Omega1" if which == 1 else "Omega2"))

    def mu_star_bound(self, lambda1_: float, lambda2_: float | None = None) -> float:
        """Constructive non-existence bound in mu.

        Any coexistence state has ``u_i <= K`` with ``K = max lambda_i/(alpha_i)_L``,
        so ``v >= w`` with ``w`` the Neumann logistic for potential
        ``K (b1 chi1 + b2 chi2)``.  Then the pair ``(u1, u2)`` would be a
        positive eigen-solution of an operator with principal eigenvalue
        ``Lam(-lambda1 + a1 w, -lambda2 + a2 w) <= 0``; the bound is the
        smallest mu where that eigenvalue turns positive.
        """
        p, m = self.params, self.mesh
        lam2 = p.lambda2 if lambda2_ is None else float(lambda2_)
        key = (float(lambda1_), lam2)
        if key not in self._mu_star:
            try:
                self._mu_star[key] = self._mu_star_bound(*key)
            except (OutOfDomain, NotFound) as exc:
                self._mu_star[key] = exc
        hit = self._mu_star[key]
        if isinstance(hit, Exception):
            raise hit
        return hit

    def _mu_star_bound(self, lambda1_: float, lam2: float) -> float:
        p, m = self.params, self.mesh
        k = max(lambda1_ / p.alpha_min[0], lam2 / p.alpha_min[1], 0.0)
        c = m.prolong(m.join(np.full(m.idx1.size, k * p.b1), np.full(m.idx2.size, k * p.b2)))

        def f(mu):
            w = m.restrict(self.neumann_logistic(mu, c))
            w1, w2 = m.split(w)
            return lambda1(m, -lambda1_ + p.a1 * w1, -lam2 + p.a2 * w2, p.d).value

        if p.a1 == 0 and p.a2 == 0:
            raise OutOfDomain("no finite bound without competition on u")
        start = max(sigma1(m, OMEGA, c, None, p.d).value, 0.0)
        hi, fhi, lo = expand_bracket(f, start, 1.0 + abs(start), want_positive=True)
        return hi if lo is None else find_root(f, lo, hi, None, fhi)

    def lambda_star_bound(self, mu: float) -> float:
        """Constructive non-existence bound in the equal-growth mode.

        A coexistence state has ``u_i >= omega_i(lam - a_i mu)`` (``v <= mu``),
        so it cannot exist once ``sigma1[-Lap + b omega chi; N] >= mu``.
        """
        p, m = self.params, self.mesh

        def f(lam):
            w1 = self.omega_field(1, lam - p.a1 * mu)
            w2 = self.omega_field(2, lam - p.a2 * mu)
            pot = m.prolong(m.join(p.b1 * w1, p.b2 * w2))
            return sigma1(m, OMEGA, pot, None, p.d).value - mu

        if mu <= 0:
            raise OutOfDomain("mu must be positive")
        if p.b1 == 0 and p.b2 == 0:
            raise OutOfDomain("no finite bound without competition on v")
        start = min(self.sigmas) + min(p.a1, p.a2) * mu
        hi, fhi, lo = expand_bracket(f, start, 1.0 + abs(start), want_positive=True)
        return hi if lo is None else find_root(f, lo, hi, None, fhi)


__all__ = [
    "Flag", "CurveSample", "Model", "find_root", "expand_bracket", "slope_formula",
    "ghat_slope_formula", "g_equal_small_slope_formula",
]
