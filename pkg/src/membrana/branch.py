"""Continuation in mu of the coexistence branch leaving the semitrivial pair."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curves import Model
from .errors import Degenerate, SolverFailure
from .nonlinear import DELTA, CoupledSystem, StateTriple, _v_mode


@dataclass(frozen=True)
class StepSpec:
    initial: float = 0.02  # first offset from mu0 and initial step
    min_step: float = 1e-5
    max_step: float = 0.1
    max_points: int = 400


@dataclass
class BranchPoint:
    mu: float
    state: StateTriple
    arclength: float
    stability_hint: int | None = None  # +1 if the linearisation is stable


@dataclass
class Branch:
    points: list
    mu0: float
    mu1: float
    reason: str  # why tracing stopped


def _stability(system: CoupledSystem, z, mu) -> int:
    """Sign of the leftmost real part of the Jacobian spectrum (+1: decaying perturbations)."""
    ev = sla.eigvals(system.jacobian(z, mu).toarray())
    return 1 if ev.real.min() > 0 else -1


def _positive(system: CoupledSystem, z) -> bool:
    u, v = system.split(z)
    return bool(u.min() > DELTA and v.min() > DELTA)


def _arclength_step(system, z, mu, tz, tmu, ds, tol=1e-9, maxiter=30):
    """Pseudo-arclength corrector for the augmented system ``(F(z, mu), t.(x - x_pred))``."""
    zp, mup = z + ds * tz, mu + ds * tmu
    zc, muc = zp.copy(), mup
    for _ in range(maxiter):
        r = system.residual(zc, muc)
        c = tz @ (zc - zp) + tmu * (muc - mup)
        if max(np.max(np.abs(r)), abs(c)) <= system.tolerance(zc, tol):
            return zc, muc
        jac = sp.bmat([[system.jacobian(zc, muc), system.dmu(zc)[:, None]],
                       [tz[None, :], np.array([[tmu]])]], format="csc")
        dx = spla.splu(jac).solve(np.concatenate([r, [c]]))
        zc, muc = zc - dx[:-1], muc - dx[-1]
        if not np.all(np.isfinite(zc)):
            break
    raise SolverFailure("arclength corrector did not converge")


def trace_branch(model: Model, lambda1_: float | None = None, lambda2_: float | None = None,
                 step: StepSpec = StepSpec(), stability: bool = False) -> Branch:
    """Natural-parameter continuation from mu0 toward mu1.

    Steps are halved on Newton failure; below ``min_step`` one pseudo-arclength
    step is tried before giving up, which carries the trace around a fold.
    Tracing stops when a component collapses below ``DELTA`` (reconnection with
    a semitrivial state) or on step underflow.
    """
    p = model.params
    lam1 = p.lambda1 if lambda1_ is None else float(lambda1_)
    lam2 = p.lambda2 if lambda2_ is None else float(lambda2_)
    mu0 = model.compute_mu0(lam1, lam2)
    mu1 = model.compute_mu1(lam1, lam2)
    if abs(mu1 - mu0) < 10 * step.initial:
        raise Degenerate(f"|mu1 - mu0| = {abs(mu1 - mu0):.3g} is below 10 initial steps")
    params = p.replace(lambda1=lam1, lambda2=lam2)
    mesh = model.mesh
    system = CoupledSystem(params, mesh)
    sgn = 1.0 if mu1 > mu0 else -1.0

    mu = mu0 + sgn * step.initial
    pair = model.pair(lam1, lam2)
    theta = pair.joined(mesh)
    phi = _v_mode(params, mesh, pair)
    z = None
    for eps in (0.01, 0.05, 0.2, 0.5):
        try:
            zc, _, _ = system.newton(np.concatenate([theta, eps * abs(mu) * phi]), mu)
        except SolverFailure:
            continue
        if _positive(system, zc):
            z = zc
            break
    if z is None:
        raise SolverFailure("could not leave the semitrivial pair near mu0")

    scale = 1.0 / math.sqrt(z.size)
    points = [BranchPoint(mu, _state(system, mesh, z, mu), 0.0,
                          _stability(system, z, mu) if stability else None)]
    prev = None
    ds = step.initial
    reason = "max points"
    while len(points) < step.max_points:
        if prev is not None:
            dz, dm = z - prev[0], mu - prev[1]
            tz = dz / max(abs(dm), 1e-300)
        else:
            tz = np.zeros_like(z)
        mu_new = mu + sgn * ds
        guess = z + tz * (mu_new - mu)
        try:
            zn, _, it = system.newton(np.maximum(guess, 0.0), mu_new)
            ok = True
        except SolverFailure:
            ok, it = False, 99
        if ok and not _positive(system, zn):
            # crossed the far end: refine toward the reconnection point
            if ds <= step.min_step:
                reason = "reconnected with a semitrivial state"
                break
            ds *= 0.5
            continue
        if not ok:
            if ds > step.min_step:
                ds *= 0.5
                continue
            if prev is None:
                reason = "step underflow"
                break
            try:
                tvec = np.concatenate([z - prev[0], [mu - prev[1]]])
                tvec /= np.linalg.norm(tvec)
                zn, mu_new = _arclength_step(system, z, mu, tvec[:-1], tvec[-1], step.initial)
            except (SolverFailure, RuntimeError):
                reason = "step underflow"
                break
            if not _positive(system, zn):
                reason = "reconnected with a semitrivial state"
                break
            sgn = 1.0 if mu_new > mu else -1.0
            it = 5
        arc = points[-1].arclength + math.hypot(mu_new - mu, scale * np.linalg.norm(zn - z))
        prev = (z, mu)
        z, mu = zn, mu_new
        points.append(BranchPoint(mu, _state(system, mesh, z, mu), arc,
                                  _stability(system, z, mu) if stability else None))
        if it <= 4:
            ds = min(1.5 * ds, step.max_step)
    return Branch(points, mu0, mu1, reason)


def _state(system, mesh, z, mu):
    res = float(np.max(np.abs(system.residual(z, mu))))
    return StateTriple.from_stacked(mesh, z, residual=res)


__all__ = ["StepSpec", "BranchPoint", "Branch", "trace_branch"]
