"""Point classification, region maps and empirical non-existence brackets."""
from __future__ import annotations

import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import Model
from .errors import NotFound, OutOfDomain, SolverFailure
from .nonlinear import EPS_BAND, ModelParams, solve_coexistence


class Classification(str, enum.Enum):
    COEXISTENCE = "CoexistencePredicted"
    NON_EXISTENCE_NECESSARY = "NonExistenceNecessary"
    NON_EXISTENCE_LARGE = "NonExistenceLarge"
    INDETERMINATE = "Indeterminate"


class Confirmation(str, enum.Enum):
    CONFIRMED = "Confirmed"
    REFUTED = "Refuted"
    UNCHECKED = "Unchecked"


@dataclass(frozen=True)
class GridSpec:
    """Cell-centre grid over (x, mu); x is lambda1, or lambda in equal mode."""

    x_range: tuple[float, float]
    mu_range: tuple[float, float]
    nx: int
    nmu: int
    equal: bool = False

    def __post_init__(self):
        if self.nx < 1 or self.nmu < 1:
            raise ValueError("grid resolution must be positive")
        if not (self.x_range[1] > self.x_range[0] and self.mu_range[1] > self.mu_range[0]):
            raise ValueError("grid ranges must be non-empty")

    @property
    def xs(self) -> np.ndarray:
        lo, hi = self.x_range
        return lo + (hi - lo) * (np.arange(self.nx) + 0.5) / self.nx

    @property
    def mus(self) -> np.ndarray:
        lo, hi = self.mu_range
        return lo + (hi - lo) * (np.arange(self.nmu) + 0.5) / self.nmu


@dataclass
class RegionMap:
    grid: GridSpec
    lambda2: float
    classes: list  # [i_mu][i_x] -> Classification
    confirmed: list  # [i_mu][i_x] -> Confirmation
    curves: dict = field(default_factory=dict)  # name -> list of (x, mu)

    def cells(self):
        """Rows ``(x, mu, class, confirmation)`` in mu-major grid order."""
        for j, mu in enumerate(self.grid.mus):
            for i, x in enumerate(self.grid.xs):
                yield float(x), float(mu), self.classes[j][i], self.confirmed[j][i]


def classify_point(model: Model, lambda1_: float, mu: float, lambda2_: float | None = None,
                   large: bool = True) -> Classification:
    """Classify ``(lambda1, lambda2, mu)`` from the threshold curves alone."""
    lam2 = model.params.lambda2 if lambda2_ is None else float(lambda2_)
    if mu <= 0:
        return Classification.NON_EXISTENCE_NECESSARY
    lam0 = model.lam(-lambda1_, -lam2)
    if lam0 >= EPS_BAND:
        return Classification.NON_EXISTENCE_NECESSARY
    if lam0 > -EPS_BAND:
        return Classification.INDETERMINATE
    g = model.curve_g(lambda1_, lam2)
    if g.ok:
        prod = (mu - g.value) * model.mu1_map(lambda1_, lam2, mu)
        if prod < -EPS_BAND:
            return Classification.COEXISTENCE
    if large:
        try:
            if mu > model.mu_star_bound(lambda1_, lam2) + EPS_BAND:
                return Classification.NON_EXISTENCE_LARGE
        except (OutOfDomain, NotFound):
            pass
        if lambda1_ == lam2:
            try:
                if lambda1_ > model.lambda_star_bound(mu) + EPS_BAND:
                    return Classification.NON_EXISTENCE_LARGE
            except (OutOfDomain, NotFound):
                pass
    return Classification.INDETERMINATE


def confirm_point(model: Model, lambda1_: float, mu: float, lambda2_: float | None = None,
                  evolve_t_end: float = 200.0, guess=None):
    """Newton (plus parabolic fallback) verdict; returns (Confirmation, state or None).

    ``guess`` (a nearby coexistence state) is tried first; on failure the
    full seed ladder runs, so the verdict does not depend on it.
    """
    lam2 = model.params.lambda2 if lambda2_ is None else float(lambda2_)
    params = model.params.replace(lambda1=float(lambda1_), lambda2=lam2, mu=float(mu))
    if guess is not None:
        try:
            return Confirmation.CONFIRMED, solve_coexistence(params, model.mesh, init=guess)
        except (NotFound, SolverFailure):
            pass
    try:
        state = solve_coexistence(params, model.mesh, evolve_t_end=evolve_t_end)
    except NotFound as exc:
        if exc.evidence in ("parabolic", "necessary"):
            return Confirmation.REFUTED, None
        return Confirmation.UNCHECKED, None
    except SolverFailure:
        return Confirmation.UNCHECKED, None
    return Confirmation.CONFIRMED, state


def _column(args):
    """Classify (and optionally confirm) all cells with the same abscissa."""
    params, n_per_unit, grid, lam2, i, confirm, band = args
    model = Model(params, n_per_unit)
    x = float(grid.xs[i])
    l2 = x if grid.equal else lam2
    classes = [classify_point(model, x, float(mu), l2) for mu in grid.mus]
    marks = [Confirmation.UNCHECKED] * len(classes)
    if confirm:
        todo = [j for j, c in enumerate(classes) if c is Classification.COEXISTENCE]
        for j, c in enumerate(classes):
            if c is Classification.INDETERMINATE and any(
                    0 <= k < len(classes) and classes[k] is Classification.COEXISTENCE
                    for k in range(j - band, j + band + 1)):
                todo.append(j)
        prev = None  # warm start from the previous confirmed cell of this column
        for j in sorted(todo):
            marks[j], state = confirm_point(model, x, float(grid.mus[j]), l2, guess=prev)
            prev = state if state is not None else prev
    return i, classes, marks


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("MEMBRANA_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def region_map(params: ModelParams, grid: GridSpec, n_per_unit: int = 96, confirm: bool = False,
               threads: int | None = None, band: int = 1) -> RegionMap:
    """Classify every cell; with ``confirm``, Newton-check predicted cells and their neighbours.

    Columns are independent jobs with their own caches; results are placed by
    index, so the map does not depend on the worker count.
    """
    threads = resolve_threads(threads)
    jobs = [(params, n_per_unit, grid, params.lambda2, i, confirm, band) for i in range(grid.nx)]
    if threads == 1:
        results = [_column(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_column, jobs))
    classes = [[None] * grid.nx for _ in range(grid.nmu)]
    marks = [[None] * grid.nx for _ in range(grid.nmu)]
    for i, col, mk in results:
        for j in range(grid.nmu):
            classes[j][i] = col[j]
            marks[j][i] = mk[j]
    return RegionMap(grid, params.lambda2, classes, marks)


def region_curves(model: Model, grid: GridSpec, samples: int = 80) -> dict:
    """Overlay curves for a map: g and G (or g and G hat in equal mode)."""
    xs = np.linspace(*grid.x_range, samples)
    mus = np.linspace(max(grid.mu_range[0], 0.0), grid.mu_range[1], samples)
    out = {}
    if grid.equal:
        out["g"] = [(float(x), s.value) for x in xs if (s := model.curve_g_equal(float(x))).ok]
        ghat = []
        for mu in mus:
            try:
                ghat.append((model.curve_sigma0_and_Ghat(float(mu))[1], float(mu)))
            except (OutOfDomain, NotFound):
                continue
        out["Ghat"] = ghat
    else:
        out["g"] = [(float(x), s.value) for x in xs if (s := model.curve_g(float(x))).ok]
        out["G"] = [(s.value, float(mu)) for mu in mus if (s := model.curve_G(float(mu))).ok]
    return out


@dataclass(frozen=True)
class Bracket:
    lower: float  # largest parameter with a confirmed coexistence state
    upper: float  # smallest parameter above it with a refuted one
    constructive: float  # sufficient bound from the comparison argument


def _empirical_bracket(verdict, lo: float, hi: float, n_scan: int, rtol: float):
    xs = np.linspace(lo, hi, n_scan)
    marks = [verdict(float(x)) for x in xs]
    conf = [k for k, m in enumerate(marks) if m is Confirmation.CONFIRMED]
    if not conf:
        raise NotFound("no confirmed coexistence state in the window")
    k = conf[-1]
    above = [j for j in range(k + 1, n_scan) if marks[j] is Confirmation.REFUTED]
    if not above:
        raise NotFound("window exhausted before a refuted point")
    a, b = float(xs[k]), float(xs[above[0]])
    while b - a > rtol * max(1.0, abs(b)):
        m = 0.5 * (a + b)
        v = verdict(m)
        if v is Confirmation.CONFIRMED:
            a = m
        elif v is Confirmation.REFUTED:
            b = m
        else:
            break
    return a, b


def estimate_mu_star(model: Model, lambda1_: float, lambda2_: float | None = None, window=None,
                     n_scan: int = 16, rtol: float = 1e-3) -> Bracket:
    """Bracket the largest mu with coexistence at fixed growth rates."""
    lam2 = model.params.lambda2 if lambda2_ is None else float(lambda2_)
    if model.lam(-lambda1_, -lam2) >= 0:
        raise OutOfDomain("needs Lambda1(-lambda1, -lambda2) < 0")
    bound = model.mu_star_bound(lambda1_, lam2)
    lo, hi = window if window is not None else (0.0, 1.25 * bound + 1.0)
    a, b = _empirical_bracket(lambda mu: confirm_point(model, lambda1_, mu, lam2)[0], lo, hi, n_scan, rtol)
    return Bracket(a, b, bound)


def estimate_lambda_star(model: Model, mu: float, window=None, n_scan: int = 16,
                         rtol: float = 1e-3) -> Bracket:
    """Bracket the largest common growth rate with coexistence at fixed mu."""
    if mu <= 0:
        raise OutOfDomain("mu must be positive")
    bound = model.lambda_star_bound(mu)
    lo, hi = window if window is not None else (0.0, 1.25 * bound + 1.0)
    a, b = _empirical_bracket(lambda lam: confirm_point(model, lam, mu, lam)[0], lo, hi, n_scan, rtol)
    return Bracket(a, b, bound)


__all__ = [
    "Classification", "Confirmation", "GridSpec", "RegionMap", "Bracket", "classify_point",
    "confirm_point", "region_map", "region_curves", "estimate_mu_star", "estimate_lambda_star",
    "resolve_threads",
]
