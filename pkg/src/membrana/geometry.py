"""1D domain layout and interface-aware uniform meshes.

The habitat is ``Omega = (xL, xR)``; the inner patch ``Omega1 = (a, b)`` sits
strictly inside it, so ``Omega2 = (xL, a) U (b, xR)`` has two segments, the
membrane is ``Sigma = {a, b}`` and the outer boundary is ``Gamma = {xL, xR}``.

Two node layouts are used:

* the *split* layout carries ``u1`` and ``u2``.  Nodes are stored in spatial
  order (left Omega2 segment, Omega1, right Omega2 segment) and every interface
  coordinate appears twice, once per side.
* the *omega* layout carries ``v``.  It is the same set of coordinates with the
  duplicates merged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError

OMEGA1 = "Omega1"
OMEGA2 = "Omega2"
OMEGA = "Omega"
REGIONS = (OMEGA1, OMEGA2, OMEGA)

# endpoint names of each region
ENDPOINTS = {
    OMEGA1: ("a", "b"),
    OMEGA2: ("xL", "a", "b", "xR"),
    OMEGA: ("xL", "xR"),
}


@dataclass(frozen=True)
class Geometry1D:
    outer_interval: tuple[float, float]
    inner_interval: tuple[float, float]
    gamma1: float
    gamma2: float

    def __post_init__(self):
        xl, xr = (float(t) for t in self.outer_interval)
        a, b = (float(t) for t in self.inner_interval)
        object.__setattr__(self, "outer_interval", (xl, xr))
        object.__setattr__(self, "inner_interval", (a, b))
        object.__setattr__(self, "gamma1", float(self.gamma1))
        object.__setattr__(self, "gamma2", float(self.gamma2))
        if not all(map(math.isfinite, (xl, xr, a, b, self.gamma1, self.gamma2))):
            raise GeometryError("geometry entries must be finite")
        if not (xl < a < b < xr):
            raise GeometryError(f"need xL < a < b < xR, got {xl}, {a}, {b}, {xr}")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise GeometryError("permeabilities gamma1, gamma2 must be positive")

    @property
    def xL(self):
        return self.outer_interval[0]

    @property
    def xR(self):
        return self.outer_interval[1]

    @property
    def a(self):
        return self.inner_interval[0]

    @property
    def b(self):
        return self.inner_interval[1]

    def point(self, name: str) -> float:
        return {"xL": self.xL, "a": self.a, "b": self.b, "xR": self.xR}[name]


def measures(geom: Geometry1D) -> tuple[float, float]:
    """Return ``(|Omega1|, |Omega2|)``."""
    return geom.b - geom.a, (geom.a - geom.xL) + (geom.xR - geom.b)


def canonical_geometry() -> Geometry1D:
    """The reference layout G0: Omega=(0,1), Omega1=(1/3,2/3), gamma=(1,2)."""
    return Geometry1D((0.0, 1.0), (1.0 / 3.0, 2.0 / 3.0), 1.0, 2.0)


@dataclass(frozen=True)
class Segment:
    x0: float
    x1: float
    n: int  # number of intervals
    region: str
    start: int  # first index in the split layout
    left: str  # endpoint names
    right: str

    @property
    def h(self):
        return (self.x1 - self.x0) / self.n

    @property
    def stop(self):
        return self.start + self.n + 1

    def nodes(self):
        x = self.x0 + self.h * np.arange(self.n + 1)
        x[-1] = self.x1  # interface coordinates exact to the bit
        return x


def _intervals(length: float, n_per_unit: int) -> int:
    return max(2, math.ceil(length * n_per_unit - 1e-9))


@dataclass(frozen=True, eq=False)
class Mesh:
    geom: Geometry1D
    n_per_unit: int
    segments: tuple[Segment, Segment, Segment] = field(repr=False)

    # -- split layout -------------------------------------------------
    @cached_property
    def nodes(self) -> np.ndarray:
        return np.concatenate([s.nodes() for s in self.segments])

    @cached_property
    def region_tag(self) -> np.ndarray:
        return np.concatenate([np.full(s.n + 1, s.region, dtype=object) for s in self.segments])

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        out = []
        for s in self.segments:
            w = np.full(s.n + 1, s.h)
            w[0] = w[-1] = 0.5 * s.h
            out.append(w)
        return np.concatenate(out)

    @cached_property
    def interface_nodes(self) -> tuple[int, int, int, int]:
        """Split indices of (u2 at a, u1 at a, u1 at b, u2 at b)."""
        left, mid, right = self.segments
        return left.stop - 1, mid.start, mid.stop - 1, right.start

    @cached_property
    def idx1(self) -> np.ndarray:
        s = self.segments[1]
        return np.arange(s.start, s.stop)

    @cached_property
    def idx2(self) -> np.ndarray:
        left, _, right = self.segments
        return np.concatenate([np.arange(left.start, left.stop), np.arange(right.start, right.stop)])

    @property
    def n_split(self) -> int:
        return self.segments[-1].stop

    @property
    def h(self) -> tuple[float, float, float]:
        return tuple(s.h for s in self.segments)

    def x1(self):
        return self.nodes[self.idx1]

    def x2(self):
        return self.nodes[self.idx2]

    def join(self, u1, u2) -> np.ndarray:
        out = np.empty(self.n_split)
        out[self.idx1] = u1
        out[self.idx2] = u2
        return out

    def split(self, u):
        return u[self.idx1], u[self.idx2]

    def region_size(self, region: str) -> int:
        if region == OMEGA1:
            return self.idx1.size
        if region == OMEGA2:
            return self.idx2.size
        if region == OMEGA:
            return self.n_omega
        raise ValueError(f"unknown region {region!r}")

    def region_nodes(self, region: str) -> np.ndarray:
        if region == OMEGA1:
            return self.x1()
        if region == OMEGA2:
            return self.x2()
        return self.x

    def region_weights(self, region: str) -> np.ndarray:
        if region == OMEGA1:
            return self.quadrature_weights[self.idx1]
        if region == OMEGA2:
            return self.quadrature_weights[self.idx2]
        return self.omega_weights

    # -- omega layout --------------------------------------------------
    @cached_property
    def to_omega(self) -> np.ndarray:
        """Map split index -> omega index (both interface copies share one)."""
        left, mid, right = self.segments
        return np.concatenate([
            np.arange(left.n + 1),
            left.n + np.arange(mid.n + 1),
            left.n + mid.n + np.arange(right.n + 1),
        ])

    @property
    def n_omega(self) -> int:
        return sum(s.n for s in self.segments) + 1

    @cached_property
    def x(self) -> np.ndarray:
        out = np.empty(self.n_omega)
        out[self.to_omega] = self.nodes
        return out

    @cached_property
    def omega_weights(self) -> np.ndarray:
        return np.bincount(self.to_omega, weights=self.quadrature_weights, minlength=self.n_omega)

    @cached_property
    def omega_region_share(self) -> tuple[np.ndarray, np.ndarray]:
        """Fraction of each omega control volume lying in Omega1 and in Omega2."""
        w = self.quadrature_weights
        is1 = np.zeros(self.n_split)
        is1[self.idx1] = 1.0
        s1 = np.bincount(self.to_omega, weights=w * is1, minlength=self.n_omega)
        s2 = np.bincount(self.to_omega, weights=w * (1.0 - is1), minlength=self.n_omega)
        tot = self.omega_weights
        return s1 / tot, s2 / tot

    def prolong(self, split_field) -> np.ndarray:
        """Control-volume average of a split field onto the omega nodes.

        Away from the membrane this is plain injection; at ``a`` and ``b`` the two
        one-sided values are weighted by the half-cells they occupy.
        """
        w = self.quadrature_weights
        return np.bincount(self.to_omega, weights=w * split_field, minlength=self.n_omega) / self.omega_weights

    @cached_property
    def prolong_matrix(self) -> sp.csr_matrix:
        w = self.quadrature_weights / self.omega_weights[self.to_omega]
        return sp.csr_matrix((w, (self.to_omega, np.arange(self.n_split))), shape=(self.n_omega, self.n_split))

    @cached_property
    def restrict_matrix(self) -> sp.csr_matrix:
        ones = np.ones(self.n_split)
        return sp.csr_matrix((ones, (np.arange(self.n_split), self.to_omega)), shape=(self.n_split, self.n_omega))

    def restrict(self, omega_field) -> np.ndarray:
        """Sample an omega field at the split nodes."""
        return np.asarray(omega_field)[self.to_omega]

    def integrate(self, values, region: str) -> float:
        return float(np.dot(self.region_weights(region), values))


def build_mesh(geom: Geometry1D, n_per_unit: int) -> Mesh:
    if not isinstance(geom, Geometry1D):
        raise GeometryError("geom must be a Geometry1D")
    if int(n_per_unit) != n_per_unit or n_per_unit < 8:
        raise GeometryError(f"n_per_unit must be an integer >= 8, got {n_per_unit}")
    n_per_unit = int(n_per_unit)
    spans = [
        (geom.xL, geom.a, OMEGA2, "xL", "a"),
        (geom.a, geom.b, OMEGA1, "a", "b"),
        (geom.b, geom.xR, OMEGA2, "b", "xR"),
    ]
    segs = []
    start = 0
    for x0, x1, region, lname, rname in spans:
        n = _intervals(x1 - x0, n_per_unit)
        segs.append(Segment(x0, x1, n, region, start, lname, rname))
        start += n + 1
    return Mesh(geom, n_per_unit, tuple(segs))
