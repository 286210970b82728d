"""Second-order finite-difference operators ``-d u'' + c u``.

Rows are written in vertex-centred flux form: a node with control volume ``V``
(half a cell at segment ends) gets ``(flux_out - flux_in)/V + c u``.  On a
uniform grid this is the classical three-point stencil, and at an end node it
coincides with ghost-point elimination of a Neumann/Robin condition, so the
boundary rows stay second order.

Membrane rows (Kedem-Katchalsky) at an interface point ``p`` with outward
normal ``n_i`` from ``Omega_i``::

    d_{n1} u1 = gamma1 (u2 - u1),    d_{n2} u2 = gamma2 (u1 - u2)

enter the u1 row as ``+ d*gamma1/V1 * (u1 - u2)`` and the u2 row as
``+ d*gamma2/V2 * (u2 - u1)``.  Both rows keep a positive diagonal, non-positive
off-diagonals and zero row sum, so the operator is a (singular) M-matrix for
``c = 0``.  With ``gamma1 != gamma2`` the matrix is not symmetric, but it is
symmetrised by the diagonal weights ``gamma2*V`` on Omega1 and ``gamma1*V`` on
Omega2 (returned as ``SparseOperator.weights``).

Unknowns of the interface operator are in the split layout of
:class:`membrana.geometry.Mesh`, which is spatial order, so every operator here
is tridiagonal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .geometry import ENDPOINTS, OMEGA, OMEGA1, OMEGA2, Mesh


@dataclass(frozen=True)
class Neumann:
    pass


@dataclass(frozen=True)
class Robin:
    """``d_n u + g u = 0`` with ``n`` the outward normal."""

    g: float


@dataclass(frozen=True)
class Dirichlet:
    value: float = 0.0


@dataclass(frozen=True)
class Membrane:
    pass


BoundarySpec = dict  # endpoint name -> Neumann | Robin | Dirichlet | Membrane


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    region: str
    weights: np.ndarray  # diagonal symmetriser (valid on the non-Dirichlet rows)
    dirichlet: np.ndarray  # row indices that are identity rows
    dirichlet_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def symmetric(self) -> bool:
        m = self.matrix
        return abs(m - m.T).max() == 0.0

    def apply(self, x):
        return apply(self, x)

    def to_coo_text(self) -> str:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}" for k in order]
        return "\n".join(lines) + "\n"


def apply(op: SparseOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (op.dim,):
        raise AssemblyError(f"dimension mismatch: operator {op.dim}, vector {x.shape}")
    return op.matrix @ x


def coefficient(c, size: int, name: str = "c") -> np.ndarray:
    """Broadcast a scalar or validate an array coefficient field."""
    arr = np.asarray(c, dtype=float)
    if arr.ndim == 0:
        arr = np.full(size, float(arr))
    if arr.shape != (size,):
        raise AssemblyError(f"{name}: expected {size} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise AssemblyError(f"{name}: non-finite entries")
    return arr


class _Triplets:
    def __init__(self, n):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, i, j, v):
        self.rows.append(np.atleast_1d(i))
        self.cols.append(np.atleast_1d(j))
        self.vals.append(np.atleast_1d(np.asarray(v, dtype=float)))

    def csr(self):
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))


def _chain(t: _Triplets, x, offset, d, cvol):
    """Diffusion rows of one chain of nodes; fills ``cvol`` with control volumes."""
    n = x.size
    h = np.diff(x)
    vol = np.zeros(n)
    vol[:-1] += 0.5 * h
    vol[1:] += 0.5 * h
    cvol[offset:offset + n] = vol
    k = d / h
    i0 = offset + np.arange(n - 1)
    i1 = i0 + 1
    t.add(i0, i0, k / vol[:-1])
    t.add(i0, i1, -k / vol[:-1])
    t.add(i1, i1, k / vol[1:])
    t.add(i1, i0, -k / vol[1:])


def _boundary(t, row, bc, d, vol, dirichlet):
    if isinstance(bc, Neumann):
        return
    if isinstance(bc, Robin):
        t.add(row, row, d * float(bc.g) / vol)
        return
    if isinstance(bc, Dirichlet):
        dirichlet.append((row, float(bc.value)))
        return
    if isinstance(bc, Membrane):
        raise AssemblyError("membrane condition is only valid in the interface operator")
    raise AssemblyError(f"unknown boundary condition {bc!r}")


def _check_bc(region, bc):
    names = ENDPOINTS[region]
    missing = [p for p in names if p not in bc]
    extra = [p for p in bc if p not in names]
    if missing or extra:
        raise AssemblyError(f"{region}: boundary spec must cover exactly {names}; missing {missing}, extra {extra}")


def _finish(t, region, c, dirichlet, vol):
    m = t.csr()
    m = m + sp.diags(c)
    m = m.tolil()
    rows = np.array([r for r, _ in dirichlet], dtype=int)
    vals = np.array([v for _, v in dirichlet], dtype=float)
    for r in rows:
        m.rows[r] = [r]
        m.data[r] = [1.0]
    m = m.tocsr()
    m.eliminate_zeros()
    return m, rows, vals


def assemble_scalar(mesh: Mesh, region: str, d: float, c, bc: BoundarySpec) -> SparseOperator:
    """``-d u'' + c u`` on one region with the given endpoint conditions.

    Dirichlet rows are identity rows; callers move the boundary value to the
    right-hand side (``op.dirichlet_values``).
    """
    if region not in ENDPOINTS:
        raise AssemblyError(f"unknown region {region!r}")
    if d <= 0:
        raise AssemblyError("diffusion d must be positive")
    _check_bc(region, bc)
    n = mesh.region_size(region)
    c = coefficient(c, n)
    t = _Triplets(n)
    vol = np.zeros(n)
    dirichlet = []
    if region == OMEGA:
        _chain(t, mesh.x, 0, d, vol)
        _boundary(t, 0, bc["xL"], d, vol[0], dirichlet)
        _boundary(t, n - 1, bc["xR"], d, vol[-1], dirichlet)
    elif region == OMEGA1:
        _chain(t, mesh.x1(), 0, d, vol)
        _boundary(t, 0, bc["a"], d, vol[0], dirichlet)
        _boundary(t, n - 1, bc["b"], d, vol[-1], dirichlet)
    else:
        left, _, right = mesh.segments
        nl = left.n + 1
        _chain(t, left.nodes(), 0, d, vol)
        _chain(t, right.nodes(), nl, d, vol)
        _boundary(t, 0, bc["xL"], d, vol[0], dirichlet)
        _boundary(t, nl - 1, bc["a"], d, vol[nl - 1], dirichlet)
        _boundary(t, nl, bc["b"], d, vol[nl], dirichlet)
        _boundary(t, n - 1, bc["xR"], d, vol[-1], dirichlet)
    m, rows, vals = _finish(t, region, c, dirichlet, vol)
    return SparseOperator(m, region, vol, rows, vals)


def assemble_interface(mesh: Mesh, d: float, c1, c2) -> SparseOperator:
    """Membrane-coupled operator on (u1, u2) in the split layout.

    Homogeneous Neumann on Gamma, Kedem-Katchalsky rows on Sigma.
    """
    if d <= 0:
        raise AssemblyError("diffusion d must be positive")
    g = mesh.geom
    c1 = coefficient(c1, mesh.idx1.size, "c1")
    c2 = coefficient(c2, mesh.idx2.size, "c2")
    n = mesh.n_split
    t = _Triplets(n)
    vol = np.zeros(n)
    for s in mesh.segments:
        _chain(t, s.nodes(), s.start, d, vol)
    i2a, i1a, i1b, i2b = mesh.interface_nodes
    for p1, p2 in ((i1a, i2a), (i1b, i2b)):
        k1 = d * g.gamma1 / vol[p1]
        k2 = d * g.gamma2 / vol[p2]
        t.add(p1, p1, k1)
        t.add(p1, p2, -k1)
        t.add(p2, p2, k2)
        t.add(p2, p1, -k2)
    c = mesh.join(c1, c2)
    m = (t.csr() + sp.diags(c)).tocsr()
    m.eliminate_zeros()
    w = vol.copy()
    w[mesh.idx1] *= g.gamma2
    w[mesh.idx2] *= g.gamma1
    return SparseOperator(m, "interface", w, np.zeros(0, dtype=int), np.zeros(0))


def neumann_bc(region: str) -> BoundarySpec:
    return {p: Neumann() for p in ENDPOINTS[region]}


def robin_sigma_bc(region: str, gamma: float) -> BoundarySpec:
    """Robin ``gamma`` on the membrane points, Neumann on Gamma."""
    return {p: (Robin(gamma) if p in ("a", "b") else Neumann()) for p in ENDPOINTS[region]}


def dirichlet_sigma_bc(region: str, value: float = 0.0) -> BoundarySpec:
    return {p: (Dirichlet(value) if p in ("a", "b") else Neumann()) for p in ENDPOINTS[region]}


def tridiagonal_bands(m: sp.spmatrix) -> np.ndarray:
    """Pack a tridiagonal sparse matrix into LAPACK banded storage (l=u=1)."""
    n = m.shape[0]
    coo = m.tocoo()
    off = coo.col - coo.row
    if np.any(np.abs(off) > 1):
        raise AssemblyError("matrix is not tridiagonal")
    ab = np.zeros((3, n))
    ab[1 - off, coo.col] += coo.data
    return ab


__all__ = [
    "Neumann", "Robin", "Dirichlet", "Membrane", "BoundarySpec", "SparseOperator",
    "apply", "assemble_scalar", "assemble_interface", "neumann_bc", "robin_sigma_bc",
    "dirichlet_sigma_bc", "tridiagonal_bands", "coefficient", "OMEGA", "OMEGA1", "OMEGA2",
]
