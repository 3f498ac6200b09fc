"""Five-point discretisation of ``-Laplace + V`` on the truncated cell.

Unknowns are the interior nodes plus the window seam at ``x1 = 0``.  The
column ``x1 = d`` is eliminated through ``u(d, x2) = exp(i tau d) u(0, x2)`` on
window rows and ``u = 0`` elsewhere, so the seam couples to the column
``x1 = d - h1`` with conjugate phases and the matrix stays Hermitian.

Rows ``x2 = +-X`` are eliminated as well: either ``u = 0`` (Dirichlet
truncation) or, mode by mode across the outlet, the one-sided Robin relation

    (u_p(X) - u_p(X - h2)) / h2 = -s_p(k) u_p(X)

which folds into a symmetric block on the row ``x2 = X - h2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from .geometry import CellGeometry, Grid, GeometryError, NodeKind, NodeSet, classify_nodes

__all__ = [
    "PI2",
    "BCKind",
    "BoundaryCondition",
    "PotentialSpec",
    "zero_potential",
    "gaussian_bump",
    "table_potential",
    "ModeDecayRates",
    "DiscreteOperator",
    "discrete_threshold",
    "outlet_modes",
    "assemble_fiber",
    "assemble_decoupled",
    "apply_mode_matched_bc",
]

PI2 = np.pi ** 2


class BCKind(enum.Enum):
    DIRICHLET_TRUNCATION = "dirichlet"
    MODE_MATCHED_ROBIN = "robin"


@dataclass(frozen=True)
class BoundaryCondition:
    """Artificial condition at ``x2 = +-X``."""

    kind: BCKind = BCKind.DIRICHLET_TRUNCATION
    k: complex = 0.0
    mode_cut: int | None = None

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls()

    @classmethod
    def robin(cls, k: complex = 0.0, mode_cut: int | None = None) -> "BoundaryCondition":
        return cls(BCKind.MODE_MATCHED_ROBIN, k, mode_cut)


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """Real potential ``V(x1, x2)``, d-periodic in x1, zero for ``|x2| > support``."""

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support: float
    name: str = "custom"

    def __call__(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.asarray(self.func(x1, x2), dtype=float) * np.ones_like(x1)

    def sample(self, grid: Grid) -> np.ndarray:
        """Values on all grid nodes; checks the support bound."""
        x1, x2 = grid.mesh()
        values = self(x1, x2)
        outside = np.abs(x2) > self.support + 1e-12
        if np.any(values[outside] != 0.0):
            raise ValueError(f"potential '{self.name}' is non-zero at |x2| > {self.support}")
        return values


def zero_potential(support: float = 0.0) -> PotentialSpec:
    return PotentialSpec(lambda x1, x2: np.zeros_like(x1), support, "zero")


def gaussian_bump(amplitude: float, center: tuple[float, float] = (0.5, 0.0),
                  widths: tuple[float, float] = (0.1, 0.1),
                  support: float = 1.0) -> PotentialSpec:
    """Separable Gaussian ``A exp(-(x1-c1)^2/w1^2 - (x2-c2)^2/w2^2)``, cut at ``|x2| > support``."""
    c1, c2 = center
    w1, w2 = widths

    def func(x1, x2):
        v = amplitude * np.exp(-((x1 - c1) / w1) ** 2 - ((x2 - c2) / w2) ** 2)
        return np.where(np.abs(x2) <= support, v, 0.0)

    return PotentialSpec(func, support, f"gaussian({amplitude:g})")


def table_potential(path: str | Path, support: float) -> PotentialSpec:
    """Potential from a plain-text table of ``x1 x2 V`` lines on a tensor grid.

    Values are interpolated linearly; outside the table the potential is zero.
    """
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns (x1, x2, V), got {data.shape[1]}")
    xs1 = np.unique(data[:, 0])
    xs2 = np.unique(data[:, 1])
    if len(xs1) * len(xs2) != len(data):
        raise ValueError(f"{path}: samples do not form a tensor grid")
    table = np.zeros((len(xs1), len(xs2)))
    table[np.searchsorted(xs1, data[:, 0]), np.searchsorted(xs2, data[:, 1])] = data[:, 2]
    interp = RegularGridInterpolator((xs1, xs2), table, bounds_error=False, fill_value=0.0)

    def func(x1, x2):
        v = interp(np.stack([x1.ravel(), x2.ravel()], axis=-1)).reshape(x1.shape)
        return np.where(np.abs(x2) <= support, v, 0.0)

    return PotentialSpec(func, support, f"table:{Path(path).name}")


# --------------------------------------------------------------------------
# outlet modes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeDecayRates:
    """Decay rates ``s_1(k) = k``, ``s_j(k) = sqrt(pi^2 (j^2 - 1) + k^2)`` for ``j <= J``."""

    mode_cut: int

    @staticmethod
    def s(j: int, k: complex = 0.0) -> complex:
        if j == 1:
            return k
        return np.sqrt(PI2 * (j * j - 1) + k * k + 0j) if np.iscomplexobj(k) else \
            float(np.sqrt(PI2 * (j * j - 1) + k * k))

    def __call__(self, k: complex = 0.0) -> np.ndarray:
        j = np.arange(1, self.mode_cut + 1)
        dtype = complex if np.iscomplexobj(k) else float
        rates = np.sqrt(PI2 * (j ** 2 - 1) + np.asarray(k, dtype=dtype) ** 2)
        rates[0] = k
        return rates


def discrete_threshold(grid: Grid) -> float:
    """Lowest transverse eigenvalue of the discrete unit-width outlet.

    The discrete counterpart of ``pi^2``; it is the bottom of the essential
    spectrum of the discretised operator.
    """
    return float(4.0 / grid.h1 ** 2 * np.sin(np.pi * grid.h1 / 2.0) ** 2)


def outlet_modes(grid: Grid) -> np.ndarray:
    """Orthonormal discrete sine modes across a unit outlet, shape ``(n-1, n-1)``.

    Column ``p-1`` samples ``sqrt(2 h1) sin(p pi (x1 - a))`` at the interior
    outlet nodes.
    """
    n = int(round(1.0 / grid.h1))
    m = np.arange(1, n)
    return np.sqrt(2.0 / n) * np.sin(np.pi * np.outer(m, m) / n)


# --------------------------------------------------------------------------
# assembled operator
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse matrix of a fibre operator together with its grid metadata."""

    matrix: sp.csr_matrix
    tau: float
    eps: float
    bc: BoundaryCondition
    geom: CellGeometry
    grid: Grid
    nodes: NodeSet
    potential_min: float
    base: sp.csr_matrix = field(repr=False)
    boundary_factors: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def threshold(self) -> float:
        return discrete_threshold(self.grid)

    @property
    def hermitian(self) -> bool:
        """Exact (entrywise) Hermiticity."""
        diff = self.matrix - self.matrix.conj().T
        return diff.count_nonzero() == 0 if sp.issparse(diff) else not np.any(diff)

    @property
    def bloch_phase(self) -> complex:
        return np.exp(1j * self.tau * self.geom.d)

    def _outlet_rows(self, side: int) -> tuple[np.ndarray, int, int]:
        lo, _ = self.geom.outlet(side)
        n = int(round(1.0 / self.grid.h1))
        i0 = int(round(lo / self.grid.h1))
        cols = i0 + np.arange(1, n)
        edge = self.grid.N2 - 1 if side > 0 else 0
        inner = edge - 1 if side > 0 else 1
        return cols, edge, inner

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Full-grid array of a vector on the unknowns (boundary rows reconstructed)."""
        vec = np.asarray(vec)
        dtype = np.result_type(vec.dtype, self.matrix.dtype, float)
        if self.nodes.seam_rows.size:
            dtype = np.result_type(dtype, complex) if self.tau != 0 else dtype
        out = np.zeros(self.grid.shape, dtype=dtype)
        mask = self.nodes.index >= 0
        out[mask] = vec[self.nodes.index[mask]]
        seam = self.nodes.seam_rows
        if seam.size:
            out[-1, seam] = self.bloch_phase * out[0, seam] if self.tau != 0 else out[0, seam]
        for side, factors in self.boundary_factors.items():
            cols, edge, inner = self._outlet_rows(side)
            S = outlet_modes(self.grid)
            out[cols, edge] = S @ (factors * (S.T @ out[cols, inner]))
        return out

    def restrict(self, field2d: np.ndarray) -> np.ndarray:
        """Values of a full-grid array on the unknowns."""
        mask = self.nodes.index >= 0
        vec = np.zeros(self.dim, dtype=np.asarray(field2d).dtype)
        vec[self.nodes.index[mask]] = np.asarray(field2d)[mask]
        return vec


def _assemble_base(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                   nodes: NodeSet, tau: float) -> tuple[sp.csr_matrix, float]:
    index = nodes.index
    kind = nodes.kind
    V = potential.sample(grid)
    n = nodes.n_unknowns
    c1 = 1.0 / grid.h1 ** 2
    c2 = 1.0 / grid.h2 ** 2
    N1 = grid.N1

    ii, jj = np.nonzero(index >= 0)
    rows_own = index[ii, jj]
    diag = 2.0 * c1 + 2.0 * c2 + V[ii, jj]

    rows, cols, vals = [rows_own], [rows_own], [diag.astype(complex)]

    def couple(src_i, src_j, dst_i, dst_j, value):
        valid = (dst_i >= 0) & (dst_i <= N1) & (dst_j >= 0) & (dst_j < grid.N2)
        src_i, src_j, dst_i, dst_j = src_i[valid], src_j[valid], dst_i[valid], dst_j[valid]
        value = np.broadcast_to(value, valid.shape)[valid]
        target = index[dst_i, dst_j]
        keep = target >= 0
        rows.append(index[src_i, src_j][keep])
        cols.append(target[keep])
        vals.append(np.asarray(value[keep], dtype=complex))

    phase = np.exp(1j * tau * geom.d) if tau != 0 else 1.0 + 0j
    # vertical neighbours
    couple(ii, jj, ii, jj + 1, -c2 + 0j)
    couple(ii, jj, ii, jj - 1, -c2 + 0j)
    # horizontal neighbours inside the cell
    inner = ii < N1 - 1
    couple(ii[inner], jj[inner], ii[inner] + 1, jj[inner], -c1 + 0j)
    left = ii > 0
    couple(ii[left], jj[left], ii[left] - 1, jj[left], -c1 + 0j)
    # Bloch coupling through the window: x1 = d - h1  <->  seam at x1 = 0
    last = ii == N1 - 1
    img = last & (kind[np.minimum(ii + 1, N1), jj] == NodeKind.BLOCH_IMAGE)
    couple(ii[img], jj[img], np.zeros(img.sum(), dtype=int), jj[img], -c1 * phase)
    seam = ii == 0
    couple(ii[seam], jj[seam], np.full(seam.sum(), N1 - 1), jj[seam], -c1 * np.conj(phase))

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    H = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    H.sum_duplicates()
    if not np.any(H.data.imag):
        H = sp.csr_matrix(H.real)
    vmin = float(V[index >= 0].min()) if n else 0.0
    return H, vmin


def _robin_block(op: DiscreteOperator, side: int, k: complex, mode_cut: int | None):
    S = outlet_modes(op.grid)
    J = S.shape[1] if mode_cut is None else min(int(mode_cut), S.shape[1])
    rates = ModeDecayRates(S.shape[1])(k)
    factors = 1.0 / (1.0 + op.grid.h2 * rates)
    factors[J:] = 0.0
    block = -(S * factors) @ S.T / op.grid.h2 ** 2
    block = 0.5 * (block + block.T)
    cols, _, inner = op._outlet_rows(side)
    idx = op.nodes.index[cols, inner]
    if np.any(idx < 0):
        raise GeometryError("outlet row x2 = X - h2 is not fully interior")
    r, c = np.meshgrid(idx, idx, indexing="ij")
    return sp.coo_matrix((block.ravel(), (r.ravel(), c.ravel())), shape=op.matrix.shape), factors


def apply_mode_matched_bc(op: DiscreteOperator, k: complex,
                          mode_cut: int | None = None) -> DiscreteOperator:
    """Replace the truncation condition of ``op`` by the mode-matched Robin one.

    For outlet mode ``p`` the boundary value is ``u_p(X) = u_p(X - h2) /
    (1 + h2 s_p(k))``; modes above ``mode_cut`` are held at zero.  With
    ``k = 0`` mode 1 obeys ``u(X) = u(X - h2)`` (discrete Neumann).
    """
    if np.real(k) < 0:
        raise ValueError(f"decay parameter k={k} has negative real part (growing mode)")
    grid, geom = op.grid, op.geom
    if grid.X - grid.h2 < geom.x2_inf - 1e-12:
        raise GeometryError(
            f"mode matching needs straight outlets at x2 = +-(X - h2); "
            f"X={grid.X:g}, h2={grid.h2:g}, x2_inf={geom.x2_inf:g}")
    H = op.base.tocoo()
    factors = {}
    for side in (1, -1):
        block, f = _robin_block(op, side, k, mode_cut)
        H = H + block
        factors[side] = f
    H = sp.csr_matrix(H)
    H.sum_duplicates()
    if np.iscomplexobj(H.data) and not np.any(H.data.imag):
        H = sp.csr_matrix(H.real)
    return replace(op, matrix=H, bc=BoundaryCondition.robin(k, mode_cut),
                   boundary_factors=factors)


def assemble_fiber(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                   nodes: NodeSet | None = None, eps: float = 0.0, tau: float = 0.0,
                   bc: BoundaryCondition | None = None) -> DiscreteOperator:
    """Assemble the fibre operator for quasimomentum ``tau`` and window half-width ``eps``."""
    bc = bc or BoundaryCondition.dirichlet()
    if nodes is None:
        nodes = classify_nodes(geom, grid, eps)
    elif nodes.eps != eps:
        raise ValueError(f"node set was classified for eps={nodes.eps}, not {eps}")
    if nodes.seam_rows.size == 0:
        tau_eff = 0.0
    else:
        tau_eff = float(tau)
    H, vmin = _assemble_base(geom, potential, grid, nodes, tau_eff)
    op = DiscreteOperator(H, float(tau), float(eps), BoundaryCondition.dirichlet(),
                          geom, grid, nodes, vmin, base=H)
    if bc.kind is BCKind.MODE_MATCHED_ROBIN:
        op = apply_mode_matched_bc(op, bc.k, bc.mode_cut)
    return op


def assemble_decoupled(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                       bc: BoundaryCondition | None = None) -> DiscreteOperator:
    """Operator of the decoupled cell: both side walls fully Dirichlet."""
    return assemble_fiber(geom, potential, grid, classify_nodes(geom, grid, 0.0),
                          eps=0.0, tau=0.0, bc=bc)
