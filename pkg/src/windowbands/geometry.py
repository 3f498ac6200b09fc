"""Periodicity cell, computational grid and node classification.

The cell lives in the vertical band ``0 < x1 < d``.  For ``|x2| < x2_zero`` it
is bounded by the two walls ``x1 = 0`` and ``x1 = d``; for ``|x2| > x2_inf``
it is a straight unit-width outlet ``a_pm < x1 < a_pm + 1``.  Between the two
heights the cross-section is described by a staircase of horizontal slabs.

Windows are open segments ``x1 = 0, |x2| < eps`` (identified with
``x1 = d, |x2| < eps`` through the Bloch phase).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "Slab",
    "CellGeometry",
    "Grid",
    "NodeKind",
    "NodeSet",
    "build_cell",
    "make_grid",
    "classify_nodes",
    "straight_strip",
]

_ALIGN_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid cell description or grid/geometry mismatch."""


@dataclass(frozen=True)
class Slab:
    """Cross-section ``x1_lo < x1 < x1_hi`` held for ``x2_lo < x2 < x2_hi``."""

    x2_lo: float
    x2_hi: float
    x1_lo: float
    x1_hi: float

    def __str__(self):
        return (f"slab(x2 in ({self.x2_lo:g}, {self.x2_hi:g}), "
                f"x1 in ({self.x1_lo:g}, {self.x1_hi:g}))")


def _boxes_contain(boxes: np.ndarray, x1, x2) -> np.ndarray:
    # boxes: (n, 4) rows of (x1_lo, x1_hi, x2_lo, x2_hi), closed boxes
    x1 = np.asarray(x1, dtype=float)[..., None]
    x2 = np.asarray(x2, dtype=float)[..., None]
    inside = ((boxes[:, 0] <= x1) & (x1 <= boxes[:, 1])
              & (boxes[:, 2] <= x2) & (x2 <= boxes[:, 3]))
    return inside.any(axis=-1)


@dataclass(frozen=True)
class CellGeometry:
    """The periodicity cell.

    Attributes
    ----------
    d : float
        Cell width.
    a_minus, a_plus : float
        Left edges of the bottom and top outlets.
    x2_zero : float
        Height below which both side walls are vertical and flat.
    x2_inf : float
        Height above which the cell is a straight outlet.
    profile : tuple of Slab
        Staircase cross-sections filling ``x2_zero <= |x2| <= x2_inf``.
    """

    d: float
    a_minus: float
    a_plus: float
    x2_zero: float
    x2_inf: float
    profile: tuple[Slab, ...] = ()
    _boxes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        boxes = [(0.0, self.d, -self.x2_zero, self.x2_zero),
                 (self.a_plus, self.a_plus + 1.0, self.x2_inf, np.inf),
                 (self.a_minus, self.a_minus + 1.0, -np.inf, -self.x2_inf)]
        boxes += [(s.x1_lo, s.x1_hi, s.x2_lo, s.x2_hi) for s in self.profile]
        object.__setattr__(self, "_boxes", np.array(boxes, dtype=float))

    def outlet(self, side: int) -> tuple[float, float]:
        """x1-interval of the top (``side=+1``) or bottom (``side=-1``) outlet."""
        a = self.a_plus if side > 0 else self.a_minus
        return a, a + 1.0

    def contains(self, x1, x2) -> np.ndarray:
        """Membership predicate ``x in Pi`` (vectorised, open set)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        # interior of a union of closed boxes: probe a small neighbourhood
        delta = 1e-9 * max(1.0, self.d)
        result = np.ones(np.broadcast(x1, x2).shape, dtype=bool)
        for s1 in (-1, 0, 1):
            for s2 in (-1, 0, 1):
                if s1 == 0 and s2 == 0:
                    continue
                result &= _boxes_contain(self._boxes, x1 + s1 * delta, x2 + s2 * delta)
        return result


def _check_profile(d, x2_zero, x2_inf, a_minus, a_plus, slabs: Sequence[Slab]):
    for s in slabs:
        if not (s.x2_lo < s.x2_hi) or not (s.x1_lo < s.x1_hi):
            raise GeometryError(f"degenerate profile segment: {s}")
        if s.x1_lo < 0.0 or s.x1_hi > d:
            raise GeometryError(f"profile segment leaves 0 < x1 < d: {s}")
        if not (x2_zero - _ALIGN_TOL <= abs(s.x2_lo) <= x2_inf + _ALIGN_TOL
                and x2_zero - _ALIGN_TOL <= abs(s.x2_hi) <= x2_inf + _ALIGN_TOL):
            raise GeometryError(f"profile segment outside the transition band: {s}")

    for side in (1, -1):
        if side > 0:
            band = sorted((s for s in slabs if s.x2_lo >= 0), key=lambda s: s.x2_lo)
        else:
            band = sorted((s for s in slabs if s.x2_hi <= 0), key=lambda s: -s.x2_hi)
        # walk outward from the flat part towards the outlet
        level = x2_zero
        prev = (0.0, d)
        for s in band:
            near, far = (s.x2_lo, s.x2_hi) if side > 0 else (-s.x2_hi, -s.x2_lo)
            if near < level - _ALIGN_TOL:
                raise GeometryError(f"overlapping profile segment: {s}")
            if near > level + _ALIGN_TOL:
                raise GeometryError(f"gap in profile below segment: {s}")
            if min(prev[1], s.x1_hi) <= max(prev[0], s.x1_lo):
                raise GeometryError(f"profile segment disconnected from the cell: {s}")
            level, prev = far, (s.x1_lo, s.x1_hi)
        if abs(level - x2_inf) > _ALIGN_TOL:
            raise GeometryError(
                f"profile on the {'upper' if side > 0 else 'lower'} side stops at "
                f"|x2| = {level:g}, expected x2_inf = {x2_inf:g}")
        a = a_plus if side > 0 else a_minus
        if min(prev[1], a + 1.0) <= max(prev[0], a):
            raise GeometryError(
                f"{'upper' if side > 0 else 'lower'} outlet does not connect to the profile")


def build_cell(d: float, a_minus: float = 0.0, a_plus: float = 0.0,
               x2_zero: float = 1.0, x2_inf: float | None = None,
               profile: Sequence[Slab | Sequence[float]] = ()) -> CellGeometry:
    """Validate geometry parameters and return a :class:`CellGeometry`.

    ``profile`` items may be :class:`Slab` instances or 4-tuples
    ``(x2_lo, x2_hi, x1_lo, x1_hi)``.
    """
    if x2_inf is None:
        x2_inf = x2_zero
    if d <= 0:
        raise GeometryError(f"cell width must be positive, got d={d}")
    for name, a in (("a_minus", a_minus), ("a_plus", a_plus)):
        if a < 0 or a + 1.0 > d + _ALIGN_TOL:
            raise GeometryError(f"{name}={a} violates 0 <= {name} and {name} + 1 <= d={d}")
    if not (0 < x2_zero <= x2_inf):
        raise GeometryError(f"need 0 < x2_zero <= x2_inf, got {x2_zero}, {x2_inf}")
    slabs = tuple(s if isinstance(s, Slab) else Slab(*map(float, s)) for s in profile)
    _check_profile(d, x2_zero, x2_inf, a_minus, a_plus, slabs)
    return CellGeometry(float(d), float(a_minus), float(a_plus),
                        float(x2_zero), float(x2_inf), slabs)


def straight_strip(x2_flat: float = 1.0) -> CellGeometry:
    """The unit strip ``(0, 1) x R``."""
    return build_cell(1.0, 0.0, 0.0, x2_flat, x2_flat)


@dataclass(frozen=True)
class Grid:
    """Uniform node grid ``x1 = i*h1`` (i = 0..N1), ``x2 = j*h2`` (j = -M..M).

    The computational domain is the cell truncated to ``|x2| <= X``.
    """

    h1: float
    h2: float
    X: float
    N1: int
    M: int

    @property
    def N2(self) -> int:
        return 2 * self.M + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.N1 + 1, self.N2

    @property
    def x1(self) -> np.ndarray:
        return self.h1 * np.arange(self.N1 + 1)

    @property
    def x2(self) -> np.ndarray:
        return self.h2 * np.arange(-self.M, self.M + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def row(self, x2: float) -> int:
        """Array row index of the node row at height ``x2``."""
        j = x2 / self.h2
        if abs(j - round(j)) > 1e-7:
            raise GeometryError(f"x2={x2} is not a grid row")
        return int(round(j)) + self.M

    def with_height(self, X: float) -> "Grid":
        M = int(round(X / self.h2))
        return Grid(self.h1, self.h2, M * self.h2, self.N1, M)

    def refined(self) -> "Grid":
        """Grid with both steps halved and the same truncation height."""
        return Grid(self.h1 / 2, self.h2 / 2, self.X, 2 * self.N1, 2 * self.M)


def make_grid(geom: CellGeometry, N1: int, X: float, h2: float | None = None) -> Grid:
    """Grid with ``h1 = d / N1`` and ``h2`` defaulting to ``h1``.

    ``X`` is rounded to a multiple of ``h2``.  Outlets must be resolved by
    whole cells: ``1/h1`` and ``a_pm/h1`` have to be integers.
    """
    h1 = geom.d / N1
    h2 = h1 if h2 is None else float(h2)
    for name, value in (("1", 1.0), ("a_minus", geom.a_minus), ("a_plus", geom.a_plus)):
        ratio = value / h1
        if abs(ratio - round(ratio)) > 1e-7:
            raise GeometryError(f"{name}/h1 = {ratio:g} is not an integer; "
                                f"choose N1 so the outlets align with the grid")
    M = int(round(X / h2))
    X = M * h2
    if X <= geom.x2_inf:
        raise GeometryError(f"truncation height X={X:g} must exceed x2_inf={geom.x2_inf:g}")
    return Grid(h1, h2, X, int(N1), M)


class NodeKind(enum.IntEnum):
    INTERIOR = 0
    WINDOW_SEAM = 1
    DIRICHLET = 2
    OUTLET_TOP = 3
    OUTLET_BOTTOM = 4
    # column x1 = d on window rows: the Bloch image of the seam, not an unknown
    BLOCH_IMAGE = 5


@dataclass(frozen=True)
class NodeSet:
    """Per-node classification and the node -> unknown index map.

    ``kind`` and ``index`` have the grid shape ``(N1 + 1, N2)``; ``index`` is
    -1 for nodes that are not unknowns.  Unknowns are numbered row-major in
    ``(i, j)``.
    """

    kind: np.ndarray
    index: np.ndarray
    eps: float

    @property
    def n_unknowns(self) -> int:
        return int((self.index >= 0).sum())

    @property
    def seam_rows(self) -> np.ndarray:
        """Array row indices of the window seam."""
        return np.flatnonzero(self.kind[0] == NodeKind.WINDOW_SEAM)

    def count(self, kind: NodeKind) -> int:
        return int((self.kind == kind).sum())


def classify_nodes(geom: CellGeometry, grid: Grid, eps: float = 0.0) -> NodeSet:
    """Classify every grid node for window half-width ``eps``."""
    if eps < 0:
        raise GeometryError(f"window half-width must be non-negative, got {eps}")
    if eps >= geom.x2_zero:
        raise GeometryError(f"window half-width {eps} must be below x2_zero={geom.x2_zero}")
    if eps > 0 and not grid.h2 < eps:
        # x2 = 0 alone does not resolve the window; require the rows +-h2 inside too
        m_min = int(np.floor(grid.X / eps)) + 1
        raise GeometryError(
            f"window |x2| < {eps} contains no grid row besides x2 = 0 (h2={grid.h2:g}); "
            f"use N2 >= {2 * m_min + 1} rows for X={grid.X:g}")

    x1, x2 = grid.mesh()
    kind = np.full(grid.shape, NodeKind.DIRICHLET, dtype=np.int8)
    inside = geom.contains(x1, x2)
    kind[inside] = NodeKind.INTERIOR

    for side, row, tag in ((1, -1, NodeKind.OUTLET_TOP), (-1, 0, NodeKind.OUTLET_BOTTOM)):
        lo, hi = geom.outlet(side)
        xs = grid.x1
        on = (xs > lo + _ALIGN_TOL * grid.h1) & (xs < hi - _ALIGN_TOL * grid.h1)
        kind[:, row] = np.where(on, tag, NodeKind.DIRICHLET)

    if eps > 0:
        window = np.abs(grid.x2) < eps - 1e-9 * grid.h2
        kind[0, window] = NodeKind.WINDOW_SEAM
        kind[-1, window] = NodeKind.BLOCH_IMAGE

    unknown = (kind == NodeKind.INTERIOR) | (kind == NodeKind.WINDOW_SEAM)
    index = np.full(grid.shape, -1, dtype=np.int64)
    index[unknown] = np.arange(int(unknown.sum()))
    kind.setflags(write=False)
    index.setflags(write=False)
    return NodeSet(kind, index, float(eps))
