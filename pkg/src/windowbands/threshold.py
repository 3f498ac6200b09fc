"""Threshold solutions of the decoupled cell and the corner data they carry.

A bounded solution of ``(-Laplace + V - th) psi = 0`` that tends to a multiple
of the first outlet mode is found as an eigenvector of the decoupled operator
with the ``k = 0`` mode-matched condition.  For such a solution the condition
is exact, so the eigenvalue sits on the threshold independently of the
truncation height.  An eigenvalue that only approaches the threshold like
``1/X`` is truncation noise, not a virtual level.
"""
from __future__ import annotations

import configparser
import enum
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .eigensolver import shift_invert_eigs
from .geometry import CellGeometry, Grid
from .operators import BoundaryCondition, PotentialSpec, assemble_decoupled

__all__ = [
    "ThresholdError",
    "SignConvention",
    "ResonanceSolution",
    "ResonanceData",
    "ThresholdReport",
    "acceptance_window",
    "solve_threshold",
    "detect_virtual_levels",
    "outlet_amplitudes",
    "extract_resonance_data",
    "corner_functional",
    "rotate_pair",
    "separation_check",
    "write_resonance_record",
    "read_resonance_record",
]

log = logging.getLogger(__name__)


class ThresholdError(RuntimeError):
    pass


class SignConvention(enum.IntEnum):
    """Sign in front of the ``x1 = d`` corner term of the boundary functional."""

    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class ResonanceSolution:
    psi: np.ndarray            # full-grid field, normalised
    grid: Grid
    lam: float
    defect: float              # |lam - th| at height X
    defect_refined: float      # same at height 2X
    c_plus: complex
    c_minus: complex
    threshold_eigenvalue: bool = False


@dataclass(frozen=True)
class ResonanceData:
    multiplicity: int
    d: float
    A_minus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    A_plus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    M_minus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    M_plus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    c: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), complex))

    def __post_init__(self):
        for name in ("A_minus", "A_plus", "M_minus", "M_plus"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=complex))
            if arr.shape != (self.multiplicity,):
                raise ValueError(f"{name} must have {self.multiplicity} entries, got {arr.shape}")
            object.__setattr__(self, name, arr)
        c = np.asarray(self.c, dtype=complex).reshape(-1, 2) if np.size(self.c) else \
            np.zeros((self.multiplicity, 2), complex)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class ThresholdReport:
    multiplicity: int | None   # None when unstable
    status: str                # "stable" or "unstable"
    solutions: list
    counts: dict


def acceptance_window(X: float, C: float = 0.5) -> float:
    """Half-width of the eigenvalue window around the threshold at height ``X``.

    Capped at half the gap to the next longitudinal Neumann mode.
    """
    return min(C / X, 0.5 * (np.pi / (2.0 * X)) ** 2)


def outlet_amplitudes(psi: np.ndarray, geom: CellGeometry, grid: Grid) -> tuple[complex, complex]:
    """First-mode coefficients of ``psi`` on the rows ``x2 = +X`` and ``x2 = -X``."""
    n = int(round(1.0 / grid.h1))
    m = np.arange(1, n)
    weight = 2.0 * grid.h1 * np.sin(np.pi * m * grid.h1)
    out = []
    for side, row in ((1, grid.N2 - 1), (-1, 0)):
        lo, _ = geom.outlet(side)
        cols = int(round(lo / grid.h1)) + m
        out.append(complex(np.dot(weight, psi[cols, row])))
    return out[0], out[1]


def _window_eigs(geom, potential, grid, C):
    op = assemble_decoupled(geom, potential, grid, BoundaryCondition.robin(0.0))
    th = op.threshold
    delta = acceptance_window(grid.X, C)
    found = shift_invert_eigs(op, th - delta / 3.0, count=3, tol=1e-9)
    inside = [r for r in found if abs(r.lam - th) <= delta]
    return op, th, inside


def solve_threshold(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                    C: float = 0.5, abs_tol: float = 1e-7) -> list[ResonanceSolution]:
    """Bounded threshold solutions of the decoupled cell (0, 1 or 2 of them)."""
    op, th, cands = _window_eigs(geom, potential, grid, C)
    if len(cands) > 2:
        raise ThresholdError(f"unexpected multiplicity: {len(cands)} eigenvalues within "
                             f"{acceptance_window(grid.X, C):.3g} of the threshold")
    if not cands:
        return []
    _, th2, cands2 = _window_eigs(geom, potential, grid.with_height(2.0 * grid.X), C)
    defects2 = sorted(abs(r.lam - th2) for r in cands2)

    accepted = []
    for r, i in zip(sorted(cands, key=lambda r: abs(r.lam - th)), range(len(cands))):
        defect = abs(r.lam - th)
        defect2 = defects2[i] if i < len(defects2) else np.inf
        if defect2 <= abs_tol or defect2 <= 0.1 * defect:
            accepted.append((r, defect, defect2))
        else:
            log.info("rejected near-threshold eigenvalue %.10g: defect %.3g -> %.3g under X -> 2X",
                     r.lam, defect, defect2)

    sols = []
    for r, defect, defect2 in accepted:
        psi = op.embed(r.vector)
        cp, cm = outlet_amplitudes(psi, geom, grid)
        sols.append(ResonanceSolution(psi, grid, r.lam, defect, defect2, cp, cm))
    return _normalise(sols)


def _normalise(sols: list[ResonanceSolution]) -> list[ResonanceSolution]:
    """Unit outlet amplitude vectors; orthonormal when there are two."""
    if not sols:
        return sols
    grid = sols[0].grid
    cell_norm = np.sqrt(grid.h1 * grid.h2)
    scale = max(np.linalg.norm(s.psi) * cell_norm for s in sols)
    fields = [s.psi for s in sols]
    cvecs = [np.array([s.c_plus, s.c_minus]) for s in sols]
    out = []
    for j, s in enumerate(sols):
        v, f = cvecs[j], fields[j]
        for q in range(j):
            proj = np.vdot(cvecs[q], v)
            v, f = v - proj * cvecs[q], f - proj * fields[q]
        norm = np.linalg.norm(v)
        # a solution with no outlet content decays: it is a threshold eigenvalue
        trapped = norm < 1e-6 * scale
        if trapped:
            log.warning("threshold solution %d has no outlet content: threshold eigenvalue, "
                        "not a virtual level", j)
            l2 = np.linalg.norm(f) * cell_norm
            v, f = v / l2, f / l2
        else:
            big = v[np.argmax(np.abs(v))]
            phase = np.conj(big) / abs(big)
            v, f = v * phase / norm, f * phase / norm
        cvecs[j], fields[j] = v, f
        out.append(replace(s, psi=f, c_plus=complex(v[0]), c_minus=complex(v[1]),
                           threshold_eigenvalue=trapped))
    return out


def detect_virtual_levels(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                          C: float = 0.5, abs_tol: float = 1e-7) -> ThresholdReport:
    """Multiplicity with a stability check under ``X -> 2X`` and ``h -> h/2``.

    The ``X -> 2X`` step is built into :func:`solve_threshold`; here the grid
    is also halved and both counts must agree.
    """
    sols = solve_threshold(geom, potential, grid, C, abs_tol)
    fine = grid.refined()
    fine_count = len(solve_threshold(geom, potential, fine, C, abs_tol))
    counts = {"h": len(sols), "h/2": fine_count}
    if fine_count != len(sols):
        return ThresholdReport(None, "unstable", sols, counts)
    return ThresholdReport(len(sols), "stable", sols, counts)


def extract_resonance_data(solutions: list[ResonanceSolution], geom: CellGeometry) -> ResonanceData:
    """Corner derivatives at ``(0, 0)`` and ``(d, 0)`` by one-sided second-order stencils.

    ``A_minus``, ``A_plus`` are ``d psi / d x1``; ``M_minus``, ``M_plus`` the
    mixed derivative, a central ``x2`` difference of the one-sided ``x1`` one.
    """
    if not solutions:
        return ResonanceData(0, geom.d)
    grid = solutions[0].grid
    h1, h2 = grid.h1, grid.h2
    j0 = grid.M
    if geom.x2_zero <= 2 * h2:
        raise ThresholdError("no wall segment around x2 = 0 wide enough for the corner stencil")
    N1 = grid.N1

    def d1_left(psi, j):
        return (4.0 * psi[1, j] - psi[2, j]) / (2.0 * h1)

    def d1_right(psi, j):
        return (-4.0 * psi[N1 - 1, j] + psi[N1 - 2, j]) / (2.0 * h1)

    Am, Ap, Mm, Mp, cs = [], [], [], [], []
    for s in solutions:
        psi = s.psi
        if np.any(np.abs(psi[[0, N1], j0 - 1:j0 + 2]) > 1e-12 * np.abs(psi).max()):
            raise ThresholdError("corner nodes are not on the wall")
        Am.append(d1_left(psi, j0))
        Ap.append(d1_right(psi, j0))
        Mm.append((d1_left(psi, j0 + 1) - d1_left(psi, j0 - 1)) / (2.0 * h2))
        Mp.append((d1_right(psi, j0 + 1) - d1_right(psi, j0 - 1)) / (2.0 * h2))
        cs.append([s.c_plus, s.c_minus])
    return ResonanceData(len(solutions), geom.d, Am, Ap, Mm, Mp, np.array(cs))


def corner_functional(left, right, tau: float, d: float,
                      sign: SignConvention = SignConvention.MINUS):
    """``left + sign * right * exp(-i tau d)``, elementwise."""
    return np.asarray(left) + int(sign) * np.asarray(right) * np.exp(-1j * tau * d)


def rotate_pair(data: ResonanceData, tau: float,
                sign: SignConvention = SignConvention.MINUS) -> ResonanceData:
    """Unitary recombination of two solutions so that the second has ``ell = 0``."""
    if data.multiplicity != 2:
        raise ValueError("rotate_pair needs multiplicity 2")
    ell = corner_functional(data.A_minus, data.A_plus, tau, data.d, sign)
    norm = np.linalg.norm(ell)
    if norm == 0.0:
        raise ThresholdError("L_tau vanishes: both solutions have zero boundary functional")
    if abs(ell[1]) <= 1e-14 * norm:
        return data
    U = np.array([[np.conj(ell[0]), np.conj(ell[1])], [-ell[1], ell[0]]]) / norm
    return ResonanceData(2, data.d, U @ data.A_minus, U @ data.A_plus,
                         U @ data.M_minus, U @ data.M_plus, U @ data.c)


def separation_check(data: ResonanceData, rtol: float = 1e-6) -> np.ndarray:
    """Relative difference ``| |A-| - |A+| | / max`` per solution; warns when below ``rtol``."""
    a, b = np.abs(data.A_minus), np.abs(data.A_plus)
    rel = np.abs(a - b) / np.maximum(np.maximum(a, b), np.finfo(float).tiny)
    for j, r in enumerate(rel):
        if r < rtol:
            log.warning("solution %d: |A-| = |A+| (relative difference %.2e); "
                        "band touches the threshold to leading order", j + 1, r)
    return rel


def write_resonance_record(path: str | Path, data: ResonanceData) -> None:
    """Small INI record: multiplicity, d, then one section per solution."""
    cp = configparser.ConfigParser()
    cp["resonance"] = {"multiplicity": str(data.multiplicity), "d": repr(float(data.d))}
    for j in range(data.multiplicity):
        cp[f"solution{j + 1}"] = {
            "A_minus": repr(complex(data.A_minus[j])),
            "A_plus": repr(complex(data.A_plus[j])),
            "M_minus": repr(complex(data.M_minus[j])),
            "M_plus": repr(complex(data.M_plus[j])),
            "c_plus": repr(complex(data.c[j, 0])),
            "c_minus": repr(complex(data.c[j, 1])),
        }
    with open(path, "w") as fh:
        cp.write(fh)


def read_resonance_record(path: str | Path) -> ResonanceData:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    try:
        m = cp.getint("resonance", "multiplicity")
        d = cp.getfloat("resonance", "d")
        rows = [cp[f"solution{j + 1}"] for j in range(m)]
        get = lambda key: [complex(r[key].strip("() ")) for r in rows]  # noqa: E731
        c = np.array([[complex(r.get("c_plus", "0").strip("() ")),
                       complex(r.get("c_minus", "0").strip("() "))] for r in rows]).reshape(-1, 2)
        return ResonanceData(m, d, get("A_minus"), get("A_plus"),
                             get("M_minus"), get("M_plus"), c)
    except (KeyError, ValueError, configparser.Error) as exc:
        raise ValueError(f"{path}: malformed resonance record ({exc})") from exc
