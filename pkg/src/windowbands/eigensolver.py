"""Eigenvalues just below the threshold, and resolvent solves.

Everything runs on one sparse LU factorisation per shift (SuperLU through
``scipy.sparse.linalg.splu``) handed to ARPACK as the shift-invert operator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.optimize import brentq

from .geometry import Grid
from .operators import DiscreteOperator, apply_mode_matched_bc

__all__ = [
    "SolverError",
    "ConvergenceError",
    "NoBoundStateError",
    "EigenResult",
    "ResolventSolution",
    "shift_invert_eigs",
    "below_threshold_eigs",
    "threshold_eigs_fixed_point",
    "resolve",
    "sobolev_norm",
    "write_field_csv",
]

log = logging.getLogger(__name__)

_DENSE_LIMIT = 64


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message: str, best_residual: float = np.inf):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class NoBoundStateError(SolverError):
    """The fibre has no eigenvalue below the threshold."""


@dataclass(frozen=True)
class EigenResult:
    lam: float
    vector: np.ndarray
    residual: float
    iterations: int = 0
    k: float | None = None


@dataclass(frozen=True)
class ResolventSolution:
    u: np.ndarray
    rhs_id: str
    z: complex
    residual: float


def _matrix(op) -> sp.csc_matrix:
    H = op.matrix if isinstance(op, DiscreteOperator) else op
    return sp.csc_matrix(H)


def _is_hermitian(op, H) -> bool:
    if isinstance(op, DiscreteOperator):
        return op.hermitian
    return abs(H - H.conj().T).max() == 0 if H.nnz else True


def _factorize(H: sp.csc_matrix, sigma: complex):
    """LU of ``H - sigma I``; one retry with a nudged shift if singular."""
    n = H.shape[0]
    eye = sp.identity(n, dtype=H.dtype, format="csc")
    for attempt in range(2):
        shifted = sp.csc_matrix(H - sigma * eye)
        if np.iscomplexobj(sigma) and not np.iscomplexobj(shifted.data):
            shifted = shifted.astype(complex)
        try:
            return sla.splu(shifted), sigma
        except RuntimeError as exc:
            if attempt:
                raise SolverError(f"factorisation of H - sigma I failed at sigma={sigma}: {exc}")
            nudge = 1e-7 * (1.0 + abs(sigma))
            log.warning("singular factorisation at sigma=%s, retrying at sigma+%.1e", sigma, nudge)
            sigma = sigma + nudge
    raise AssertionError("unreachable")


def _residual(H, lam, v) -> float:
    return float(np.linalg.norm(H @ v - lam * v) / np.linalg.norm(v))


def _refine(H, lu, sigma, lam, v, basis, tol, steps=20):
    """Inverse iteration with the existing factorisation, deflating ``basis``."""
    res = _residual(H, lam, v)
    it = 0
    while res > tol and it < steps:
        v = lu.solve(v.astype(lu.U.dtype, copy=False))
        for b in basis:
            v = v - np.vdot(b, v) * b
        v /= np.linalg.norm(v)
        lam = np.vdot(v, H @ v).real
        res = _residual(H, lam, v)
        it += 1
    return lam, v, res, it


def shift_invert_eigs(op, sigma: float, count: int = 1, tol: float = 1e-8,
                      maxiter: int | None = None) -> list[EigenResult]:
    """The ``count`` eigenvalues of ``op`` nearest ``sigma``, ascending.

    ``op`` is a :class:`DiscreteOperator` or any square sparse/dense matrix.
    Residuals ``||Hv - lam v|| / ||v||`` are checked against ``tol``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    H = _matrix(op)
    n = H.shape[0]
    count = min(count, n)
    hermitian = _is_hermitian(op, H)

    if n <= _DENSE_LIMIT:
        dense = H.toarray()
        if hermitian:
            w, V = np.linalg.eigh(dense)
        else:
            w, V = np.linalg.eig(dense)
            w = w.real
        pick = np.argsort(np.abs(w - sigma), kind="stable")[:count]
        order = pick[np.argsort(w[pick], kind="stable")]
        return [EigenResult(float(w[i]), V[:, i] / np.linalg.norm(V[:, i]),
                            _residual(H, w[i], V[:, i])) for i in order]

    lu, sigma = _factorize(H, sigma)
    opinv = sla.LinearOperator(H.shape, matvec=lu.solve, dtype=lu.U.dtype)
    ncv = min(n, max(2 * count + 1, 20))
    # fixed start vector: ARPACK's own seed is shared state, so results would depend on call order
    v0 = np.random.default_rng(0).standard_normal(n).astype(lu.U.dtype)
    try:
        if hermitian:
            w, V = sla.eigsh(H, k=count, sigma=sigma, OPinv=opinv, which="LM",
                             ncv=ncv, maxiter=maxiter, tol=0, v0=v0)
        else:
            w, V = sla.eigs(H, k=count, sigma=sigma, OPinv=opinv, which="LM",
                            ncv=ncv, maxiter=maxiter, tol=0, v0=v0)
    except sla.ArpackNoConvergence as exc:
        best = min((_residual(H, lam, v) for lam, v in zip(exc.eigenvalues, exc.eigenvectors.T)),
                   default=np.inf)
        raise ConvergenceError("ARPACK did not converge", best) from exc

    w = np.real(w)
    order = np.argsort(w, kind="stable")
    results, basis = [], []
    for i in order:
        v = V[:, i] / np.linalg.norm(V[:, i])
        lam, v, res, it = _refine(H, lu, sigma, float(w[i]), v, basis, tol)
        if res > tol:
            raise ConvergenceError(f"eigenpair near {lam:.12g} above tolerance {tol:g}", res)
        basis.append(v)
        results.append(EigenResult(float(lam), v, res, it))
    return results


def below_threshold_eigs(op: DiscreteOperator, keep: int = 2, tol: float = 1e-8,
                         threshold: float | None = None, max_count: int = 32) -> list[EigenResult]:
    """Eigenvalues below the threshold, the ``keep`` nearest to it, ascending.

    The shift sits under the whole spectrum (the discrete Laplacian is
    non-negative), and the number of requested eigenvalues grows until one at
    or above the threshold shows up, so nothing below it is missed.
    """
    th = op.threshold if threshold is None else threshold
    sigma = op.potential_min - 1.0
    count = keep + 1
    while True:
        found = shift_invert_eigs(op, sigma, count, tol)
        if found[-1].lam >= th or count >= min(max_count, op.dim):
            break
        count = min(2 * count, max_count, op.dim)
    below = [r for r in found if r.lam < th]
    if len(below) == len(found) and len(found) == max_count:
        log.warning("more than %d eigenvalues below threshold; keeping the top %d", max_count, keep)
    return below[-keep:] if keep else below


def threshold_eigs_fixed_point(op: DiscreteOperator, k0: float = 0.0, tol: float = 1e-10,
                               maxiter: int = 60, branch: int = 0,
                               eig_tol: float = 1e-9) -> EigenResult:
    """Self-consistent eigenpair with the mode-matched condition.

    Solves ``k = sqrt(th - lam(k))`` where ``lam(k)`` is the eigenvalue of the
    operator with outlet decay ``k``; ``branch`` counts down from the
    threshold (0 is the eigenvalue closest to it).  ``lam`` grows with ``k``,
    and ``k = 0`` (Neumann for the first mode) gives its lowest value, so the
    root is bracketed by ``[0, sqrt(th - lam(0))]`` and found with Brent's
    method rather than by plain substitution, which stalls when ``k X`` is
    small.  ``k0`` only serves as a first probe inside the bracket.
    """
    th = op.threshold
    cache: dict[float, EigenResult | None] = {}

    def solve(k: float) -> EigenResult | None:
        if k not in cache:
            below = below_threshold_eigs(apply_mode_matched_bc(op, k, op.bc.mode_cut),
                                         keep=branch + 1, tol=eig_tol)
            cache[k] = below[-1 - branch] if len(below) > branch else None
        return cache[k]

    def F(k: float) -> float:
        r = solve(k)
        return k - (np.sqrt(th - r.lam) if r is not None else 0.0)

    base = solve(0.0)
    if base is None:
        raise NoBoundStateError(
            f"no eigenvalue below threshold for this fibre (tau={op.tau:g}, eps={op.eps:g})")
    k_hi = float(np.sqrt(th - base.lam))
    lo, hi = 0.0, k_hi
    if 0.0 < k0 < k_hi:
        if F(k0) < 0:
            lo = float(k0)
        else:
            hi = float(k0)
    if F(hi) == 0.0:
        k = hi
    else:
        try:
            k = brentq(F, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=maxiter)
        except RuntimeError as exc:
            raise ConvergenceError(f"decay-rate iteration did not converge: {exc}") from exc
    r = solve(k)
    if r is None:
        raise NoBoundStateError(f"bound state lost at k={k:g} (tau={op.tau:g}, eps={op.eps:g})")
    return EigenResult(r.lam, r.vector, r.residual, len(cache), float(np.sqrt(th - r.lam)))


def resolve(op, z: complex, f: np.ndarray, tol: float = 1e-10, rhs_id: str = "f") -> ResolventSolution:
    """Solve ``(H - z) u = f``; ``f`` is a vector on the unknowns or a full-grid array."""
    H = _matrix(op)
    f = np.asarray(f)
    if isinstance(op, DiscreteOperator) and f.ndim == 2:
        f = op.restrict(f)
    norm_f = np.linalg.norm(f)
    if norm_f == 0:
        return ResolventSolution(np.zeros(H.shape[0], dtype=complex), rhs_id, z, 0.0)
    lu, _ = _factorize(H.astype(complex), complex(z))
    u =lu.solve(f.astype(complex))
    res = float(np.linalg.norm(H @ u - z * u - f) / norm_f)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"resolvent solve at z={z} breaks down (relative residual {res:.3e})")
    return ResolventSolution(u, rhs_id, complex(z), res)


def sobolev_norm(field: np.ndarray, grid: Grid) -> float:
    """Discrete ``W^1`` norm of a full-grid array (zeros outside the domain).

    Columns ``0..N1-1`` are the cell; column ``N1`` only enters the last
    forward difference in ``x1``.
    """
    u = np.asarray(field)
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    cell = u[:-1, :]
    d1 = (u[1:, :] - u[:-1, :]) / grid.h1
    d2 = (cell[:, 1:] - cell[:, :-1]) / grid.h2
    total = np.sum(np.abs(cell) ** 2) + np.sum(np.abs(d1) ** 2) + np.sum(np.abs(d2) ** 2)
    return float(np.sqrt(grid.h1 * grid.h2 * total))


def write_field_csv(path: str | Path, field: np.ndarray, grid: Grid) -> None:
    """Dump a full-grid field as ``x1,x2,re,im`` rows."""
    x1, x2 = grid.mesh()
    u = np.asarray(field, dtype=complex)
    table = np.column_stack([x1.ravel(), x2.ravel(), u.real.ravel(), u.imag.ravel()])
    np.savetxt(path, table, delimiter=",", fmt="%.12g", header="x1,x2,re,im", comments="")
