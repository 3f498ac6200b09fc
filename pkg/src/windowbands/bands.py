"""Brillouin-zone sweeps, band extrema and the two validation studies."""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .asymptotics import boundary_functionals
from .eigensolver import (EigenResult, NoBoundStateError, SolverError, below_threshold_eigs,
                          resolve, sobolev_norm, threshold_eigs_fixed_point)
from .geometry import CellGeometry, Grid, classify_nodes
from .operators import BoundaryCondition, PotentialSpec, assemble_fiber
from .threshold import ResonanceData, SignConvention

__all__ = [
    "SweepError",
    "LocationClass",
    "SolverConfig",
    "Extremum",
    "BandFunction",
    "ScalingFit",
    "ExtremumReport",
    "ResolventStudy",
    "fiber_eigs",
    "sweep",
    "fit_power_law",
    "adjudicate_asymptotics",
    "interior_extremum_scan",
    "classify_location",
    "resolvent_convergence_study",
]

log = logging.getLogger(__name__)


class SweepError(RuntimeError):
    pass


class LocationClass(enum.Enum):
    LEFT_EDGE = "left_edge"
    CENTER = "center"
    INTERIOR = "interior"
    RIGHT_EDGE = "right_edge"


@dataclass(frozen=True)
class SolverConfig:
    """Eigen-solve settings shared by every fibre of a sweep.

    ``bc`` is ``"dirichlet"`` (truncation) or ``"robin"`` (mode-matched with a
    fixed point on the decay rate).
    """

    tol: float = 1e-9
    keep: int = 2
    bc: str = "dirichlet"
    mode_cut: int | None = None
    fixed_point_tol: float = 1e-10
    workers: int = 1


@dataclass(frozen=True)
class Extremum:
    tau: float
    lam: float
    kind: str                  # "min" or "max"
    location: LocationClass


@dataclass
class BandFunction:
    index: int                 # 1 = deepest band
    eps: float
    tau: np.ndarray
    lam: np.ndarray            # nan where absent
    residual: np.ndarray
    extrema: list = field(default_factory=list)

    @property
    def present(self) -> np.ndarray:
        return np.isfinite(self.lam)

    @property
    def interval(self) -> tuple[float, float]:
        vals = list(self.lam[self.present]) + [e.lam for e in self.extrema]
        return (float(min(vals)), float(max(vals)))


@dataclass(frozen=True)
class ScalingFit:
    eps: np.ndarray
    gaps: np.ndarray
    exponent: float
    prefactor: float           # free fit
    prefactor_p4: float        # least squares with the exponent fixed at 4
    hypotheses: dict           # name -> predicted prefactor
    rel_errors: dict           # name -> relative error of prefactor_p4
    verdict: str
    notes: str = ""


@dataclass(frozen=True)
class ExtremumReport:
    degenerate: bool
    minimum: Extremum | None
    maximum: Extremum | None

    @property
    def interior(self) -> list[Extremum]:
        return [e for e in (self.minimum, self.maximum)
                if e is not None and e.location is LocationClass.INTERIOR]


@dataclass(frozen=True)
class ResolventStudy:
    eps: np.ndarray
    diff_norms: np.ndarray
    ratios: np.ndarray
    locality: np.ndarray       # share of the squared W1 difference within 10 eps of the window
    tau: float
    verdict: str


# --------------------------------------------------------------------------
# fibre solves and sweeps
# --------------------------------------------------------------------------

def fiber_eigs(geom: CellGeometry, potential: PotentialSpec, grid: Grid, eps: float,
               tau: float, cfg: SolverConfig | None = None, nodes=None) -> list[EigenResult]:
    """Eigenvalues of one fibre below the threshold, ascending (at most ``cfg.keep``)."""
    cfg = cfg or SolverConfig()
    nodes = nodes if nodes is not None else classify_nodes(geom, grid, eps)
    if cfg.bc == "dirichlet":
        op = assemble_fiber(geom, potential, grid, nodes, eps, tau)
        return below_threshold_eigs(op, keep=cfg.keep, tol=cfg.tol)
    if cfg.bc != "robin":
        raise ValueError(f"unknown boundary condition '{cfg.bc}'")
    op = assemble_fiber(geom, potential, grid, nodes, eps, tau,
                        BoundaryCondition.robin(0.0, cfg.mode_cut))
    out = []
    for branch in range(cfg.keep):
        try:
            out.append(threshold_eigs_fixed_point(op, 0.0, cfg.fixed_point_tol,
                                                  branch=branch, eig_tol=cfg.tol))
        except NoBoundStateError:
            break
    return sorted(out, key=lambda r: r.lam)


def _location(tau: float, d: float, step: float) -> LocationClass:
    half = np.pi / d
    if abs(tau + half) <= 3 * step:
        return LocationClass.LEFT_EDGE
    if abs(tau - half) <= 3 * step:
        return LocationClass.RIGHT_EDGE
    if abs(tau) <= 3 * step:
        return LocationClass.CENTER
    return LocationClass.INTERIOR


classify_location = _location


def _assign(prev: list, found: list, nbands: int) -> list:
    """Slots for the found eigenvalues; order when complete, else nearest previous value."""
    slots = [None] * nbands
    if len(found) == nbands or not any(p is not None for p in prev):
        for j, r in enumerate(found[:nbands]):
            slots[j] = r
        return slots
    free = list(range(nbands))
    for r in found:
        j = min(free, key=lambda q: abs(r.lam - prev[q]) if prev[q] is not None else np.inf)
        slots[j] = r
        free.remove(j)
    return slots


def sweep(geom: CellGeometry, potential: PotentialSpec, grid: Grid, eps: float,
          tau_count: int, cfg: SolverConfig | None = None, symmetric: bool = True,
          refine: bool = True) -> list[BandFunction]:
    """Band functions over the Brillouin zone.

    With ``symmetric`` (real potential) only ``[0, pi/d]`` is sampled.
    Fibres whose solve fails are recorded as absent; more than half failing
    raises :class:`SweepError`.
    """
    if tau_count < 3:
        raise ValueError("tau_count must be >= 3")
    cfg = cfg or SolverConfig()
    half = np.pi / geom.d
    taus = (np.linspace(0.0, half, tau_count) if symmetric
            else np.linspace(-half, half, tau_count, endpoint=False))
    nodes = classify_nodes(geom, grid, eps)

    def work(t):
        try:
            return fiber_eigs(geom, potential, grid, eps, t, cfg, nodes)
        except SolverError as exc:
            log.warning("fibre tau=%.6g failed: %s", t, exc)
            return exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(work, taus))
    else:
        results = [work(t) for t in taus]

    failed = sum(isinstance(r, Exception) for r in results)
    if failed > 0.5 * len(taus):
        raise SweepError(f"{failed} of {len(taus)} fibres failed")
    nbands = max((len(r) for r in results if not isinstance(r, Exception)), default=0)
    if nbands == 0:
        return []

    lam = np.full((nbands, len(taus)), np.nan)
    res = np.full((nbands, len(taus)), np.nan)
    prev = [None] * nbands
    for i, r in enumerate(results):
        if isinstance(r, Exception):
            continue
        for j, e in enumerate(_assign(prev, r, nbands)):
            if e is not None:
                lam[j, i], res[j, i] = e.lam, e.residual
                prev[j] = e.lam
    bands = [BandFunction(j + 1, eps, taus, lam[j], res[j]) for j in range(nbands)]
    if refine:
        for b in bands:
            b.extrema = _refine_extrema(b, geom, potential, grid, cfg, nodes)
    return bands


def _band_value(band: BandFunction, geom, potential, grid, cfg, nodes, tau, guess) -> float:
    found = fiber_eigs(geom, potential, grid, band.eps, tau, cfg, nodes)
    if not found:
        return np.inf
    return min((r.lam for r in found), key=lambda v: abs(v - guess))


def _refine_extrema(band: BandFunction, geom, potential, grid, cfg, nodes) -> list[Extremum]:
    ok = np.flatnonzero(band.present)
    if ok.size == 0:
        return []
    step = abs(band.tau[1] - band.tau[0])
    out = []
    for kind, sgn in (("min", 1.0), ("max", -1.0)):
        i = ok[np.argmin(sgn * band.lam[ok])]
        t_star, l_star = band.tau[i], band.lam[i]
        inner = 0 < i < len(band.tau) - 1 and band.present[i - 1] and band.present[i + 1]
        if inner and np.isfinite(band.lam[i - 1]) and np.isfinite(band.lam[i + 1]):
            f = lambda t: sgn * _band_value(band, geom, potential, grid, cfg, nodes, t, l_star)  # noqa: E731
            try:
                r = minimize_scalar(f, bracket=(band.tau[i - 1], t_star, band.tau[i + 1]),
                                    method="golden", tol=1e-4)
                if sgn * r.fun <= sgn * l_star:
                    t_star, l_star = float(r.x), float(sgn * r.fun)
            except (ValueError, SolverError) as exc:
                log.warning("extremum refinement near tau=%.4g failed: %s", t_star, exc)
        out.append(Extremum(float(t_star), float(l_star), kind, _location(t_star, geom.d, step)))
    return out


# --------------------------------------------------------------------------
# scaling fits
# --------------------------------------------------------------------------

def fit_power_law(eps, gaps) -> tuple[float, float]:
    """Least squares ``log gap = p log eps + log C``; returns ``(p, C)``."""
    x, y = np.log(np.asarray(eps, float)), np.log(np.asarray(gaps, float))
    p, logc = np.polyfit(x, y, 1)
    return float(p), float(np.exp(logc))


def adjudicate_asymptotics(eps, gaps, data: ResonanceData | float, tau: float = 0.0,
                           sign: SignConvention = SignConvention.MINUS,
                           rel_tol: float = 0.25, exponent_tol: float = 0.3) -> ScalingFit:
    """Fit ``gap = C eps^p`` and test ``C`` against the candidate prefactors.

    ``data`` is threshold corner data (then ``|ell_tau|^2`` is evaluated) or
    ``|ell_tau|^2`` directly.  Candidates for the ``eps^4`` coefficient:

    * ``theorem``:    ``pi^2 |ell|^2``
    * ``derivation``: ``pi^2 |ell|^4`` (the square of ``eps^2 k2``, ``k2 = pi |ell|^2``)
    * ``half_k2``:    ``pi^2 |ell|^4 / 4`` (same with ``k2 = pi |ell|^2 / 2``)

    A form matches when its prefactor is within ``rel_tol`` of the
    fixed-exponent fit and the free exponent is within ``exponent_tol`` of 4.
    """
    eps = np.asarray(eps, float)
    gaps = np.asarray(gaps, float)
    if len(eps) < 3:
        raise ValueError("need at least three window sizes")
    if isinstance(data, ResonanceData):
        ell_sq = float(abs(boundary_functionals(data, tau, sign).ell) ** 2)
    else:
        ell_sq = float(data)
    hyp = {"theorem": np.pi ** 2 * ell_sq,
           "derivation": np.pi ** 2 * ell_sq ** 2,
           "half_k2": np.pi ** 2 * ell_sq ** 2 / 4.0}
    order = np.argsort(eps)
    if np.any(gaps <= 0) or np.any(np.diff(gaps[order]) <= 0):
        return ScalingFit(eps, gaps, np.nan, np.nan, np.nan, hyp,
                          {k: np.nan for k in hyp}, "inconclusive",
                          "gaps are not positive and increasing in eps")
    p, c = fit_power_law(eps, gaps)
    c4 = float(np.exp(np.mean(np.log(gaps) - 4.0 * np.log(eps))))
    errs = {k: abs(c4 - v) / v for k, v in hyp.items()}
    notes = ""
    if abs(p - 4.0) > exponent_tol:
        match = []
        notes = f"fitted exponent {p:.3f} is not 4 within {exponent_tol:g}: outside the eps^4 regime"
    else:
        match = [k for k in hyp if errs[k] <= rel_tol]
    verdict = match[0] if len(match) == 1 else ("ambiguous" if match else "no form matches")
    return ScalingFit(eps, gaps, p, c, c4, hyp, errs, verdict, notes)


def interior_extremum_scan(taus, values, d: float = 1.0, rtol: float = 1e-12) -> ExtremumReport:
    """Locate the extrema of sampled ``mu(tau)`` and classify where they sit.

    Sample extrema are polished by a parabola through the neighbouring
    samples; the location class uses a margin of 3 sample steps.
    """
    taus = np.asarray(taus, float)
    vals = np.asarray(values, float)
    scale = max(np.max(np.abs(vals)), np.finfo(float).tiny)
    if np.ptp(vals) <= rtol * scale:
        return ExtremumReport(True, None, None)
    step = float(np.min(np.diff(taus)))
    n = len(taus)
    periodic = np.isclose(taus[-1] + step - taus[0], 2 * np.pi / d)
    out = []
    for kind, i in (("min", int(np.argmin(vals))), ("max", int(np.argmax(vals)))):
        t, v = taus[i], vals[i]
        if periodic or 0 < i < n - 1:
            ym, y0, yp = vals[(i - 1) % n], vals[i], vals[(i + 1) % n]
            curv = ym - 2 * y0 + yp
            if curv != 0:
                shift = 0.5 * (ym - yp) / curv
                if abs(shift) <= 1:
                    t = t + shift * step
                    v = y0 - 0.25 * (ym - yp) * shift
        out.append(Extremum(float(t), float(v), kind, _location(t, d, step)))
    return ExtremumReport(False, out[0], out[1])


# --------------------------------------------------------------------------
# resolvent study
# --------------------------------------------------------------------------

def _energy_density(u: np.ndarray, grid: Grid) -> np.ndarray:
    cell = u[:-1, :]
    dens = np.abs(cell) ** 2
    dens += np.abs((u[1:, :] - u[:-1, :]) / grid.h1) ** 2
    dens[:, :-1] += np.abs((cell[:, 1:] - cell[:, :-1]) / grid.h2) ** 2
    return grid.h1 * grid.h2 * dens


def resolvent_convergence_study(geom: CellGeometry, potential: PotentialSpec, grid: Grid,
                                f: np.ndarray, eps_list, tau: float, z: complex = 1j,
                                tol: float = 1e-10, spread: float = 5.0) -> ResolventStudy:
    """``|u_eps - u_0|_{W1} / (eps |ln eps|^(1/2))`` on one fibre.

    ``u_eps`` solves ``(H_eps(tau) - z) u = f``, ``u_0`` the decoupled problem.
    Verdict ``consistent`` when the ratios vary by less than ``spread``.
    """
    f = np.asarray(f)
    x1, x2 = grid.mesh()
    if np.any(f[np.abs(x2) >= geom.x2_inf] != 0):
        raise ValueError("source must vanish for |x2| >= x2_inf")
    op0 = assemble_fiber(geom, potential, grid, classify_nodes(geom, grid, 0.0), 0.0, 0.0)
    u0 = op0.embed(resolve(op0, z, f, tol, "f").u)
    near = np.minimum(np.hypot(x1, x2), np.hypot(x1 - geom.d, x2))[:-1, :]
    eps_arr = np.asarray(eps_list, float)
    norms, local = [], []
    for eps in eps_arr:
        op = assemble_fiber(geom, potential, grid, classify_nodes(geom, grid, eps), eps, tau)
        diff = op.embed(resolve(op, z, f, tol, "f").u) - u0
        norms.append(sobolev_norm(diff, grid))
        dens = _energy_density(diff, grid)
        total = dens.sum()
        local.append(dens[near < 10 * eps].sum() / total if total > 0 else 1.0)
    norms = np.array(norms)
    ratios = norms / (eps_arr * np.sqrt(np.abs(np.log(eps_arr))))
    if np.all(norms == 0):
        verdict = "consistent"
    else:
        verdict = "consistent" if ratios.max() < spread * ratios.min() else "inconsistent"
    return ResolventStudy(eps_arr, norms, ratios, np.array(local), float(tau), verdict)
