"""Closed-form small-window predictions built from threshold corner data.

Two forms of the eigenvalue prediction are kept side by side:

* ``theorem``:    ``th - pi^2 |ell|^2 eps^4`` (one solution or the first of two),
                  ``th - mu eps^8 ln^2 eps`` (second of two);
* ``derivation``: ``th - k_eps^2`` with ``k_eps = eps^2 k2 + eps^4 (k4 + k41 ln eps)``.

They disagree in power and prefactor; the numerical eigenvalues decide
(see :func:`windowbands.bands.adjudicate_asymptotics`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .threshold import ResonanceData, SignConvention, ThresholdError, corner_functional, rotate_pair

__all__ = [
    "SignConvention",
    "BoundaryFunctionals",
    "AsymptoticCoefficients",
    "BandPrediction",
    "boundary_functionals",
    "coefficients",
    "k4_second",
    "mu_value",
    "predict_lambda",
    "band_edges",
    "inner_field_phi1",
    "inner_coefficients",
    "mu_of_tau",
    "coefficient_table",
]

PI2 = np.pi ** 2


@dataclass(frozen=True)
class BoundaryFunctionals:
    ell: complex
    ell_prime: complex
    L: np.ndarray
    L_prime: np.ndarray
    tau: float
    sign_convention: SignConvention


def boundary_functionals(data: ResonanceData, tau: float,
                         sign: SignConvention = SignConvention.MINUS) -> BoundaryFunctionals:
    """``ell = A- + sign A+ exp(-i tau d)`` and its mixed-derivative analogue, per solution."""
    if data.multiplicity < 1:
        raise ValueError("boundary functionals need at least one threshold solution")
    L = corner_functional(data.A_minus, data.A_plus, tau, data.d, sign)
    Lp = corner_functional(data.M_minus, data.M_plus, tau, data.d, sign)
    return BoundaryFunctionals(complex(L[0]), complex(Lp[0]), L, Lp, float(tau), SignConvention(sign))


def k4_second(L, L_prime) -> float:
    """``(pi/4) (|L|^2 |L'|^2 - |(L, L')|^2) / |L|^2``."""
    L = np.asarray(L, dtype=complex)
    Lp = np.asarray(L_prime, dtype=complex)
    nL = np.vdot(L, L).real
    if nL == 0.0:
        raise ZeroDivisionError("|L| = 0")
    gram = nL * np.vdot(Lp, Lp).real - abs(np.vdot(Lp, L)) ** 2
    return float(np.pi / 4.0 * max(gram, 0.0) / nL)


def mu_value(L, L_prime) -> float:
    """``(pi^2/16) (|L|^2 |L'|^2 - |(L, L')|^2)^2 / |L|^4``, evaluated on its own."""
    L = np.asarray(L, dtype=complex)
    Lp = np.asarray(L_prime, dtype=complex)
    nL = np.vdot(L, L).real
    if nL == 0.0:
        raise ZeroDivisionError("|L| = 0")
    gram = max(nL * np.vdot(Lp, Lp).real - abs(np.vdot(Lp, L)) ** 2, 0.0)
    return float(PI2 / 16.0 * gram ** 2 / nL ** 2)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    multiplicity: int
    ell_sq: float          # |ell|^2, or |L|^2 for two solutions
    k2: np.ndarray         # per solution
    k41: np.ndarray
    k4_second: float
    mu: float

    def lambda_theorem(self, j: int, eps: float, threshold: float = PI2) -> float:
        _check_j(j, self.multiplicity)
        if self.multiplicity == 2 and j == 2:
            return threshold - self.mu * eps ** 8 * np.log(eps) ** 2
        return threshold - PI2 * self.ell_sq * eps ** 4

    def lambda_derivation(self, j: int, eps: float, threshold: float = PI2) -> float:
        _check_j(j, self.multiplicity)
        k4 = self.k4_second if (self.multiplicity == 2 and j == 2) else 0.0
        k_eps = eps ** 2 * self.k2[j - 1] + eps ** 4 * (k4 + self.k41[j - 1] * np.log(eps))
        return threshold - k_eps ** 2


def _check_j(j, m):
    if not 1 <= j <= m:
        raise ValueError(f"solution index {j} outside 1..{m}")


def coefficients(funcs: BoundaryFunctionals, multiplicity: int) -> AsymptoticCoefficients:
    """``k2``, ``k41 = 3/4 k2``, ``k4`` of the second solution and ``mu``.

    For two solutions ``funcs`` must come from a rotated pair (second entry
    of ``L`` zero); then ``k2 = (pi |L|^2, 0)``.
    """
    L = np.asarray(funcs.L, dtype=complex)
    if multiplicity == 1:
        ell_sq = float(abs(L[0]) ** 2)
        k2 = np.array([np.pi * ell_sq])
        return AsymptoticCoefficients(1, ell_sq, k2, 0.75 * k2, 0.0, 0.0)
    if multiplicity != 2:
        raise ValueError(f"multiplicity must be 1 or 2, got {multiplicity}")
    nL = float(np.vdot(L, L).real)
    if nL == 0.0:
        raise ThresholdError("|L_tau| = 0: the second-band coefficient is undefined")
    if abs(L[1]) > 1e-10 * np.sqrt(nL):
        raise ValueError("two-solution coefficients need a rotated pair (L[1] = 0)")
    k2 = np.array([np.pi * nL, 0.0])
    return AsymptoticCoefficients(2, nL, k2, 0.75 * k2,
                                  k4_second(L, funcs.L_prime), mu_value(L, funcs.L_prime))


def predict_lambda(coeffs: AsymptoticCoefficients, j: int, eps: float,
                   threshold: float = PI2) -> tuple[float, float]:
    """``(lambda_theorem, lambda_derivation)`` for solution ``j`` (1-based)."""
    return coeffs.lambda_theorem(j, eps, threshold), coeffs.lambda_derivation(j, eps, threshold)


@dataclass(frozen=True)
class BandPrediction:
    """Leading-order band intervals below the threshold.

    ``gap_max[j]`` and ``gap_min[j]`` multiply ``pi^2 eps^4`` for the first band
    and ``eps^8 ln^2 eps`` for the second.
    """

    multiplicity: int
    gap_max: np.ndarray
    gap_min: np.ndarray

    @property
    def separated(self) -> np.ndarray:
        # factors below round-off of the largest one count as touching
        return self.gap_min > 1e-12 * np.maximum(self.gap_max, 1.0)

    def interval(self, j: int, eps: float, threshold: float = PI2) -> tuple[float, float]:
        _check_j(j, self.multiplicity)
        if self.multiplicity == 2 and j == 2:
            scale = eps ** 8 * np.log(eps) ** 2
        else:
            scale = PI2 * eps ** 4
        return (threshold - scale * self.gap_max[j - 1], threshold - scale * self.gap_min[j - 1])


def band_edges(data: ResonanceData, tau_samples: int = 4001,
               sign: SignConvention = SignConvention.MINUS) -> BandPrediction:
    """Extremes over the Brillouin zone of the leading gap factors.

    One solution: ``(|A-| +- |A+|)^2``.  Two solutions: ``|p1|^2 + |p2|^2 +-
    2 |(p1, p2)|`` with ``p1 = A-``, ``p2 = A+`` across the pair; the second
    band uses ``mu`` sampled on the zone.
    """
    if data.multiplicity == 1:
        a, b = abs(data.A_minus[0]), abs(data.A_plus[0])
        return BandPrediction(1, np.array([(a + b) ** 2]), np.array([(a - b) ** 2]))
    if data.multiplicity != 2:
        raise ValueError("band edges need one or two threshold solutions")
    p1, p2 = data.A_minus, data.A_plus
    base = np.vdot(p1, p1).real + np.vdot(p2, p2).real
    cross = 2.0 * abs(np.vdot(p2, p1))
    taus = np.linspace(-np.pi / data.d, np.pi / data.d, tau_samples, endpoint=False)
    mus = mu_of_tau(data, taus, sign)
    return BandPrediction(2, np.array([base + cross, mus.max()]),
                          np.array([base - cross, mus.min()]))


def mu_of_tau(data: ResonanceData, taus, sign: SignConvention = SignConvention.MINUS) -> np.ndarray:
    """``mu(tau)`` for a pair of solutions; invariant under unitary recombination."""
    out = np.empty(len(taus))
    for i, t in enumerate(taus):
        f = boundary_functionals(data, t, sign)
        out[i] = mu_value(f.L, f.L_prime)
    return out


def _sqrt_cut(z):
    # sqrt(z^2 - 1) with the cut on [-1, 1] and ~ z at infinity
    return np.sqrt(z - 1.0) * np.sqrt(z + 1.0)


def inner_field_phi1(zeta, tau: float, alpha_minus0: complex, alpha_plus0: complex,
                     d: float = 1.0, side: int = -1):
    """Leading inner solution near a window end, in stretched coordinates.

    ``phi = beta1 * zeta2 + beta2 * Im sqrt(z^2 - 1)``, ``z = zeta1 + i zeta2``;
    ``side = -1`` gives the field at ``x1 = 0``, ``side = +1`` the one at ``x1 = d``.
    ``zeta`` is a pair ``(zeta1, zeta2)`` of scalars or arrays with ``zeta2 >= 0``.
    """
    z1, z2 = (np.asarray(c, dtype=float) for c in zeta)
    if np.any(z2 < 0):
        raise ValueError("inner field is defined for zeta2 >= 0")
    b1, b2 = inner_coefficients(tau, alpha_minus0, alpha_plus0, d, side)
    # zeta2 = +0 selects the upper side of the cut
    w = _sqrt_cut(z1 + 1j * np.where(z2 == 0.0, 0.0, z2) + 0j)
    return b1 * z2 + b2 * w.imag


def inner_coefficients(tau: float, alpha_minus0: complex, alpha_plus0: complex,
                       d: float = 1.0, side: int = -1) -> tuple[complex, complex]:
    """``(beta1, beta2)`` matching the far-field slope and the window jump conditions."""
    if side < 0:
        e = np.exp(-1j * tau * d)
        return (alpha_minus0 - alpha_plus0 * e) / 2.0, (alpha_minus0 + alpha_plus0 * e) / 2.0
    e = np.exp(1j * tau * d)
    return (alpha_plus0 - alpha_minus0 * e) / 2.0, (alpha_plus0 + alpha_minus0 * e) / 2.0


def coefficient_table(data: ResonanceData, taus, eps_list=(),
                      sign: SignConvention = SignConvention.MINUS) -> list[dict]:
    """Rows of ``tau, k2, k4_second, mu`` and both eigenvalue forms per ``eps``."""
    rows = []
    for t in taus:
        d = rotate_pair(data, t, sign) if data.multiplicity == 2 else data
        co = coefficients(boundary_functionals(d, t, sign), data.multiplicity)
        row = {"tau": float(t), "k2": float(co.k2[0]), "k4_second": co.k4_second, "mu": co.mu}
        for eps in eps_list:
            for j in range(1, data.multiplicity + 1):
                th, dv = predict_lambda(co, j, eps)
                row[f"lambda_theorem_j{j}_eps{eps:g}"] = th
                row[f"lambda_derivation_j{j}_eps{eps:g}"] = dv
        rows.append(row)
    return rows
