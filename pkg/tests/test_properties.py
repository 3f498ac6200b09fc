"""Property-based checks of the algebraic and structural invariants."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from windowbands import (ResonanceData, adjudicate_asymptotics, assemble_fiber, band_edges,
                         inner_field_phi1, make_grid, mu_value, rotate_pair, sobolev_norm,
                         straight_strip, zero_potential)
from windowbands.asymptotics import k4_second, mu_of_tau
from windowbands.threshold import corner_functional

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
pair = st.lists(cplx, min_size=2, max_size=2).map(np.array)
nonzero_pair = pair.filter(lambda v: np.linalg.norm(v) > 1e-3)
tau = st.floats(-np.pi, np.pi)

GEOM = straight_strip()
GRID = make_grid(GEOM, 8, 2.0)
ZERO = zero_potential()


@given(nonzero_pair, pair)
def test_mu_is_square_of_k4(L, Lp):
    k4 = k4_second(L, Lp)
    assert k4 >= 0
    assert mu_value(L, Lp) == pytest.approx(k4 ** 2, rel=1e-12, abs=1e-12 * max(1, k4 ** 2))


@given(nonzero_pair, cplx)
def test_k4_vanishes_for_parallel(L, c):
    assert k4_second(L, c * L) == pytest.approx(0.0, abs=1e-10 * (1 + abs(c) ** 2) * np.vdot(L, L).real)


@given(pair, pair, pair, pair, tau)
def test_rotation_zeroes_second_functional(am, ap, mm, mp, t):
    data = ResonanceData(2, 1.0, am, ap, mm, mp, np.eye(2))
    L = corner_functional(am, ap, t, 1.0)
    if np.linalg.norm(L) < 1e-6:
        return
    rot = rotate_pair(data, t)
    Lr = corner_functional(rot.A_minus, rot.A_plus, t, 1.0)
    assert abs(Lr[1]) <= 1e-10 * np.linalg.norm(L)
    assert abs(Lr[0]) == pytest.approx(np.linalg.norm(L), rel=1e-10)
    assert mu_of_tau(rot, [t])[0] == pytest.approx(mu_of_tau(data, [t])[0], rel=1e-8, abs=1e-10)


@given(cplx, cplx, st.floats(0.5, 3.0))
def test_one_solution_band_edges(a, b, d):
    data = ResonanceData(1, d, [a], [b], [0], [0])
    bp = band_edges(data)
    taus = np.linspace(-np.pi / d, np.pi / d, 4001)
    vals = np.abs(a - b * np.exp(-1j * taus * d)) ** 2
    assert vals.max() <= bp.gap_max[0] * (1 + 1e-12) + 1e-12
    assert vals.min() >= bp.gap_min[0] * (1 - 1e-12) - 1e-12
    assert vals.max() == pytest.approx(bp.gap_max[0], rel=1e-4, abs=1e-9)


@given(cplx, cplx, tau, st.floats(0.5, 3.0))
def test_functional_periodic(a, b, t, d):
    one = corner_functional(a, b, t, d)
    two = corner_functional(a, b, t + 2 * np.pi / d, d)
    assert abs(one - two) <= 1e-9 * (1 + abs(a) + abs(b))


@given(tau, st.sampled_from([0.0, 0.3, 0.5, 0.75]))
def test_fiber_always_hermitian(t, eps):
    op = assemble_fiber(GEOM, ZERO, GRID, eps=eps, tau=t)
    assert op.hermitian


@given(st.integers(0, 2 ** 32 - 1), st.floats(-5, 5))
def test_sobolev_norm_seminorm_laws(seed, c):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(GRID.shape)
    v = rng.standard_normal(GRID.shape)
    assert sobolev_norm(c * u, GRID) == pytest.approx(abs(c) * sobolev_norm(u, GRID))
    assert sobolev_norm(u + v, GRID) <= sobolev_norm(u, GRID) + sobolev_norm(v, GRID) + 1e-12


@given(st.floats(1.0001, 50), st.booleans(), cplx, cplx, tau, st.sampled_from([-1, 1]))
def test_inner_field_zero_on_wall(x, left, am, ap, t, side):
    z1 = -x if left else x
    assert abs(inner_field_phi1((z1, 0.0), t, am, ap, side=side)) <= 1e-12 * (1 + abs(am) + abs(ap))


@given(st.floats(10.0, 1e3), st.sampled_from(["theorem", "derivation", "half_k2"]))
def test_adjudication_recovers_form(ell_sq, form):
    coef = {"theorem": np.pi ** 2 * ell_sq, "derivation": np.pi ** 2 * ell_sq ** 2,
            "half_k2": np.pi ** 2 * ell_sq ** 2 / 4}[form]
    eps = np.array([0.2, 0.1, 0.05])
    assert adjudicate_asymptotics(eps, coef * eps ** 4, ell_sq).verdict == form
