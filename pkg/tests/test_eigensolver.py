import numpy as np
import pytest
import scipy.sparse as sp

from windowbands import (BoundaryCondition, Grid, NoBoundStateError, SolverError, assemble_fiber,
                         below_threshold_eigs, make_grid, resolve, shift_invert_eigs,
                         sobolev_norm, threshold_eigs_fixed_point)
from windowbands.eigensolver import ConvergenceError

from .oracles import dense_spectrum, square_5pt_eigenvalues, w1_norm_loops


def test_diagonal_example():
    res = shift_invert_eigs(sp.diags([1.0, 2.0, 3.0]), 2.1, count=1)
    assert res[0].lam == pytest.approx(2.0, abs=1e-12)
    assert abs(res[0].vector[1]) == pytest.approx(1.0)


def test_count_validation():
    with pytest.raises(ValueError):
        shift_invert_eigs(sp.identity(3), 0.0, count=0)


def _laplacian_square(n):
    h = 1.0 / n
    t = sp.diags([-np.ones(n - 2), 2 * np.ones(n - 1), -np.ones(n - 2)], [-1, 0, 1]) / h ** 2
    eye = sp.identity(n - 1)
    return sp.csr_matrix(sp.kron(t, eye) + sp.kron(eye, t))


def test_square_nearest_to_shift():
    n = 40
    H = _laplacian_square(n)
    res = shift_invert_eigs(H, 15.0, count=3, tol=1e-9)
    exact = square_5pt_eigenvalues(n, 6)
    near = np.sort(exact[np.argsort(np.abs(exact - 15.0))[:3]])
    assert np.allclose([r.lam for r in res], near, atol=1e-9)
    assert all(r.residual <= 1e-9 for r in res)


def test_agrees_with_dense_on_fiber(strip, zero):
    grid = make_grid(strip, 16, 2.0)
    op = assemble_fiber(strip, zero, grid, eps=0.3, tau=1.1)
    assert op.dim <= 2000
    w = dense_spectrum(op.matrix)
    res = shift_invert_eigs(op, 9.0, count=4, tol=1e-9)
    expect = np.sort(w[np.argsort(np.abs(w - 9.0))[:4]])
    assert np.allclose([r.lam for r in res], expect, atol=1e-8)
    V = np.column_stack([r.vector for r in res])
    assert np.allclose(V.conj().T @ V, np.eye(4), atol=1e-8)


def test_singular_shift_is_nudged(caplog):
    H = sp.diags(np.arange(1.0, 101.0)).tocsc()
    res = shift_invert_eigs(H, 50.0, count=1)
    assert res[0].lam == pytest.approx(50.0, abs=1e-10)


def test_convergence_error_carries_residual():
    err = ConvergenceError("stuck", 3e-4)
    assert err.best_residual == 3e-4
    assert "3.000e-04" in str(err)


def test_below_threshold_finds_all(strip, zero):
    grid = make_grid(strip, 16, 2.0)
    op = assemble_fiber(strip, zero, grid, eps=0.3, tau=0.0)
    w = dense_spectrum(op.matrix)
    below = w[w < op.threshold]
    res = below_threshold_eigs(op, keep=5)
    assert len(res) == len(below)
    assert np.allclose([r.lam for r in res], below, atol=1e-8)


def test_no_window_no_bound_state(strip, zero):
    grid = make_grid(strip, 16, 3.0)
    op = assemble_fiber(strip, zero, grid, eps=0.0, bc=BoundaryCondition.robin(0.0))
    assert below_threshold_eigs(op) == []
    with pytest.raises(NoBoundStateError):
        threshold_eigs_fixed_point(op)


@pytest.mark.parametrize("N", [16, 32])
def test_fixed_point_matches_tall_dirichlet(strip, zero, N):
    robin = assemble_fiber(strip, zero, make_grid(strip, N, 3.0), eps=0.25,
                           bc=BoundaryCondition.robin(0.0))
    r = threshold_eigs_fixed_point(robin)
    tall = assemble_fiber(strip, zero, make_grid(strip, N, 12.0), eps=0.25)
    d = below_threshold_eigs(tall, keep=1)[-1]
    # the outlet condition uses continuum decay rates: O(h) mismatch
    assert abs(r.lam - d.lam) < 2e-4
    assert r.k == pytest.approx(np.sqrt(robin.threshold - r.lam))
    assert r.residual < 1e-9


def test_fixed_point_is_self_consistent(strip, zero):
    op = assemble_fiber(strip, zero, make_grid(strip, 16, 3.0), eps=0.3, tau=0.5,
                        bc=BoundaryCondition.robin(0.0))
    r = threshold_eigs_fixed_point(op, tol=1e-12)
    from windowbands import apply_mode_matched_bc
    again = below_threshold_eigs(apply_mode_matched_bc(op, r.k), keep=1)[-1]
    assert again.lam == pytest.approx(r.lam, abs=1e-9)


def test_resolve_diagonal():
    H = sp.diags([1.0, 2.0, 3.0])
    sol = resolve(H, 1j, np.array([1.0, 0.0, 0.0]))
    assert sol.u[0] == pytest.approx(1.0 / (1.0 - 1j))
    assert sol.residual < 1e-14


def test_resolve_zero_rhs():
    sol = resolve(sp.identity(4), 1j, np.zeros(4))
    assert not np.any(sol.u)


def test_resolve_at_eigenvalue_fails():
    with pytest.raises(SolverError):
        resolve(sp.diags([1.0, 2.0, 3.0]), 2.0, np.ones(3))


def test_resolve_grid_field(strip, zero):
    grid = make_grid(strip, 16, 2.0)
    op = assemble_fiber(strip, zero, grid, eps=0.3, tau=0.3)
    x1, x2 = grid.mesh()
    f = np.exp(-((x1 - 0.5) ** 2 + x2 ** 2) / 0.05)
    sol = resolve(op, 1j, f)
    assert np.linalg.norm(op.matrix @ sol.u - 1j * sol.u - op.restrict(f)) < 1e-9 * np.linalg.norm(f)


def test_sobolev_hand_value():
    grid = Grid(0.5, 0.5, 1.0, 2, 2)     # shape (3, 5)
    u = np.zeros(grid.shape)
    u[1, 2] = 1.0
    # one nonzero value, two x1 and two x2 differences of size 2
    assert sobolev_norm(u, grid) == pytest.approx(np.sqrt(0.25 * (1 + 4 * 4)))
    assert sobolev_norm(u, grid) == pytest.approx(w1_norm_loops(u, 0.5, 0.5))


def test_sobolev_matches_loops(strip, rng):
    grid = make_grid(strip, 8, 2.0)
    u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    assert sobolev_norm(u, grid) == pytest.approx(w1_norm_loops(u, grid.h1, grid.h2), rel=1e-12)
    assert sobolev_norm(3 * u, grid) == pytest.approx(3 * sobolev_norm(u, grid))


def test_sobolev_shape_check(strip):
    with pytest.raises(ValueError):
        sobolev_norm(np.zeros((3, 3)), make_grid(strip, 8, 2.0))
