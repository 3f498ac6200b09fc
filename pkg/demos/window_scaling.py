# How fast does the bound state leave the threshold as the window closes?
# Three candidate prefactors for gap = C eps^4 are compared with fibre eigenvalues.
# Run: python demos/window_scaling.py   (about a minute)

# %%
import numpy as np

from windowbands import (SolverConfig, adjudicate_asymptotics, fiber_eigs, make_grid,
                         straight_strip, zero_potential)
from windowbands.operators import discrete_threshold

geom, pot = straight_strip(), zero_potential()
ell_sq = 2 * np.pi ** 2          # |A- - A+|^2 for the strip at tau = 0
cfg = SolverConfig(bc="robin", keep=1)


def gaps(grid, eps_list):
    th = discrete_threshold(grid)
    return np.array([th - fiber_eigs(geom, pot, grid, e, 0.0, cfg)[0].lam for e in eps_list])


# %% Moderate windows: the gap is a sizeable fraction of pi^2, no eps^4 yet
eps = np.array([0.4, 0.3, 0.2, 0.15])
g = gaps(make_grid(geom, 64, 3.0), eps)
fit = adjudicate_asymptotics(eps, g, ell_sq)
print("moderate eps:", eps, "\n  gaps", g)
print(f"  p = {fit.exponent:.3f}, verdict: {fit.verdict}  {fit.notes}")

# %% Small windows on a finer transverse grid (h2 divides every eps)
eps = np.array([0.1, 0.08, 0.06, 0.05])
g = gaps(make_grid(geom, 96, 3.0, h2=0.005), eps)
fit = adjudicate_asymptotics(eps, g, ell_sq)
print("\nsmall eps:", eps, "\n  gaps", g)
print(f"  p = {fit.exponent:.3f}, C (eps^4 fixed) = {fit.prefactor_p4:.2f}")
for name, c in fit.hypotheses.items():
    print(f"  {name:10s} C = {c:9.2f}   relative error {fit.rel_errors[name]:.3f}")
print("  verdict:", fit.verdict)
print("  gap / (pi^6 eps^4):", np.round(g / (np.pi ** 6 * eps ** 4), 3))
