# How close is the coupled resolvent to the decoupled one?  The W1 distance of
# (H_eps - i)^{-1} f and (H_0 - i)^{-1} f is compared with eps |ln eps|^(1/2).
# Run: python demos/resolvent_rate.py

# %%
import numpy as np

from windowbands import make_grid, resolvent_convergence_study, straight_strip, zero_potential

geom, pot = straight_strip(), zero_potential()
grid = make_grid(geom, 64, 3.0)
x1, x2 = grid.mesh()
f = np.exp(-((x1 - 0.5) ** 2 + (x2 - 0.3) ** 2) / 0.04)
f[np.abs(x2) >= geom.x2_inf] = 0.0
f[[0, -1], :] = 0.0

for tau in (0.0, np.pi / 2):
    st = resolvent_convergence_study(geom, pot, grid, f, [0.4, 0.2, 0.1, 0.05], tau)
    print(f"tau = {tau:.4f}")
    for e, n, r, loc in zip(st.eps, st.diff_norms, st.ratios, st.locality):
        print(f"  eps = {e:5.3f}  |u_eps - u_0|_W1 = {n:.4e}  ratio = {r:.4f}  near window {loc:.3f}")
    print(f"  spread {st.ratios.max() / st.ratios.min():.3f} -> {st.verdict}")
