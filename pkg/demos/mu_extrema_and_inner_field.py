# Two threshold solutions: the second band is governed by mu(tau), which can
# peak inside the Brillouin zone.  Then the inner field near a window end.
# Run: python demos/mu_extrema_and_inner_field.py

# %%
import numpy as np

from windowbands import (ResonanceData, SignConvention, band_edges, inner_field_phi1,
                         interior_extremum_scan)
from windowbands.asymptotics import coefficient_table, mu_of_tau

# synthetic corner data for a pair of solutions, d = 1
data = ResonanceData(2, 1.0, A_minus=[1.0, 0.3], A_plus=[0.5, 0.0],
                     M_minus=[0.2, 1.0], M_plus=[0.0, -0.4])

taus = np.linspace(-np.pi, np.pi, 2000, endpoint=False)
for sign in SignConvention:
    mus = mu_of_tau(data, taus, sign)
    rep = interior_extremum_scan(taus, mus)
    print(f"{sign.name:5s}: mu min {rep.minimum.lam:.6f} at tau {rep.minimum.tau:+.4f} "
          f"({rep.minimum.location.value}), max {rep.maximum.lam:.6f} at tau "
          f"{rep.maximum.tau:+.4f} ({rep.maximum.location.value})")

pred = band_edges(data, tau_samples=4000)
print("band 1 gap factors:", pred.gap_max[0], pred.gap_min[0])
print("band 2 mu range:   ", pred.gap_max[1], pred.gap_min[1])

# %% A few coefficient rows
for row in coefficient_table(data, [0.0, 1.0, 2.0], [0.1])[:3]:
    print({k: round(v, 6) for k, v in row.items() if k in ("tau", "k2", "k4_second", "mu")})

# %% Inner field near the window end x1 = 0, stretched coordinates
am, ap, tau = 0.8 - 0.3j, -1.1 + 0.4j, 0.9
z1 = np.array([-3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0])
print("\nzeta2 = 0:", np.round(inner_field_phi1((z1, np.zeros_like(z1)), tau, am, ap), 6))
rho = 100.0
for theta in (0.3, 1.2, 2.5):
    phi = inner_field_phi1((rho * np.cos(theta), rho * np.sin(theta)), tau, am, ap)
    print(f"theta = {theta}: phi / (rho sin theta) = {phi / (rho * np.sin(theta)):.6f}  (alpha = {am})")
