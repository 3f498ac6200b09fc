# Straight strip: the threshold solution of one cell and the band that opens
# when neighbouring cells are joined through a window of half-width eps.
# Run: python demos/strip_threshold_and_bands.py

# %%
import numpy as np

from windowbands import (SolverConfig, detect_virtual_levels, extract_resonance_data, make_grid,
                         straight_strip, sweep, zero_potential)
from windowbands.asymptotics import band_edges
from windowbands.operators import discrete_threshold

geom = straight_strip()          # unit strip, period d = 1
pot = zero_potential()
grid = make_grid(geom, 32, 3.0)  # h = 1/32, truncated at |x2| = 3
th = discrete_threshold(grid)
print(f"discrete threshold {th:.8f}  (pi^2 = {np.pi ** 2:.8f})")

# %% The decoupled cell has one bounded solution at the threshold: sin(pi x1)
report = detect_virtual_levels(geom, pot, grid)
print("multiplicity:", report.multiplicity, report.status, report.counts)
sol = report.solutions[0]
print(f"outlet amplitudes c+ = {sol.c_plus:.6f}, c- = {sol.c_minus:.6f}")

data = extract_resonance_data(report.solutions, geom)
print(f"A- = {data.A_minus[0].real:.6f}, A+ = {data.A_plus[0].real:.6f}, "
      f"pi/sqrt2 = {np.pi / np.sqrt(2):.6f}")

# %% Leading-order band: |A-| = |A+| here, so the band reaches the threshold
pred = band_edges(data)
print("gap factors (max, min):", pred.gap_max, pred.gap_min, "separated:", pred.separated)

# %% Open a window and sweep half the Brillouin zone
cfg = SolverConfig(bc="robin", keep=1)
for eps in (0.3, 0.2):
    bands = sweep(geom, pot, grid, eps, 9, cfg)
    for b in bands:
        print(f"\neps = {eps}: band {b.index}, interval {b.interval[0]:.6f} .. {b.interval[1]:.6f}")
        for t, lam in zip(b.tau, b.lam):
            tag = "" if np.isfinite(lam) else "   (no bound state)"
            print(f"  tau = {t:6.4f}   lambda = {lam:.8f}{tag}")
        for e in b.extrema:
            print(f"  {e.kind}: tau* = {e.tau:.5f}, lambda* = {e.lam:.8f}, {e.location.value}")
