"""Band structure of periodic waveguides whose cells are coupled through small windows.

Finite-difference fibre operators, shift-invert eigensolves below the
threshold of the essential spectrum, virtual-level detection for the
decoupled cell, and the small-window asymptotic formulas built on it.
"""
from .asymptotics import (AsymptoticCoefficients, BandPrediction, BoundaryFunctionals, band_edges,
                          boundary_functionals, coefficients, inner_field_phi1, mu_value,
                          predict_lambda)
from .bands import (BandFunction, LocationClass, ScalingFit, SolverConfig, adjudicate_asymptotics,
                    fiber_eigs, interior_extremum_scan, resolvent_convergence_study, sweep)
from .eigensolver import (EigenResult, NoBoundStateError, SolverError, below_threshold_eigs,
                          resolve, shift_invert_eigs, sobolev_norm, threshold_eigs_fixed_point)
from .geometry import (CellGeometry, GeometryError, Grid, NodeKind, NodeSet, Slab, build_cell,
                       classify_nodes, make_grid, straight_strip)
from .operators import (BoundaryCondition, BCKind, DiscreteOperator, ModeDecayRates,
                        PotentialSpec, apply_mode_matched_bc, assemble_decoupled, assemble_fiber,
                        discrete_threshold, gaussian_bump, table_potential, zero_potential)
from .threshold import (ResonanceData, ResonanceSolution, SignConvention, detect_virtual_levels,
                        extract_resonance_data, rotate_pair, solve_threshold)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
