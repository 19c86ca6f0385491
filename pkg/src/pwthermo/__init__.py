"""Finite-depth thermodynamic quantities and transfer-operator bounds for
piecewise expanding maps."""

from .errors import (ConfigError, DepthExplosion, EmptyCylinder, InvalidMap, NoConvergence,
                     NoMeasures, NoPiece, NotMarkov, ParameterOutOfRange, PwThermoError,
                     UnsupportedGeometry, WordMismatch)
from .maps import (BOUNDARY, AffineBranch, Box, Piece, PiecewiseMap, SmoothBranch, Weight,
                   birkhoff_weight, evaluate_map, expansion_data, load_map, product_map,
                   smallest_expansion)
from .potential import PotentialSpec
from .cylinders import (BoundarySet, Cylinder, boundary_set, cylinder_inf, cylinder_of,
                        cylinder_sup, cylinders_meeting, enumerate_cylinders)
from .complexity import ComplexityProfile, complexity_beginning, complexity_end, complexity_profile
from .pressure import (PressureEstimate, SmallBoundaryVerdict, boundary_pressure, blocked_pressure,
                       level_sum, pressure_estimate, small_boundary_check, small_boundary_verdict,
                       trivial_sandwich)
from .varprinciple import (MeasureCandidate, VariationalReport, enumerate_periodic, measure_candidates,
                           optimize_markov, ruelle_check, variational_check)
from .bounds import (BoundReport, Bracket, compare_bounds, essential_bound, essential_bound_split,
                     ly_coefficient, one_dimensional_bound, relaxed_bounds, spectral_radius_lp_bound,
                     end_complexity_bound, variational_bound)
from .spectral import UlamOperator, assemble_ulam, dominant_spectrum, push_forward_indicator, spectral_gap_report

__version__ = "0.1.0"
