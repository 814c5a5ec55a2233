"""First passage percolation on Z^d with independent, non-identically distributed weights."""

from .geodesic import GeodesicResult, PassageQuery, Truncation, certify_global, passage_time, shortest_passage, tie_break
from .lattice import EdgeRef, LatticeBox, LatticePath, axis_edge, detour_paths
from .weights import (Exponential, FixedWeights, Pareto, PointMass, Realization, TwoPoint, Uniform,
                      WeightModel, laplace_transform, sample_weight, small_ball, truncate_weight)

__version__ = "0.1.0"
