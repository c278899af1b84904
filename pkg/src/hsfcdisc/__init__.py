"""Hilbert-curve stratified sampling and star-discrepancy analysis."""

from .bounds import (bound_report, c_dq, a_dqn, cover_cardinality_bound, hsfc_bound,
                     kh_error_bound, mc_bound_aistleitner, mc_bound_gnewuch,
                     weighted_bound_rhs)
from .discrepancy import (BudgetExceeded, ConvexRegion, DiscrepancyEstimate, WeightSpec,
                          build_delta_cover, expected_discrepancy, restricted_discrepancy,
                          star_discrepancy_cover, star_discrepancy_exact,
                          weighted_star_discrepancy)
from .hilbert import HilbertCell, HilbertIndex, decode, diameter_bound, encode, point_from_unit
from .sampler import (RngStream, SampleSet, ThetaPartitionSpec, hsfc_stratified, jittered,
                      latin_hypercube, monte_carlo, scramble_owen, theta_partition_sample,
                      van_der_corput)

__version__ = "0.1.0"
