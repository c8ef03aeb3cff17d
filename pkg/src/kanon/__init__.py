"""Smooth k-anonymization, suppression k-anonymity and randomized response for sparse binary matrices."""
from .anonymizer import AnonymizationReport, anonymize, smooth_round, smooth_round_with_given_clusters, suppress_round
from .clustering import Clustering, FacilityConfig, solve_facility_location
from .dp import DpParams, jaccard_upper_bound, min_epsilon_for_jaccard, randomized_response
from .matrix import (DiffStats, SparseBinaryMatrix, diff_stats, equivalence_classes, jaccard,
                     verify_k_anonymous, verify_smooth_k_anonymous)
from .sbm import SbmParams, sbm_generate
from .shard import ShardConfig, sharded_anonymize

__version__ = "0.1.0"
