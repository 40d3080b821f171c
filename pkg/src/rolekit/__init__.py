"""Role extraction for directed graphs via low-rank similarity factors."""

from .clustering import (ClusterModel, ClusterValidation, DegenerateDataError,
                         cluster_validated, kmeans, kmeans_pp_init,
                         normalize_rows, validate)
from .graph import (BenchmarkSpec, DirectedGraph, EdgeListParseError,
                    ReducedGraph, RolePartition, degrees, extract_reduced,
                    generate_planted, load_edge_list, load_partition, permute,
                    save_edge_list, save_partition)
from .kestimate import (EstimateConfig, KEstimateResult, hierarchical_estimate,
                        k_moving, svd_estimate)
from .metrics import contingency, entropy, joint_entropy, mutual_information, nmi
from .similarity import (DivergenceError, SimilarityConfig, SimilarityFactor,
                         SpectralGapError, beta_estimate, browet_factor,
                         dense_oracle, gamma_apply, initial_factor,
                         salton_factor)

__version__ = "0.1.0"
