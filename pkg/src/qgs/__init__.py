"""Eigenpairs, sampling-set certification and explicit spectral-inequality
constants on compact metric graphs."""

from .bounds import (BernsteinProfile, BoundReport, h_bound, heat_trace_bound,
                     observability_constant, spectral_bound, standard_range,
                     torsion_profile)
from .graphs import (BoundarySubspace, Edge, MetricGraph, build_graph,
                     diameter, dual_subspace, gauge_transform, graph_from_dict,
                     load_graph, metrics, standard_subspace, subdivide,
                     subspace_from_basis, vertex_conditions_subspace)
from .polytrig import (GraphFunction, IntervalUnion, PolyTrigTerm,
                       cosine_power_terms, differentiate, inner_product,
                       norm_sq, sup_on_disk_neighborhood)
from .sampling import (Cover, SamplingParams, SamplingSet, gap_analysis,
                       necessary_check, optimal_gamma, optimal_rho,
                       periodic_params, periodic_uniform_gamma, svc_set,
                       verify_cover)
from .spectral import (EigenPair, TorsionSolution, eigenvalues_up_to,
                       secular_matrix, solve_torsion, spectral_sample)
from .verify import (audit, boundary_trace_check, classify_edges, compare,
                     compare_derivative, derivative_ratio, kovrijkine_check,
                     lasso_counterexample, local_estimate_check, mass_ratio,
                     observability_numeric, optimality_example)

__version__ = "0.1.0"
