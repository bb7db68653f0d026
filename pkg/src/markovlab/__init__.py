"""markovlab: homomorphism densities and measures on finite Markov spaces."""

__version__ = "0.1.0"

from .errors import BudgetError, MarkovLabError, ParseError, ValidationError
from .graphs import (Bigraph, Graph, LabeledTree, Tree, complete,
                     complete_bipartite, cube, cycle, elimination_order,
                     graph_to_edgelist, is_triangle_free, parse_graph, path,
                     search_order, star, star_decomposition)
from .spaces import (FiniteMarkovSpace, Partition, RefinementSequence,
                     SphereSpace, StepGraphon, complete_graph_space,
                     discretize_graphon, interval_partition, product_space,
                     project, quotient_space, random_partition, random_space,
                     space_from_json, space_from_matrix, space_to_float,
                     space_to_json, sphere_conditional_sample, step_graphon)
from .densities import (bigraph_density_via_s, check_family, density,
                        density_batch, finner_check, hom_measure, kp_norm,
                        marginal, normalized_density_finite_graph, s_table)
from .seqmeasure import (k22_order_experiment, order_independence_report,
                         sequential_star_measure, sphere_sequential_sample,
                         tree_distribution)
from .spectral import (convolution_eigenvalue, convolution_report,
                       cycle_density_spectral, eigenvalue_lower_bound,
                       jacobi_eigenvalues, projected_spectrum_check,
                       schatten_norm, spectrum)
from .experiments import (ExperimentConfig, config_from_json, list_experiments,
                          regenerate_expectations, run_experiment,
                          write_artifacts)

__all__ = [
    "__version__",
    # errors
    "MarkovLabError", "ValidationError", "ParseError", "BudgetError",
    # graphs
    "Graph", "Bigraph", "Tree", "LabeledTree", "parse_graph",
    "graph_to_edgelist", "elimination_order", "star_decomposition",
    "search_order", "is_triangle_free", "cycle", "path", "star", "complete",
    "complete_bipartite", "cube",
    # spaces
    "FiniteMarkovSpace", "StepGraphon", "Partition", "RefinementSequence",
    "SphereSpace", "space_from_matrix", "space_from_json", "space_to_json",
    "space_to_float", "step_graphon", "project", "quotient_space",
    "product_space", "interval_partition", "random_partition", "random_space",
    "complete_graph_space", "discretize_graphon", "sphere_conditional_sample",
    # densities
    "density", "density_batch", "normalized_density_finite_graph",
    "hom_measure", "marginal", "s_table", "kp_norm", "bigraph_density_via_s",
    "finner_check", "check_family",
    # sequential measures
    "sequential_star_measure", "tree_distribution",
    "order_independence_report", "sphere_sequential_sample",
    "k22_order_experiment",
    # spectral
    "spectrum", "jacobi_eigenvalues", "cycle_density_spectral",
    "schatten_norm", "projected_spectrum_check", "convolution_eigenvalue",
    "eigenvalue_lower_bound", "convolution_report",
    # experiments
    "ExperimentConfig", "config_from_json", "list_experiments",
    "run_experiment", "regenerate_expectations", "write_artifacts",
]
