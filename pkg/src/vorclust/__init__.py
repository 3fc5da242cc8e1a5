"""Balanced clustering through generalized Voronoi diagrams.

Partition a weighted planar point set (optionally carrying an adjacency
graph) into clusters of prescribed total weight, with the assignment
supported by a power, additively weighted, anisotropic, or shortest-path
diagram; includes exact transportation solves with dual prices, rounding
with a-priori balance bounds, site optimization, evaluation metrics, and an
interactive pin-and-resolve HTTP service.
"""

from .config import DEFAULT_TOLS, Tolerances
from .distance import (
    Affine,
    DistanceModel,
    Ellipsoidal,
    Euclidean,
    GraphMetric,
    Identity,
    Square,
    cost_matrix,
    ellipsoidal_norm,
    estimate_anisotropy,
    eval_f,
    shortest_path_dag,
    shortest_paths,
    uniform_model,
)
from .diagram import (
    Cells,
    DiagramReport,
    PowerCellPolygons,
    check_centroidal,
    check_star_shaped,
    compute_cells,
    power_cells_2d,
    verify,
)
from .evaluate import EvaluationSummary, changed_pairs, moment_of_inertia, summarize
from .io import load_instance, load_instance_document
from .model import (
    AdjacencyGraph,
    BalanceReport,
    FractionalClustering,
    Instance,
    Unit,
    build_instance,
    check_balance,
    cluster_weights,
    integer_clustering,
    validate_instance,
)
from .pipeline import APPROACHES, PipelineOptions, run_pipeline
from .rounding import (
    ConnectivityBlockedError,
    NotExtremalError,
    RoundingOutcome,
    reduce_to_vertex,
    round_connected,
    round_tree,
)
from .siteopt import (
    KMeansTrace,
    LocalSearchConfig,
    balanced_kmeans,
    compute_phi,
    kmeanspp_sites,
    local_search_sites,
    multistart_balanced_kmeans,
)
from .solver import (
    Duals,
    InfeasibleError,
    SolveResult,
    TransportProblem,
    brute_force_oracle,
    perturb_sites,
    relative_interior_solution,
    solve,
)

__version__ = "0.1.0"
