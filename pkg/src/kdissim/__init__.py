"""Exact k-dissimilarity maps of weighted phylogenetic trees."""

from .conditions import (
    A_INVERSE,
    A_MATRIX,
    ConditionReport,
    ConsistencyError,
    Violation,
    consistency_check,
    delta_by_formula,
    delta_from_5subset,
    delta_global,
    four_point_check,
    six_point_equidistant_check,
    six_point_treelike_check,
    ultrametric_check,
)
from .fit import (
    DecisionReport,
    ReconstructionError,
    decide,
    enumerate_binary_topologies,
    feasibility_system,
    fit_subset,
    reconstruct_from_delta,
    steiner_incidence,
)
from .kdiss import (
    KDissError,
    KDissimilarity,
    counterexample_equidistant,
    counterexample_treelike,
    default_counterexample_tree,
    format_kdiss,
    from_tree,
    parse_kdiss,
    read_kdiss,
    restrict_map,
    write_kdiss,
)
from .lp import FeasibilitySystem, lp_feasible, lp_maximize
from .newick import NewickError, parse_newick, read_newick, save_newick, write_newick
from .tree import (
    Tree,
    TreeError,
    apply_alpha_surgery,
    canonicalize,
    height,
    is_equidistant_weighting,
    is_generic,
    isomorphic,
    lift_and_unroot,
    path_distance,
    random_tree,
    restrict,
    steiner_weight,
)
from .triplets import (
    Triplet,
    TripletError,
    TripletSystem,
    build_tree,
    check_R1_R2,
    extract,
    topology_from_kdiss,
)

__version__ = "0.1.0"
