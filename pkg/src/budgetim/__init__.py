"""Budgeted influence maximization under the Independent Cascade model."""

from .dag import InfluenceDag, build_dag, build_dag1, build_dag2, node_ranks, write_dag
from .diffusion import LiveEdgeOracle, SpreadSample, exact_spread, mc_activation_probs, mc_sigma, mc_spread
from .estimate import ActivationEstimate
from .graph import (
    GraphFormatError,
    InfluenceGraph,
    ProbModel,
    assign_costs,
    assign_probabilities,
    load_costs,
    load_edge_list,
    load_graph,
    save_costs,
    save_edge_list,
)
from .region import (
    DEFAULT_THETA,
    MioaForest,
    MioaTree,
    PeerSeedsIndex,
    build_all_mioa,
    build_mioa,
    build_peer_seeds,
    path_prob,
)
from .experiments import ExperimentSpec, load_spec, run_sweep, write_sweep_csv
from .metrics import rmse
from .selection import (
    SelectionConfig,
    SelectionResult,
    SpreadEvaluator,
    delta,
    improved_greedy,
    naive_greedy,
    optimized_select,
    read_selection_csv,
    select,
    weighted_degree,
    write_selection_csv,
)
from .spread import LbpConfig, estimate_dag, exact_dag_marginals, lbp, spbp
from .synth import SynthConfig, fit_out_degree_slope, generate

__version__ = "0.1.0"
