"""Simulation and analysis lab for de-anonymizing correlated block-model graphs."""

from .graphs import (
    Block,
    CommunityGraph,
    ModelParams,
    block_of,
    block_pair_count,
    generate_sbm,
    graph_from_json,
    graph_to_json,
    params_from_json,
    params_to_json,
    validate_params,
)
from .sampling import (
    DeanonInstance,
    Matching,
    apply_matching,
    instance_from_json,
    instance_to_json,
    make_instance,
    matching_from_json,
    matching_to_json,
    random_matching,
    sample_edges,
)
from .cost import (
    CostBreakdown,
    MapEquivalenceReport,
    PosteriorScore,
    WeightTable,
    brute_force_posterior,
    enumerate_matchings,
    map_equivalence_check,
    matching_cost,
    matching_count,
    mismatch_weights,
    posterior_score,
    union_graph,
    unit_weights,
)
from .matching import (
    MatchResult,
    SuccessReport,
    exact_match,
    local_search_match,
    score_success,
)
from .theory import (
    CommunityThreshold,
    MismatchPairs,
    PairPartition,
    StepProbs,
    TailEstimate,
    ThresholdReport,
    UnionBoundTable,
    chernoff_tail_bound,
    empirical_tail,
    find_automorphisms,
    mismatch_pair_sets,
    partition_pairs,
    score_step_probs,
    threshold_report,
    union_bound_table,
)
from .experiments import (
    Cell,
    CellSummary,
    CompareRow,
    ExperimentConfig,
    ExperimentResult,
    PhaseCurve,
    PhaseMarker,
    PhasePoint,
    TrialRecord,
    compare_costs,
    expand_cells,
    phase_curve,
    run_experiment,
    trial_seed,
    wilson_interval,
    write_cells_csv,
    write_compare_csv,
    write_phase_csv,
    write_trials_csv,
)

__version__ = "0.1.0"
