pub mod bitset;
pub mod bounds;
pub mod cell;
pub mod cluster;
pub mod common;
pub mod error;
pub mod forest;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod newick;
pub mod oracle;
pub mod pipeline;
pub mod solver;
pub mod tbr;
pub mod tree;

pub use bounds::{
    dmp_lower_bound, dmp_lower_bound_shared, fitch_score, greedy_upper_bound, sample_convex_character, BoundBudget,
    BoundReport, Character, ConvexCharacterSampler,
};
pub use cell::LowerBoundCell;
pub use cluster::{find_common_cluster, ClusterSplit};
pub use common::{find_common_chains, find_common_pendant_subtrees, ChainDescriptor};
pub use error::*;
pub use forest::{extract_forest, forest_to_cut_set, validate_forest, AgreementForest, ForestViolation, Validation};
pub use harness::{
    analyze_pair, compute_stats, generate_pair, pair_seed, read_rows, run_experiment, ExperimentConfig, PairId,
    PairManifest, Remaining, StageTimes, StatRow, Summary, ThetaSource, SCHEMA_VERSION,
};
pub use kernel::{apply_reduction, kernelize, KernelResult, ReductionStep, Ruleset};
pub use model::{build_model, conflicting_quartets, export_lp, select_preserved_chains, HittingSetModel};
pub use newick::{parse_newick, parse_newick_lines, write_newick};
pub use oracle::{brute_force_tbr, tbr_distance_by_search, OracleResult};
pub use pipeline::{solve_with_clusters, tbr_distance, tbr_distance_report, DistanceReport, SolveOptions};
pub use solver::{solve_exact, solve_model, ProofStatus, SolveBudget, SolveResult};
pub use tbr::{random_tbr_walk, random_tree, Attachment};
pub use tree::{PhyloTree, Quartet, Taxon};
