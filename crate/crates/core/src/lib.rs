//! Canonical vertex labels for sparse random graphs and randomly perturbed
//! deterministic graphs.
//!
//! Vertices are colored by degree mod m; each vertex is then labeled by the
//! multiset of its neighbors' color count lists. The crate also carries the
//! depth-2 baseline, color refinement, an isomorphism matcher with exact
//! oracles, 2-neighborhood collision search, the perturbed-graph model, and a
//! seeded experiment harness.
//!
//! ```
//! use graphcanon::{all_signatures, generate_er, uniqueness_report, Depth, RngSeed};
//!
//! let g = generate_er(2000, 0.01, RngSeed::new(1, 0)).unwrap();
//! let labels = all_signatures(&g, Depth::Three, Some(8)).unwrap();
//! let report = uniqueness_report(&labels);
//! println!("all unique: {}", report.all_unique);
//! ```

pub mod coloring;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod isomorph;
pub mod neighborhoods;
pub mod numerics;
pub mod refinement;
pub mod signatures;
pub mod smoothed;

pub use coloring::{
    choose_m, color_count_list, epsilon_star_solve, mod_color_classes, ColorAssignment,
    ColorCountList, ModulusChoice, Regime,
};
pub use error::{Error, Result};
pub use experiments::{
    bench_scaling, read_csv, run_grid, write_csv, BenchRow, BenchTarget, Density,
    ExperimentConfig, GridOutput, TrialKind, TrialRecord,
};
pub use graph::{
    generate_er, neighborhood, permute, random_permutation, read_edge_list, union_graph,
    write_edge_list, xor_graph, Graph, RngSeed, RootedSubgraph,
};
pub use isomorph::{
    brute_force_isomorphic, match_by_signatures, verify_isomorphism, MatchOutcome, MatchResult,
    Witness,
};
pub use neighborhoods::{
    ahu_code, classify_good, count_degree_profiles, find_2nbr_collisions, CollisionReport,
    GoodVertexPartition,
};
pub use numerics::{binomial_pmf, check_pmf_bound, PmfCheck};
pub use refinement::{canonical_label, refine, CanonicalLabeling, StableColoring};
pub use signatures::{
    all_signatures, depth2_signature, depth3_signature, uniqueness_report, DegreeProfile, Depth,
    LabelTable, Signature, UniquenessReport,
};
pub use smoothed::{in_class, perturb, smoothed_trial, BaseGraph, PerturbMode, SmoothedConfig};
