//! Multiobjective estimation-of-distribution algorithms on decomposable
//! bi-objective problems, with population-sizing tools.

pub mod cli;
pub mod engine;
pub mod error;
pub mod genome;
pub mod pareto;
pub mod problems;
pub mod replacement;
pub mod rng;
pub mod sizing;
pub mod variation;

pub use engine::{
    coverage, evaluate_population, niche_maintenance_probability, run, run_observed,
    AlgorithmConfig, GenerationReport, ReplacementScheme, RunResult,
};
pub use error::{Error, Result};
pub use genome::{hamming_distance, random_population, Genome, Individual, ObjectiveVector, Population};
pub use pareto::{
    binary_tournament, crowded_compare, crowding_distance, dominates, nondominated_sort,
    RankedPopulation,
};
pub use problems::{
    default_signal, niche_counts, pareto_oracle_bruteforce, ProblemKind, ProblemSpec,
    RepresentativeMode, RepresentativeSet,
};
pub use replacement::{elitist_replacement, rts_replace, RtsConfig, RtsOutcome, TiePolicy};
pub use rng::{derive_seed, RngStream};
pub use variation::{VariationConfig, VariationKind};
pub use sizing::{
    bisect_with, bisection_min_popsize, fit_scaling_exponent, max_competing_substructures,
    predict_eda_popsize, predict_niching_popsize, scalability_sweep, success_probability,
    BisectionConfig, SizingParams, SweepRecord,
};
