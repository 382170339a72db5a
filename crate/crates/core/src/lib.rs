//! Expected validation performance: how good is the best of `n` randomized
//! trials, estimated from the `B >= n` trials actually run.
//!
//! Three estimators are provided, one per way of counting size-`n` selections
//! from the pool ([`EstimatorKind`]): strings (`v`), combinations (`u`) and
//! multisets (`w`). On top of them sit full curves ([`curves`]), a synthetic
//! bias / variance / MSE study ([`simulation`]) and a model-comparison
//! sensitivity study ([`comparison`]).
//!
//! ```
//! use evp_core::{expected_max, EstimatorKind, ScorePool};
//!
//! let pool = ScorePool::new(vec![0.41, 0.39, 0.44, 0.40]).unwrap();
//! let best_of_two = expected_max(EstimatorKind::Strings, &pool, 2).unwrap();
//! assert!(best_of_two > pool.mean() && best_of_two <= pool.max());
//! ```

pub mod cli;
pub mod combinatorics;
pub mod comparison;
pub mod curves;
pub mod error;
pub mod estimators;
pub mod io;
pub mod par;
pub mod rng;
pub mod simulation;

pub use combinatorics::{cumulative_ratio, EstimatorKind};
pub use comparison::{
    comparison_report, determine_truth, incorrect_conclusion_rate, ComparisonConfig, ComparisonReport,
    ConclusionRate, Side, Truth, TruthSource,
};
pub use curves::{evp_curve, evp_curve_all, EvpCurve, EvpPoint};
pub use error::{EvpError, Result};
pub use estimators::{expected_max, variance_of_max, weight_vector, ScorePool, WeightTable, WeightVector};
pub use rng::RandomSource;
pub use simulation::{
    bias_variance_mse_report, build_bag_two_stage, estimator_sampling_moments, mc_true_evp,
    sample_truncated_normal, Sampling, SimulationConfig, SimulationReport, TruncatedNormal, ValueBag,
};
