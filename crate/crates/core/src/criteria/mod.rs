//! Numerical evaluation of the explosion criteria and the phase
//! classification for linear fitness.
//!
//! Every verdict here is evidence produced by a documented decision rule on
//! finite data, never a proof. The rule in force is written into each report.

mod condensation;
mod linear;
mod report;
mod summability;

pub use condensation::{condensation_sum, CondensationSum};
pub use linear::{
    classify_phase, linear_moment_test, linear_tail_test, linear_tail_variable, ClassifyConfig, MomentConfig,
    MomentMethod, MomentOutcome, Phase, PhaseClassification, TruncationPoint,
};
pub use report::{CriterionReport, PointRow, PointStatus, TermRow, Verdict};
pub use summability::{summability_test, tail_criterion_test, tail_threshold, McConfig, TailGrid, MIN_SAMPLES};

/// `t in {2^-8, ..., 2^0}`: grid for conditions required at some `t > 0`.
pub fn some_t_grid() -> Vec<f64> {
    (0..=8).rev().map(|k| 2f64.powi(-k)).collect()
}

/// `t in {2^-8, ..., 2^-2}`: grid for conditions required for all small `t`.
pub fn small_t_grid() -> Vec<f64> {
    (2..=8).rev().map(|k| 2f64.powi(-k)).collect()
}

/// Default `epsilon'` bounding the small-`t` grid.
pub const DEFAULT_EPSILON_PRIME: f64 = 0.25;
