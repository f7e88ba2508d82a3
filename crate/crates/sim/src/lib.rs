//! Simulated learners for checking that adaptive sequencing pays off.
//!
//! Each learner has a hidden true style. Studying a variant of that style
//! raises the chance of answering correctly by the learner's sensitivity.
//! The same population is run under several variant policies and the paired
//! post-test gains are compared.

pub mod experiment;
pub mod learner;
pub mod stats;

pub use experiment::{
    Comparison, Course, ExperimentConfig, ExperimentReport, LearnerRun, Policy, PolicySummary,
    SimError, run_experiment, run_learner,
};
pub use learner::{PopulationSpec, SimLearner, difficulty_penalty};
pub use stats::PairedDifference;
