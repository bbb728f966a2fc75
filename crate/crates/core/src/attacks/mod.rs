//! Attack and reduction experiments: the splitting attack on a commit-and-open
//! strawman, the NIZK derived from it, and the certified-deletion harness.

pub mod deletion;
pub mod strawman;

pub use deletion::{run_deletion_experiment, td_estimate, DeletionAdversary, DeletionExperiment, ZKind};
pub use strawman::{
    crs_split_attack, derived_prove, derived_verify, split_attack, strawman_cert, strawman_delete, strawman_prove, strawman_verify, SplitVerdicts,
    StrawmanParams, StrawmanProof,
};
