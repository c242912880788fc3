//! Regularized multi-task learning with relatedness-aware generalization
//! bounds.
//!
//! The crate covers the full pipeline: synthetic task families, constrained
//! joint hypothesis classes, a projected-gradient solver, Monte-Carlo
//! estimators of task dependence, empirical covering numbers, the bound
//! quantities built from them, and checkers that test the underlying
//! probability inequalities by simulation or exact enumeration.

pub mod bounds;
pub mod complexity;
pub mod error;
pub mod estimate;
pub mod group;
pub mod hypothesis;
pub mod pipeline;
pub mod relatedness;
pub mod rmtl;
pub mod seed;
pub mod task;
pub mod verify;

pub use bounds::{
    evaluate as evaluate_bounds, BoundInputs, BoundReport, Condition, GroupTable, PairTable, Quantity, Thm3Inputs,
};
pub use complexity::{
    covering_number, cpuen, uen, CoverMethod, CoverResult, CpuenResult, EmpiricalMetricTable, UenResult,
};
pub use error::{Error, Result};
pub use group::{group_masks, GroupIndex, MAX_ENUMERATED_TASKS};
pub use hypothesis::{
    project_group, project_to_class, sample_class, CandidateSet, ConstrainedClass, Coupling, GroupProjection,
    HypothesisVector, Provenance,
};
pub use task::{
    empirical_risk, expected_risk, generate_tasks, LossSpec, MultiTaskDataset, SyntheticFamily, TaskFamily, TaskInput,
    TaskSamples, TaskSource, TaskSpec,
};
pub use rmtl::{least_squares, solve_rmtl, SolveResult, SolverConfig};
pub use estimate::McEstimate;
pub use relatedness::{
    cluster_tasks, estimate_cov, estimate_eddm, estimate_oddm, exact_oddm, expected_risk_table, small_prob_factor, Clustering,
    CovEstimate, DependenceEstimate, EddmConfig, RiskTable,
};
pub use verify::{
    mc_joint_sup_prob, verify_simplex_deviation, verify_small_deviation, verify_symmetrization, verify_theorem_bounds,
    verify_vector_chebyshev, verify_vector_deviation, ChebyshevVariant, CheckStatus, DiscreteVectorDistribution,
    DominanceVerdict, JointSupEstimate, Method, Theorem, TheoremCheck, verify_vector_deviation_with, sup_discrepancies,
};
pub use pipeline::{estimate_bound_inputs, estimate_clustered, EstimationSettings, Estimates, GroupDetail, PairDetail};
