//! Stochastic multi-armed bandits with control variates.
//!
//! Each arm pull returns a reward together with a correlated side observation
//! (the control variate) whose mean the learner already knows. Regressing the
//! reward on the CV shrinks the mean estimator's variance and tightens the
//! confidence bounds driving a UCB policy, which is the point of the whole
//! exercise: the `cv` module builds those estimators, `policy` turns them into
//! arm-selection rules, `env` and `harness` run seeded experiments, and
//! `report`/`cli` persist the results.

pub mod cli;
pub mod config;
pub mod cv;
pub mod env;
pub mod error;
pub mod harness;
pub mod policy;
pub mod report;
pub mod rng;
pub mod sample;
pub mod special;

pub use config::{InstanceSpec, PolicyConfig, RunConfig};
pub use cv::{
    batch_estimate, cv_mean_estimate, cv_variance_estimate, direct_estimate,
    estimate_beta_multi, estimate_beta_single, estimate_beta_single_known_var,
    jackknife_estimate, optimal_beta, split_estimate, CvEstimate, CvStats, ResampleMethod,
    ResampledEstimate,
};
pub use env::{make_instance, ArmModel, Family, Instance};
pub use error::{Error, Result};
pub use harness::{
    correlation_sweep, default_checkpoints, epsilon_sweep, run_episode, run_experiment,
    CorrelationSweepRow, EpisodeTrace, EpsilonSweepRow, ExperimentResult, PolicySpec,
};
pub use policy::{
    thompson_gaussian_sample, ucb1_index, ucb_cv_index, ucbv_index, CvVariant, PolicyKind,
    PolicyParams, PolicyState,
};
pub use rng::RngStream;
pub use sample::{sample_gamma, sample_lognormal, sample_normal};
pub use special::{
    normal_quantile, quantile_bound_table, reg_inc_beta, t_cdf, t_quantile, QuantileBoundRow,
};
