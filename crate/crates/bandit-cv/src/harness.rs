//! Episode and experiment execution.
//!
//! One repetition owns one `RngStream` (stream id = repetition index). Within
//! a repetition every policy sees the same per-arm environment substreams, so
//! the j-th pull of arm i yields the same (reward, CV) pair for every policy
//! (common random numbers); policy-owned randomness comes from a separate
//! substream keyed by the policy id so list order does not matter.
//! Repetitions run in parallel; aggregation always reduces in repetition
//! order, so results are bit-reproducible regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::Instance;
use crate::error::{Error, Result};
use crate::policy::{PolicyKind, PolicyParams, PolicyState};
use crate::rng::RngStream;

/// A policy selection plus its tunables, as named in configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub params: PolicyParams,
}

impl PolicySpec {
    pub fn parse(id: &str) -> Result<Self> {
        Ok(Self { kind: PolicyKind::parse(id)?, params: PolicyParams::default() })
    }

    pub fn id(&self) -> String {
        self.kind.id()
    }
}

/// Everything one policy-vs-instance episode produced.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub horizon: usize,
    pub chosen_arms: Vec<usize>,
    /// Δ of the chosen arm per round (pseudo-regret increments).
    pub regret_increments: Vec<f64>,
    pub cumulative_regret: Vec<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

/// Aggregated mean cumulative regret with a 95% normal-approximation band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub policy: String,
    pub instance: String,
    pub repetitions: usize,
    pub base_seed: u64,
    pub checkpoints: Vec<usize>,
    pub mean_regret: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
}

impl ExperimentResult {
    pub fn final_mean(&self) -> f64 {
        *self.mean_regret.last().expect("at least one checkpoint")
    }

    pub fn final_ci(&self) -> f64 {
        *self.ci_halfwidth.last().expect("at least one checkpoint")
    }

    /// Mean regret at a specific checkpoint round.
    pub fn mean_at(&self, round: usize) -> Option<f64> {
        self.checkpoints.iter().position(|&c| c == round).map(|i| self.mean_regret[i])
    }
}

const POLICY_STREAM_FLAG: u64 = 1 << 63;

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Runs one select/pull/update episode. Regret increments use the true gaps
/// (pseudo-regret), not realized rewards.
pub fn run_episode(
    instance: &Instance,
    spec: &PolicySpec,
    horizon: usize,
    rep_stream: RngStream,
) -> Result<EpisodeTrace> {
    let k = instance.k();
    let cv_means: Vec<Vec<f64>> =
        instance.declared_cv_means().iter().map(|&m| vec![m]).collect();
    let policy_stream = rep_stream.substream(POLICY_STREAM_FLAG | fnv1a(&spec.id()));
    let mut policy = PolicyState::new(
        spec.kind,
        spec.params,
        cv_means,
        instance.optimal_arm(),
        policy_stream,
    )?;
    if horizon < policy.init_pulls() * k {
        return Err(Error::Config(format!(
            "horizon {horizon} is shorter than the initialization phase {} x {k}",
            policy.init_pulls()
        )));
    }

    // One environment substream per arm, shared by every policy in this
    // repetition: pull j of arm i is identical across policies.
    let mut arm_streams: Vec<RngStream> = (0..k).map(|i| rep_stream.substream(i as u64)).collect();
    let gaps = instance.gaps();

    let mut chosen_arms = Vec::with_capacity(horizon);
    let mut regret_increments = Vec::with_capacity(horizon);
    let mut cumulative_regret = Vec::with_capacity(horizon);
    let mut cum = 0.0;
    for _ in 0..horizon {
        let arm = policy.select_arm()?;
        let (x, w) = instance.pull(arm, &mut arm_streams[arm]);
        policy.update(arm, x, &[w])?;
        chosen_arms.push(arm);
        regret_increments.push(gaps[arm]);
        cum += gaps[arm];
        cumulative_regret.push(cum);
    }
    Ok(EpisodeTrace {
        horizon,
        chosen_arms,
        regret_increments,
        cumulative_regret,
        seed: rep_stream.seed(),
        stream_id: rep_stream.stream_id(),
    })
}

/// 100 evenly spaced checkpoint rounds ending at the horizon.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    crate::config::spaced_checkpoints(horizon, 100)
}

fn validate_checkpoints(checkpoints: &[usize], horizon: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Config("at least one checkpoint is required".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    let last = *checkpoints.last().unwrap();
    if checkpoints[0] < 1 || last > horizon {
        return Err(Error::Config(format!(
            "checkpoints must lie in 1..={horizon}, got {checkpoints:?}"
        )));
    }
    Ok(())
}

/// Runs R repetitions of every policy on the instance and aggregates the
/// cumulative regret at the checkpoints. Repetition r uses stream id r.
pub fn run_experiment(
    instance: &Instance,
    specs: &[PolicySpec],
    horizon: usize,
    repetitions: usize,
    base_seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<ExperimentResult>> {
    if repetitions < 2 {
        return Err(Error::Config(format!("need at least 2 repetitions, got {repetitions}")));
    }
    validate_checkpoints(checkpoints, horizon)?;
    instance.validate()?;

    let mut results = Vec::with_capacity(specs.len());
    for spec in specs {
        // Parallel across repetitions; the collect keeps repetition order.
        let per_rep: Vec<Vec<f64>> = (0..repetitions)
            .into_par_iter()
            .map(|r| {
                let rep_stream = RngStream::new(base_seed, r as u64);
                let trace = run_episode(instance, spec, horizon, rep_stream)?;
                Ok(checkpoints.iter().map(|&c| trace.cumulative_regret[c - 1]).collect())
            })
            .collect::<Result<_>>()?;

        let rf = repetitions as f64;
        let mut mean_regret = Vec::with_capacity(checkpoints.len());
        let mut ci_halfwidth = Vec::with_capacity(checkpoints.len());
        for ci in 0..checkpoints.len() {
            let mean = per_rep.iter().map(|rep| rep[ci]).sum::<f64>() / rf;
            let var = per_rep.iter().map(|rep| (rep[ci] - mean) * (rep[ci] - mean)).sum::<f64>()
                / (rf - 1.0);
            mean_regret.push(mean);
            ci_halfwidth.push(1.96 * (var / rf).sqrt());
        }
        results.push(ExperimentResult {
            policy: spec.id(),
            instance: instance.name.clone(),
            repetitions,
            base_seed,
            checkpoints: checkpoints.to_vec(),
            mean_regret,
            ci_halfwidth,
        });
    }
    Ok(results)
}

/// One row of the correlation sweep: the var_v knob, the correlation it
/// implies, and the aggregated result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSweepRow {
    pub var_v: f64,
    pub rho: f64,
    pub result: ExperimentResult,
}

/// Reruns the experiment with var_v set to each value on every arm of the
/// base instance, tagging each result with the implied correlation.
pub fn correlation_sweep(
    base: &Instance,
    var_v_values: &[f64],
    spec: &PolicySpec,
    horizon: usize,
    repetitions: usize,
    base_seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<CorrelationSweepRow>> {
    let mut rows = Vec::with_capacity(var_v_values.len());
    for &var_v in var_v_values {
        if !(var_v >= 0.0) {
            return Err(Error::Config(format!("var_v must be >= 0, got {var_v}")));
        }
        let mut inst = base.with_var_v(var_v);
        inst.name = format!("{}:var_v={var_v}", base.name);
        let rho = inst.arms[0].correlation();
        let result = run_experiment(
            &inst,
            std::slice::from_ref(spec),
            horizon,
            repetitions,
            base_seed,
            checkpoints,
        )?
        .pop()
        .expect("one policy in, one result out");
        rows.push(CorrelationSweepRow { var_v, rho, result });
    }
    Ok(rows)
}

/// One row of the CV-mean approximation-error sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweepRow {
    pub epsilon: f64,
    pub results: Vec<ExperimentResult>,
}

/// Reruns the experiment with the learner-visible CV mean shifted by each ε.
/// The sampling distributions are untouched.
pub fn epsilon_sweep(
    base: &Instance,
    epsilon_values: &[f64],
    specs: &[PolicySpec],
    horizon: usize,
    repetitions: usize,
    base_seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<EpsilonSweepRow>> {
    let mut rows = Vec::with_capacity(epsilon_values.len());
    for &eps in epsilon_values {
        let mut inst = base.with_epsilon(eps);
        inst.name = format!("{}:eps={eps}", base.name);
        let results =
            run_experiment(&inst, specs, horizon, repetitions, base_seed, checkpoints)?;
        rows.push(EpsilonSweepRow { epsilon: eps, results });
    }
    Ok(rows)
}
