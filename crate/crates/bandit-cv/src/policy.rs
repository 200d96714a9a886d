//! Arm-selection policies: the CV-adjusted UCB family (direct, jackknife,
//! splitting, batching) and the baselines UCB1, UCB-V, Gaussian Thompson
//! sampling, uniform random, and the gap oracle.
//!
//! Every policy plays round-robin for the first Q·K rounds, then selects the
//! arm maximizing its index. A CV-family arm whose estimator preconditions are
//! not yet met scores +∞, which forces further exploration of that arm.

use crate::cv::{
    batch_estimate, direct_estimate, jackknife_estimate, split_estimate, CvStats,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample::standard_normal;
use crate::special::t_quantile;

/// Which estimator backs the CV-adjusted UCB index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvVariant {
    Direct,
    Jackknife,
    Splitting,
    Batching { m: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    UcbCv(CvVariant),
    Ucb1,
    UcbV,
    Thompson,
    Uniform,
    Oracle,
}

impl PolicyKind {
    /// Parses the external string identifiers, e.g. "ucb-cv-batching:m=4".
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "ucb-cv" => Ok(Self::UcbCv(CvVariant::Direct)),
            "ucb-cv-jackknife" => Ok(Self::UcbCv(CvVariant::Jackknife)),
            "ucb-cv-splitting" => Ok(Self::UcbCv(CvVariant::Splitting)),
            "ucb1" => Ok(Self::Ucb1),
            "ucb-v" => Ok(Self::UcbV),
            "thompson" => Ok(Self::Thompson),
            "uniform" => Ok(Self::Uniform),
            "oracle" => Ok(Self::Oracle),
            other => {
                if let Some(rest) = other.strip_prefix("ucb-cv-batching:m=") {
                    let m: usize = rest.parse().map_err(|_| {
                        Error::Config(format!("bad batch size in policy id {other:?}"))
                    })?;
                    if m < 2 {
                        return Err(Error::Config(format!(
                            "batch size must be >= 2 in policy id {other:?}"
                        )));
                    }
                    Ok(Self::UcbCv(CvVariant::Batching { m }))
                } else {
                    Err(Error::Config(format!("unknown policy id {other:?}")))
                }
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::UcbCv(CvVariant::Direct) => "ucb-cv".into(),
            Self::UcbCv(CvVariant::Jackknife) => "ucb-cv-jackknife".into(),
            Self::UcbCv(CvVariant::Splitting) => "ucb-cv-splitting".into(),
            Self::UcbCv(CvVariant::Batching { m }) => format!("ucb-cv-batching:m={m}"),
            Self::Ucb1 => "ucb1".into(),
            Self::UcbV => "ucb-v".into(),
            Self::Thompson => "thompson".into(),
            Self::Uniform => "uniform".into(),
            Self::Oracle => "oracle".into(),
        }
    }

    /// Default initialization pulls per arm for q control variates. Chosen so
    /// the estimator's degrees of freedom are positive at the first index
    /// computation (batching reaches validity through forced exploration).
    pub fn default_init_pulls(&self, q: usize) -> usize {
        match self {
            Self::UcbCv(CvVariant::Direct) => q + 2,
            Self::UcbCv(CvVariant::Jackknife) | Self::UcbCv(CvVariant::Splitting) => q + 3,
            Self::UcbCv(CvVariant::Batching { m }) => m * q - q + 1,
            Self::Ucb1 | Self::Thompson => 1,
            Self::UcbV => 2,
            Self::Uniform | Self::Oracle => 0,
        }
    }
}

/// Per-policy tunables beyond the kind itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyParams {
    /// Exploration exponent; the index confidence level is 1 − 1/t^alpha.
    pub alpha: f64,
    /// Range scale b for the UCB1/UCB-V bonuses.
    pub scale: f64,
    /// Override for the initialization pulls per arm.
    pub init_pulls: Option<usize>,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self { alpha: 2.0, scale: 1.0, init_pulls: None }
    }
}

/// CV-adjusted UCB index: estimator mean + V_{t,s}·√ν̂, where V is the
/// t-distribution percentile at 1 − 1/t^alpha with the variant's degrees of
/// freedom. Returns +∞ while the estimator's sample precondition is unmet
/// (the forced-exploration signal).
pub fn ucb_cv_index(stats: &CvStats, t: usize, alpha: f64, variant: CvVariant) -> Result<f64> {
    let est = match variant {
        CvVariant::Direct => direct_estimate(stats).map(|e| (e.mean, e.variance_of_mean, e.dof)),
        CvVariant::Jackknife => {
            jackknife_estimate(stats).map(|e| (e.mean, e.variance_of_mean, e.dof))
        }
        CvVariant::Splitting => split_estimate(stats).map(|e| (e.mean, e.variance_of_mean, e.dof)),
        CvVariant::Batching { m } => {
            batch_estimate(stats, m).map(|e| (e.mean, e.variance_of_mean, e.dof))
        }
    };
    match est {
        Ok((mean, var, dof)) => index_from_estimate(mean, var, dof, t, alpha),
        Err(Error::InsufficientSamples { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn index_from_estimate(mean: f64, var: f64, dof: usize, t: usize, alpha: f64) -> Result<f64> {
    let t = t.max(2) as f64;
    let p = 1.0 - t.powf(-alpha);
    let v = t_quantile(p, dof as u64)?;
    Ok(mean + v * var.sqrt())
}

/// UCB1 index with a range scale: mean + b·√(2·ln t / n).
pub fn ucb1_index(mean: f64, n: usize, t: f64, scale: f64) -> f64 {
    assert!(n >= 1 && t >= 1.0, "ucb1_index requires n >= 1 and t >= 1");
    mean + scale * (2.0 * t.ln() / n as f64).sqrt()
}

/// UCB-V index (ζ = 1): mean + √(2·var̂·ln t / n) + 3·b·ln t / n.
pub fn ucbv_index(mean: f64, var_hat: f64, n: usize, t: f64, scale: f64) -> f64 {
    assert!(n >= 2, "ucbv_index requires n >= 2");
    let ln_t = t.ln();
    let nf = n as f64;
    mean + (2.0 * var_hat * ln_t / nf).sqrt() + 3.0 * scale * ln_t / nf
}

/// One draw from the Gaussian Thompson posterior N(mean, 1/(n+1)).
pub fn thompson_gaussian_sample(mean: f64, n: usize, rng: &mut RngStream) -> f64 {
    mean + standard_normal(rng) / ((n + 1) as f64).sqrt()
}

/// Cached per-arm estimate; recomputed only when the arm gains a sample.
#[derive(Clone, Debug, PartialEq)]
enum ArmEstimate {
    Stale,
    Insufficient,
    Ready { mean: f64, var: f64, dof: usize },
}

#[derive(Clone, Debug, PartialEq)]
struct ArmState {
    stats: CvStats,
    // Welford accumulators for the baseline indices.
    mean: f64,
    m2: f64,
    cache_len: usize,
    cache: ArmEstimate,
}

impl ArmState {
    fn new(cv_means: Vec<f64>) -> Self {
        Self {
            stats: CvStats::new(cv_means),
            mean: 0.0,
            m2: 0.0,
            cache_len: usize::MAX,
            cache: ArmEstimate::Stale,
        }
    }

    fn n(&self) -> usize {
        self.stats.len()
    }

    /// Empirical (biased, 1/n) reward variance, as UCB-V uses.
    fn var_hat(&self) -> f64 {
        (self.m2 / self.n() as f64).max(0.0)
    }
}

/// Full policy state over K arms.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    kind: PolicyKind,
    params: PolicyParams,
    init_pulls: usize,
    oracle_arm: usize,
    t: usize,
    arms: Vec<ArmState>,
    rng: RngStream,
}

impl PolicyState {
    /// `cv_means[i]` is the declared CV mean vector ω for arm i (length q).
    /// `oracle_arm` is only consulted by the oracle policy. `rng` feeds the
    /// randomized policies (Thompson, uniform).
    pub fn new(
        kind: PolicyKind,
        params: PolicyParams,
        cv_means: Vec<Vec<f64>>,
        oracle_arm: usize,
        rng: RngStream,
    ) -> Result<Self> {
        if cv_means.is_empty() {
            return Err(Error::Config("policy needs at least one arm".into()));
        }
        let q = cv_means[0].len();
        if q == 0 || cv_means.iter().any(|m| m.len() != q) {
            return Err(Error::Config("every arm must declare the same number of CV means".into()));
        }
        if !(params.alpha > 1.0) {
            return Err(Error::Config(format!("alpha must be > 1, got {}", params.alpha)));
        }
        if oracle_arm >= cv_means.len() {
            return Err(Error::Config("oracle arm out of range".into()));
        }
        let init_pulls = params.init_pulls.unwrap_or_else(|| kind.default_init_pulls(q));
        Ok(Self {
            kind,
            params,
            init_pulls,
            oracle_arm,
            t: 0,
            arms: cv_means.into_iter().map(ArmState::new).collect(),
            rng,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    /// Completed rounds.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Initialization pulls per arm (Q).
    pub fn init_pulls(&self) -> usize {
        self.init_pulls
    }

    pub fn pulls(&self, arm: usize) -> usize {
        self.arms[arm].n()
    }

    pub fn arm_stats(&self, arm: usize) -> &CvStats {
        &self.arms[arm].stats
    }

    fn in_init_phase(&self) -> bool {
        self.t < self.init_pulls * self.k()
    }

    fn refresh_cache(&mut self, arm: usize) -> Result<()> {
        let variant = match self.kind {
            PolicyKind::UcbCv(v) => v,
            _ => return Ok(()),
        };
        let state = &mut self.arms[arm];
        if state.cache_len == state.n() {
            return Ok(());
        }
        let est = match variant {
            CvVariant::Direct => {
                direct_estimate(&state.stats).map(|e| (e.mean, e.variance_of_mean, e.dof))
            }
            CvVariant::Jackknife => {
                jackknife_estimate(&state.stats).map(|e| (e.mean, e.variance_of_mean, e.dof))
            }
            CvVariant::Splitting => {
                split_estimate(&state.stats).map(|e| (e.mean, e.variance_of_mean, e.dof))
            }
            CvVariant::Batching { m } => {
                batch_estimate(&state.stats, m).map(|e| (e.mean, e.variance_of_mean, e.dof))
            }
        };
        state.cache = match est {
            Ok((mean, var, dof)) => ArmEstimate::Ready { mean, var, dof },
            Err(Error::InsufficientSamples { .. }) => ArmEstimate::Insufficient,
            Err(e) => return Err(e),
        };
        state.cache_len = state.n();
        Ok(())
    }

    /// Deterministic per-arm index scores at the current round; `None` for
    /// policies whose selection is not index-based (Thompson, uniform, oracle).
    pub fn scores(&mut self) -> Result<Option<Vec<f64>>> {
        let k = self.k();
        match self.kind {
            PolicyKind::UcbCv(_) => {
                for arm in 0..k {
                    self.refresh_cache(arm)?;
                }
                let t = self.t.max(2) as f64;
                let p = 1.0 - t.powf(-self.params.alpha);
                // Arms sharing a dof share a quantile; dedupe the evaluations.
                let mut memo: Vec<(usize, f64)> = Vec::with_capacity(k);
                let mut out = Vec::with_capacity(k);
                for state in &self.arms {
                    let score = match state.cache {
                        ArmEstimate::Ready { mean, var, dof } => {
                            let v = match memo.iter().find(|(d, _)| *d == dof) {
                                Some((_, v)) => *v,
                                None => {
                                    let v = t_quantile(p, dof as u64)?;
                                    memo.push((dof, v));
                                    v
                                }
                            };
                            mean + v * var.sqrt()
                        }
                        ArmEstimate::Insufficient => f64::INFINITY,
                        ArmEstimate::Stale => unreachable!("cache refreshed above"),
                    };
                    out.push(score);
                }
                Ok(Some(out))
            }
            PolicyKind::Ucb1 => {
                let t = self.t.max(1) as f64;
                Ok(Some(
                    self.arms
                        .iter()
                        .map(|a| {
                            if a.n() == 0 {
                                f64::INFINITY
                            } else {
                                ucb1_index(a.mean, a.n(), t, self.params.scale)
                            }
                        })
                        .collect(),
                ))
            }
            PolicyKind::UcbV => {
                let t = self.t.max(1) as f64;
                Ok(Some(
                    self.arms
                        .iter()
                        .map(|a| {
                            if a.n() < 2 {
                                f64::INFINITY
                            } else {
                                ucbv_index(a.mean, a.var_hat(), a.n(), t, self.params.scale)
                            }
                        })
                        .collect(),
                ))
            }
            PolicyKind::Thompson | PolicyKind::Uniform | PolicyKind::Oracle => Ok(None),
        }
    }

    /// Chooses the arm to play this round: round-robin during initialization,
    /// then the argmax of the policy's scores (ties to the lowest index).
    pub fn select_arm(&mut self) -> Result<usize> {
        let k = self.k();
        if self.in_init_phase() {
            return Ok(self.t % k);
        }
        match self.kind {
            PolicyKind::Oracle => Ok(self.oracle_arm),
            PolicyKind::Uniform => {
                let u = self.rng.next_f64();
                Ok(((u * k as f64) as usize).min(k - 1))
            }
            PolicyKind::Thompson => {
                let mut best = 0;
                let mut best_draw = f64::NEG_INFINITY;
                for i in 0..k {
                    let (mean, n) = (self.arms[i].mean, self.arms[i].n());
                    let draw = thompson_gaussian_sample(mean, n, &mut self.rng);
                    if draw > best_draw {
                        best_draw = draw;
                        best = i;
                    }
                }
                Ok(best)
            }
            _ => {
                let scores = self.scores()?.expect("index policy");
                Ok(argmax(&scores))
            }
        }
    }

    /// Records the observed reward and CVs for `arm` and advances the round.
    /// Estimates are refreshed lazily at the next index computation.
    pub fn update(&mut self, arm: usize, reward: f64, cvs: &[f64]) -> Result<()> {
        if arm >= self.k() {
            return Err(Error::Config(format!("arm {arm} out of range")));
        }
        let state = &mut self.arms[arm];
        state.stats.push(reward, cvs)?;
        let n = state.n() as f64;
        let delta = reward - state.mean;
        state.mean += delta / n;
        state.m2 += delta * (reward - state.mean);
        self.t += 1;
        Ok(())
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
