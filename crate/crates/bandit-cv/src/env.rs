//! Synthetic problem instances: each arm's reward is a sum X = V + W of two
//! independent components, and the W component is observed as the control
//! variate. The learner is told the CV mean ω = mean(W) + ε (ε models an
//! approximation error in that side information) and nothing else about the
//! distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample::{sample_gamma, sample_lognormal, sample_normal};

/// Distribution family of the two components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// V ~ N(mu_v, var_v), W ~ N(mu_w, var_w).
    NormalSum,
    /// V ~ Gamma(shape = mu_v, scale 1), W ~ Gamma(shape = mu_w, scale 1).
    GammaSum,
    /// V, W log-normal with arithmetic means mu_v, mu_w and log-space
    /// variances var_v, var_w.
    LognormalSum,
}

/// One arm's joint reward/CV model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub family: Family,
    pub mu_v: f64,
    pub var_v: f64,
    pub mu_w: f64,
    pub var_w: f64,
    /// Offset added to the CV mean the learner is told; the sampling
    /// distribution itself is unchanged.
    #[serde(default)]
    pub epsilon: f64,
}

impl ArmModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.family {
            Family::NormalSum => self.var_v >= 0.0 && self.var_w >= 0.0,
            Family::GammaSum => self.mu_v > 0.0 && self.mu_w > 0.0,
            Family::LognormalSum => {
                self.mu_v > 0.0 && self.mu_w > 0.0 && self.var_v > 0.0 && self.var_w > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid arm parameters: {self:?}")))
        }
    }

    /// True mean reward μ = E[V] + E[W]; holds for all three families by
    /// construction.
    pub fn true_mean(&self) -> f64 {
        self.mu_v + self.mu_w
    }

    /// The CV mean the learner is told: E[W] + ε.
    pub fn declared_cv_mean(&self) -> f64 {
        self.mu_w + self.epsilon
    }

    /// Actual variances of the two components.
    pub fn component_variances(&self) -> (f64, f64) {
        match self.family {
            Family::NormalSum => (self.var_v, self.var_w),
            // Shape-scale with scale 1: variance = shape.
            Family::GammaSum => (self.mu_v, self.mu_w),
            Family::LognormalSum => {
                let v = (self.var_v.exp() - 1.0) * self.mu_v * self.mu_v;
                let w = (self.var_w.exp() - 1.0) * self.mu_w * self.mu_w;
                (v, w)
            }
        }
    }

    /// Corr(X, W) = sqrt(Var(W) / (Var(V) + Var(W))), from independence of the
    /// components.
    pub fn correlation(&self) -> f64 {
        let (vv, vw) = self.component_variances();
        (vw / (vv + vw)).sqrt()
    }

    fn sample_components(&self, rng: &mut RngStream) -> (f64, f64) {
        match self.family {
            Family::NormalSum => (
                sample_normal(rng, self.mu_v, self.var_v).expect("validated"),
                sample_normal(rng, self.mu_w, self.var_w).expect("validated"),
            ),
            Family::GammaSum => (
                sample_gamma(rng, self.mu_v, 1.0).expect("validated"),
                sample_gamma(rng, self.mu_w, 1.0).expect("validated"),
            ),
            Family::LognormalSum => {
                // Log-space location so the arithmetic mean hits the target.
                let loc_v = self.mu_v.ln() - 0.5 * self.var_v;
                let loc_w = self.mu_w.ln() - 0.5 * self.var_w;
                (
                    sample_lognormal(rng, loc_v, self.var_v).expect("validated"),
                    sample_lognormal(rng, loc_w, self.var_w).expect("validated"),
                )
            }
        }
    }
}

/// A bandit instance: a named list of arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub arms: Vec<ArmModel>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::Config("instance has no arms".into()));
        }
        for arm in &self.arms {
            arm.validate()?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn true_means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::true_mean).collect()
    }

    /// Index of the best arm; ties go to the lowest index.
    pub fn optimal_arm(&self) -> usize {
        let means = self.true_means();
        let mut best = 0;
        for (i, m) in means.iter().enumerate() {
            if *m > means[best] {
                best = i;
            }
        }
        best
    }

    /// Sub-optimality gaps Δᵢ = μ* − μᵢ.
    pub fn gaps(&self) -> Vec<f64> {
        let means = self.true_means();
        let star = means[self.optimal_arm()];
        means.iter().map(|m| star - m).collect()
    }

    /// The per-arm CV means the learner sees (each arm has one CV here).
    pub fn declared_cv_means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::declared_cv_mean).collect()
    }

    /// Copy with the CV-mean approximation offset set on every arm.
    pub fn with_epsilon(&self, epsilon: f64) -> Instance {
        let mut inst = self.clone();
        for arm in &mut inst.arms {
            arm.epsilon = epsilon;
        }
        inst
    }

    /// Copy with var_v set on every arm (the correlation sweep knob).
    pub fn with_var_v(&self, var_v: f64) -> Instance {
        let mut inst = self.clone();
        for arm in &mut inst.arms {
            arm.var_v = var_v;
        }
        inst
    }

    /// One interaction with an arm: draws (V, W) and returns the reward
    /// X = V + W together with the observed control variate W.
    pub fn pull(&self, arm: usize, rng: &mut RngStream) -> (f64, f64) {
        let (v, w) = self.arms[arm].sample_components(rng);
        (v + w, w)
    }
}

/// Builds one of the five built-in instances with K arms.
///
/// 1: normal components, mu_v = 0.6 − (i−1)·0.05, shared mu_w = 0.3,
///    var_v = var_w = 0.1.
/// 2: like 1 but per-arm mu_w = 0.8 − (i−1)·0.05.
/// 3: like 2 with Gamma components (scale 1, shapes = the component means).
/// 4: like 2 with log-normal components, log-space variances 1.
/// 5: normal components, mu_v = 6.0 − (i−1)·0.5, shared mu_w = 4.0,
///    var_v = var_w = 1.0.
pub fn make_instance(id: u32, k: usize) -> Result<Instance> {
    if k == 0 {
        return Err(Error::Config("instance needs at least one arm".into()));
    }
    let arms: Vec<ArmModel> = (0..k)
        .map(|i| {
            let step = i as f64;
            match id {
                1 => Ok(ArmModel {
                    family: Family::NormalSum,
                    mu_v: 0.6 - step * 0.05,
                    var_v: 0.1,
                    mu_w: 0.3,
                    var_w: 0.1,
                    epsilon: 0.0,
                }),
                2 => Ok(ArmModel {
                    family: Family::NormalSum,
                    mu_v: 0.6 - step * 0.05,
                    var_v: 0.1,
                    mu_w: 0.8 - step * 0.05,
                    var_w: 0.1,
                    epsilon: 0.0,
                }),
                3 => Ok(ArmModel {
                    family: Family::GammaSum,
                    mu_v: 0.6 - step * 0.05,
                    var_v: 0.6 - step * 0.05,
                    mu_w: 0.8 - step * 0.05,
                    var_w: 0.8 - step * 0.05,
                    epsilon: 0.0,
                }),
                4 => Ok(ArmModel {
                    family: Family::LognormalSum,
                    mu_v: 0.6 - step * 0.05,
                    var_v: 1.0,
                    mu_w: 0.8 - step * 0.05,
                    var_w: 1.0,
                    epsilon: 0.0,
                }),
                5 => Ok(ArmModel {
                    family: Family::NormalSum,
                    mu_v: 6.0 - step * 0.5,
                    var_v: 1.0,
                    mu_w: 4.0,
                    var_w: 1.0,
                    epsilon: 0.0,
                }),
                other => Err(Error::Config(format!("unknown built-in instance id {other}"))),
            }
        })
        .collect::<Result<_>>()?;
    let inst = Instance { name: format!("instance-{id}"), arms };
    inst.validate()?;
    Ok(inst)
}
