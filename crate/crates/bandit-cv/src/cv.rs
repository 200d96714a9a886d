//! Control-variate mean and variance estimation.
//!
//! An arm's reward X comes with a vector of control variates W whose mean ω is
//! known. The adjusted sample X̄ = X + βᵀ(ω − W) has lower variance than X when
//! W correlates with X. This module estimates the coefficient β (scalar and
//! matrix forms), the adjusted mean μ̂ᶜ, and an unbiased estimate ν̂ of
//! Var(μ̂ᶜ), plus the jackknife / splitting / batching resampling estimators
//! used when the joint distribution is not normal.
//!
//! Two centering conventions exist for the estimated coefficient: the scalar
//! form divides by Σ(W−ω)² (deviations from the known mean), while the matrix
//! form divides by the sample covariance around the empirical mean ω̂. Both are
//! implemented as written; the scalar form is what the q = 1 policies use.

use crate::error::{Error, Result};

/// Relative threshold under which the centered CV variance counts as zero.
const DEGENERATE_TOL: f64 = 1e-12;

/// Per-arm observation record: rewards, control variates, and running sums.
///
/// The sums are accumulated in push order, so estimates computed from them are
/// bit-identical to a fresh left-to-right pass over the stored samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CvStats {
    cv_means: Vec<f64>,
    rewards: Vec<f64>,
    cvs: Vec<f64>, // row-major s×q
    sum_x: f64,
    sum_x_sq: f64,
    sum_dw: Vec<f64>,    // Σ (w_j − ω_j)
    sum_x_dw: Vec<f64>,  // Σ x·(w_j − ω_j)
    sum_dw_dw: Vec<f64>, // Σ (w_j − ω_j)(w_k − ω_k), row-major q×q
}

impl CvStats {
    /// `cv_means` is ω, the known per-CV mean vector; its length fixes q.
    pub fn new(cv_means: Vec<f64>) -> Self {
        let q = cv_means.len();
        assert!(q >= 1, "at least one control variate is required");
        Self {
            cv_means,
            rewards: Vec::new(),
            cvs: Vec::new(),
            sum_x: 0.0,
            sum_x_sq: 0.0,
            sum_dw: vec![0.0; q],
            sum_x_dw: vec![0.0; q],
            sum_dw_dw: vec![0.0; q * q],
        }
    }

    pub fn q(&self) -> usize {
        self.cv_means.len()
    }

    /// Number of observations s.
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn cv_means(&self) -> &[f64] {
        &self.cv_means
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn cv_row(&self, r: usize) -> &[f64] {
        let q = self.q();
        &self.cvs[r * q..(r + 1) * q]
    }

    pub fn push(&mut self, reward: f64, cvs: &[f64]) -> Result<()> {
        let q = self.q();
        if cvs.len() != q {
            return Err(Error::Domain(format!(
                "expected {q} control variates per observation, got {}",
                cvs.len()
            )));
        }
        self.rewards.push(reward);
        self.cvs.extend_from_slice(cvs);
        self.sum_x += reward;
        self.sum_x_sq += reward * reward;
        for j in 0..q {
            let dj = cvs[j] - self.cv_means[j];
            self.sum_dw[j] += dj;
            self.sum_x_dw[j] += reward * dj;
            for k in 0..q {
                self.sum_dw_dw[j * q + k] += dj * (cvs[k] - self.cv_means[k]);
            }
        }
        Ok(())
    }

    /// Plain sample mean μ̂ₛ of the rewards.
    pub fn reward_mean(&self) -> f64 {
        self.sum_x / self.len() as f64
    }

    /// Empirical CV means ω̂ₛ.
    pub fn cv_sample_means(&self) -> Vec<f64> {
        let s = self.len() as f64;
        self.cv_means
            .iter()
            .zip(&self.sum_dw)
            .map(|(om, d)| om + d / s)
            .collect()
    }

    fn sums(&self) -> Sums {
        Sums {
            s: self.len(),
            q: self.q(),
            sum_x: self.sum_x,
            sum_x_sq: self.sum_x_sq,
            sum_dw: self.sum_dw.clone(),
            sum_x_dw: self.sum_x_dw.clone(),
            sum_dw_dw: self.sum_dw_dw.clone(),
        }
    }
}

/// The direct estimator: adjusted mean, its variance estimate, and diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct CvEstimate {
    /// μ̂ᶜ, the CV-adjusted mean.
    pub mean: f64,
    /// ν̂ = Z·σ̂²_c / s, the unbiased estimate of Var(μ̂ᶜ).
    pub variance_of_mean: f64,
    /// The coefficient the estimate was built with (zero vector on fallback).
    pub beta_hat: Vec<f64>,
    /// Correction for the deviation of ω̂ from ω; ≥ 1 for q = 1.
    pub z_factor: f64,
    /// σ̂²_c, the residual variance of the adjusted samples.
    pub sigma_c_sq: f64,
    /// Degrees of freedom: s − q − 1, or s − 1 on degenerate-CV fallback.
    pub dof: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleMethod {
    Jackknife,
    Splitting,
    Batching,
}

/// A resampling estimate: pseudo-values with their mean and sample variance.
#[derive(Clone, Debug, PartialEq)]
pub struct ResampledEstimate {
    pub method: ResampleMethod,
    /// Arithmetic mean of the pseudo-values.
    pub mean: f64,
    /// Σ (Y_j − mean)² / (n(n−1)) over the n pseudo-values.
    pub variance_of_mean: f64,
    pub dof: usize,
    pub pseudo_values: Vec<f64>,
}

/// Running sums over a subset of observations; supports leave-one-out
/// downdates in O(q²) so resampling estimators cost O(s) per call at q = 1.
#[derive(Clone, Debug)]
struct Sums {
    s: usize,
    q: usize,
    sum_x: f64,
    sum_x_sq: f64,
    sum_dw: Vec<f64>,
    sum_x_dw: Vec<f64>,
    sum_dw_dw: Vec<f64>,
}

impl Sums {
    fn minus_row(&self, stats: &CvStats, j: usize) -> Sums {
        let q = self.q;
        let x = stats.rewards[j];
        let row = stats.cv_row(j);
        let mut out = self.clone();
        out.s -= 1;
        out.sum_x -= x;
        out.sum_x_sq -= x * x;
        for a in 0..q {
            let da = row[a] - stats.cv_means[a];
            out.sum_dw[a] -= da;
            out.sum_x_dw[a] -= x * da;
            for b in 0..q {
                out.sum_dw_dw[a * q + b] -= da * (row[b] - stats.cv_means[b]);
            }
        }
        out
    }

    fn reward_mean(&self) -> f64 {
        self.sum_x / self.s as f64
    }

    /// Σ (X − μ̂)(W_j − ω_j); identical whether W is centered at ω or ω̂.
    fn cross(&self, j: usize) -> f64 {
        self.sum_x_dw[j] - self.reward_mean() * self.sum_dw[j]
    }

    /// Scalar coefficient with the Σ(W−ω)² denominator (q = 1 only).
    fn beta_scalar(&self) -> Result<f64> {
        if self.s < 2 {
            return Err(Error::InsufficientSamples { needed: 2, have: self.s });
        }
        let denom = self.sum_dw_dw[0];
        if denom <= 0.0 {
            return Err(Error::DegenerateCv(
                "control variate equals its known mean in every sample".into(),
            ));
        }
        Ok(self.cross(0) / denom)
    }

    /// Sample covariance matrix of W around ω̂, times (s−1).
    fn centered_ww(&self) -> Vec<f64> {
        let q = self.q;
        let s = self.s as f64;
        let mut m = self.sum_dw_dw.clone();
        for a in 0..q {
            for b in 0..q {
                m[a * q + b] -= self.sum_dw[a] * self.sum_dw[b] / s;
            }
        }
        m
    }

    /// Coefficient vector from the ridged S_WW system.
    fn beta_matrix(&self) -> Result<Vec<f64>> {
        let q = self.q;
        if self.s < q + 1 {
            return Err(Error::InsufficientSamples { needed: q + 1, have: self.s });
        }
        let sm1 = (self.s - 1) as f64;
        let mut s_ww: Vec<f64> = self.centered_ww().iter().map(|v| v / sm1).collect();
        let s_xw: Vec<f64> = (0..q).map(|j| self.cross(j) / sm1).collect();

        let trace: f64 = (0..q).map(|a| s_ww[a * q + a]).sum();
        if trace <= 0.0 {
            return Err(Error::DegenerateCv("all control variates are constant".into()));
        }
        let unridged = s_ww.clone();
        // The ridge exists to survive collinear columns; a 1x1 system has no
        // collinearity beyond the zero-variance case handled above, and the
        // perturbation would break scalar-path agreement.
        if q > 1 {
            let ridge = 1e-10 * trace / q as f64;
            for a in 0..q {
                s_ww[a * q + a] += ridge;
            }
        }
        solve(&s_ww, &s_xw, q).ok_or_else(|| Error::SingularCovariance {
            condition: condition_inf(&unridged, q),
        })
    }

    /// Coefficient the estimators use: scalar convention at q = 1, matrix
    /// convention otherwise. Degenerate CVs give the zero vector so the
    /// caller falls back to the plain sample mean.
    fn beta_or_zero(&self) -> Vec<f64> {
        if self.q == 1 {
            vec![self.beta_scalar().unwrap_or(0.0)]
        } else {
            self.beta_matrix().unwrap_or_else(|_| vec![0.0; self.q])
        }
    }

    /// μ̂ᶜ = μ̂ + βᵀ(ω − ω̂).
    fn mean_with(&self, beta: &[f64]) -> f64 {
        let s = self.s as f64;
        let mut m = self.reward_mean();
        for (b, d) in beta.iter().zip(&self.sum_dw) {
            m -= b * d / s;
        }
        m
    }

    /// Σ (X̄ᵣ − μ̂ᶜ)² with X̄ᵣ = Xᵣ + βᵀ(ω − Wᵣ), from sums alone.
    fn residual_ss(&self, beta: &[f64]) -> f64 {
        let q = self.q;
        let s = self.s as f64;
        let mu = self.reward_mean();
        let m_ww = self.centered_ww();
        let mut ss = self.sum_x_sq - s * mu * mu;
        for a in 0..q {
            ss -= 2.0 * beta[a] * self.cross(a);
            for b in 0..q {
                ss += beta[a] * beta[b] * m_ww[a * q + b];
            }
        }
        ss.max(0.0)
    }
}

/// Gaussian elimination with partial pivoting for the small q×q systems.
fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = rhs[col];
        for k in col + 1..n {
            v -= m[col * n + k] * x[k];
        }
        x[col] = v / m[col * n + col];
    }
    Some(x)
}

/// Infinity-norm condition estimate of the (unridged) matrix; infinite when
/// the matrix does not solve.
fn condition_inf(a: &[f64], n: usize) -> f64 {
    let norm = |m: &[f64]| -> f64 {
        (0..n)
            .map(|r| (0..n).map(|c| m[r * n + c].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        match solve(a, &e, n) {
            Some(col) => {
                for r in 0..n {
                    inv[r * n + c] = col[r];
                }
            }
            None => return f64::INFINITY,
        }
    }
    norm(a) * norm(&inv)
}

/// β* = Cov(X,W) / Var(W), the variance-minimizing coefficient.
pub fn optimal_beta(cov_xw: f64, var_w: f64) -> Result<f64> {
    if !(var_w > 0.0) {
        return Err(Error::DegenerateCv(format!("Var(W) must be positive, got {var_w}")));
    }
    Ok(cov_xw / var_w)
}

/// Estimated scalar coefficient: Σ(X−μ̂)(W−ω) / Σ(W−ω)². Requires q = 1.
pub fn estimate_beta_single(stats: &CvStats) -> Result<f64> {
    if stats.q() != 1 {
        return Err(Error::Domain(format!(
            "estimate_beta_single requires exactly one control variate, got q={}",
            stats.q()
        )));
    }
    stats.sums().beta_scalar()
}

/// Scalar coefficient with the known CV variance substituted in the
/// denominator: Σ(X−μ̂)(W−ω) / ((s−1)·σ²_w).
pub fn estimate_beta_single_known_var(stats: &CvStats, var_w: f64) -> Result<f64> {
    if stats.q() != 1 {
        return Err(Error::Domain(format!(
            "estimate_beta_single_known_var requires q=1, got q={}",
            stats.q()
        )));
    }
    if !(var_w > 0.0) {
        return Err(Error::DegenerateCv(format!("Var(W) must be positive, got {var_w}")));
    }
    let sums = stats.sums();
    if sums.s < 2 {
        return Err(Error::InsufficientSamples { needed: 2, have: sums.s });
    }
    Ok(sums.cross(0) / ((sums.s - 1) as f64 * var_w))
}

/// Estimated coefficient vector β̂ = S_WW⁻¹ S_XW (ridged).
pub fn estimate_beta_multi(stats: &CvStats) -> Result<Vec<f64>> {
    stats.sums().beta_matrix()
}

/// μ̂ᶜ = μ̂ₛ + βᵀ(ω − ω̂ₛ).
pub fn cv_mean_estimate(stats: &CvStats, beta: &[f64]) -> Result<f64> {
    if beta.len() != stats.q() {
        return Err(Error::Domain(format!(
            "beta has length {}, expected q={}",
            beta.len(),
            stats.q()
        )));
    }
    if stats.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    Ok(stats.sums().mean_with(beta))
}

/// Variance estimate for μ̂ᶜ built with the given coefficient:
/// ν̂ = Z·σ̂²_c/s with σ̂²_c = Σ(X̄ᵣ − μ̂ᶜ)²/(s−q−1).
///
/// Degenerate CVs (zero variance around ω, or singular centered covariance)
/// fall back to the plain sample-mean estimator: β = 0, Z = 1, ν̂ = σ̂²ₓ/s,
/// dof = s−1.
pub fn cv_variance_estimate(stats: &CvStats, beta: &[f64]) -> Result<CvEstimate> {
    let q = stats.q();
    if beta.len() != q {
        return Err(Error::Domain(format!("beta has length {}, expected q={q}", beta.len())));
    }
    let sums = stats.sums();
    if sums.s < q + 2 {
        return Err(Error::InsufficientSamples { needed: q + 2, have: sums.s });
    }

    let z = z_factor(&sums);
    let z = match z {
        Some(z) => z,
        None => return Ok(plain_mean_estimate(&sums)),
    };

    let s = sums.s as f64;
    let mean = sums.mean_with(beta);
    let sigma_c_sq = sums.residual_ss(beta) / (sums.s - q - 1) as f64;
    Ok(CvEstimate {
        mean,
        variance_of_mean: z * sigma_c_sq / s,
        beta_hat: beta.to_vec(),
        z_factor: z,
        sigma_c_sq,
        dof: sums.s - q - 1,
    })
}

/// Z correction; `None` when the CV is degenerate and the caller must fall
/// back to the plain mean.
fn z_factor(sums: &Sums) -> Option<f64> {
    let q = sums.q;
    let s = sums.s as f64;
    if q == 1 {
        // Closed form: Z = Σ(W−ω)² / Σ(W−ω̂)².
        let d = sums.sum_dw_dw[0];
        let m = d - sums.sum_dw[0] * sums.sum_dw[0] / s;
        if !(d > 0.0) || m <= DEGENERATE_TOL * d {
            return None;
        }
        Some(d / m)
    } else {
        let sm1 = s - 1.0;
        let mut s_ww: Vec<f64> = sums.centered_ww().iter().map(|v| v / sm1).collect();
        let trace: f64 = (0..q).map(|a| s_ww[a * q + a]).sum();
        if trace <= 0.0 {
            return None;
        }
        let ridge = 1e-10 * trace / q as f64;
        for a in 0..q {
            s_ww[a * q + a] += ridge;
        }
        let delta: Vec<f64> = sums.sum_dw.iter().map(|d| d / s).collect();
        let sol = solve(&s_ww, &delta, q)?;
        let quad: f64 = delta.iter().zip(&sol).map(|(a, b)| a * b).sum();
        Some(1.0 + quad / (1.0 - 1.0 / s))
    }
}

fn plain_mean_estimate(sums: &Sums) -> CvEstimate {
    let s = sums.s as f64;
    let mu = sums.reward_mean();
    let var_x = ((sums.sum_x_sq - s * mu * mu) / (s - 1.0)).max(0.0);
    CvEstimate {
        mean: mu,
        variance_of_mean: var_x / s,
        beta_hat: vec![0.0; sums.q],
        z_factor: 1.0,
        sigma_c_sq: var_x,
        dof: sums.s - 1,
    }
}

/// The full direct estimate: β̂ by the q-appropriate convention, then mean and
/// variance. This is what the direct UCB policy evaluates per arm.
pub fn direct_estimate(stats: &CvStats) -> Result<CvEstimate> {
    let q = stats.q();
    if stats.len() < q + 2 {
        return Err(Error::InsufficientSamples { needed: q + 2, have: stats.len() });
    }
    let beta = stats.sums().beta_or_zero();
    cv_variance_estimate(stats, &beta)
}

fn pseudo_value_summary(
    method: ResampleMethod,
    pseudo_values: Vec<f64>,
    dof: usize,
) -> ResampledEstimate {
    let n = pseudo_values.len() as f64;
    let mean = pseudo_values.iter().sum::<f64>() / n;
    let variance_of_mean =
        pseudo_values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n * (n - 1.0));
    ResampledEstimate { method, mean, variance_of_mean, dof, pseudo_values }
}

/// Jackknife estimate: pseudo-values Y_j = s·μ̂ᶜ − (s−1)·μ̂ᶜ⁻ʲ, where each
/// leave-one-out estimate re-estimates β̂ from the remaining s−1 pairs.
pub fn jackknife_estimate(stats: &CvStats) -> Result<ResampledEstimate> {
    let q = stats.q();
    let s = stats.len();
    if s < q + 3 {
        return Err(Error::InsufficientSamples { needed: q + 3, have: s });
    }
    let sums = stats.sums();
    let full_mean = sums.mean_with(&sums.beta_or_zero());
    let sf = s as f64;
    let mut pseudo = Vec::with_capacity(s);
    for j in 0..s {
        let loo = sums.minus_row(stats, j);
        let loo_mean = loo.mean_with(&loo.beta_or_zero());
        pseudo.push(sf * full_mean - (sf - 1.0) * loo_mean);
    }
    Ok(pseudo_value_summary(ResampleMethod::Jackknife, pseudo, s - 1))
}

/// Splitting estimate: Y_j = X_j + β̂⁻ʲᵀ(ω − W_j) with the leave-one-out
/// coefficient applied to the held-out observation.
pub fn split_estimate(stats: &CvStats) -> Result<ResampledEstimate> {
    let q = stats.q();
    let s = stats.len();
    if s < q + 3 {
        return Err(Error::InsufficientSamples { needed: q + 3, have: s });
    }
    let sums = stats.sums();
    let mut pseudo = Vec::with_capacity(s);
    for j in 0..s {
        let loo = sums.minus_row(stats, j);
        let beta = loo.beta_or_zero();
        let row = stats.cv_row(j);
        let mut y = stats.rewards[j];
        for a in 0..q {
            y -= beta[a] * (row[a] - stats.cv_means[a]);
        }
        pseudo.push(y);
    }
    Ok(pseudo_value_summary(ResampleMethod::Splitting, pseudo, s - 1))
}

/// Batching estimate: the adjusted samples X̄ (full-sample β̂) are grouped into
/// b = ⌊s/m⌋ consecutive batches of m; the batch means are the pseudo-values
/// and the degrees of freedom drop to b − q − 1.
pub fn batch_estimate(stats: &CvStats, m: usize) -> Result<ResampledEstimate> {
    if m < 2 {
        return Err(Error::Domain(format!("batch size must be >= 2, got {m}")));
    }
    let q = stats.q();
    let s = stats.len();
    let b = s / m;
    if b < q + 2 {
        return Err(Error::InsufficientSamples { needed: m * (q + 2), have: s });
    }
    let sums = stats.sums();
    let beta = sums.beta_or_zero();
    let mut pseudo = Vec::with_capacity(b);
    for batch in 0..b {
        let mut acc = 0.0;
        for r in batch * m..(batch + 1) * m {
            let row = stats.cv_row(r);
            let mut xbar = stats.rewards[r];
            for a in 0..q {
                xbar -= beta[a] * (row[a] - stats.cv_means[a]);
            }
            acc += xbar;
        }
        pseudo.push(acc / m as f64);
    }
    Ok(pseudo_value_summary(ResampleMethod::Batching, pseudo, b - q - 1))
}
