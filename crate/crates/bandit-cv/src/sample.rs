//! Random-variate generation on top of `RngStream`.
//!
//! Normal and log-normal draws go through the inverse normal CDF (one uniform
//! per draw, monotone in the stream), gamma draws use the Marsaglia-Tsang
//! squeeze with the shape<1 boost. All samplers are deterministic functions of
//! the stream state.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::normal_quantile_unchecked;

/// One N(mean, var) draw. `var = 0` returns `mean` exactly.
pub fn sample_normal(rng: &mut RngStream, mean: f64, var: f64) -> Result<f64> {
    if !(var >= 0.0) {
        return Err(Error::Domain(format!("normal variance must be >= 0, got {var}")));
    }
    if var == 0.0 {
        return Ok(mean);
    }
    Ok(mean + var.sqrt() * standard_normal(rng))
}

#[inline]
pub(crate) fn standard_normal(rng: &mut RngStream) -> f64 {
    normal_quantile_unchecked(rng.next_f64())
}

/// One Gamma(shape, scale) draw in the shape-scale parameterization
/// (mean = shape·scale, variance = shape·scale²).
pub fn sample_gamma(rng: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0) || !(scale > 0.0) {
        return Err(Error::Domain(format!(
            "gamma requires shape > 0 and scale > 0, got shape={shape}, scale={scale}"
        )));
    }
    Ok(gamma_unchecked(rng, shape) * scale)
}

fn gamma_unchecked(rng: &mut RngStream, shape: f64) -> f64 {
    if shape < 1.0 {
        // Boost: Gamma(a) = Gamma(a+1) · U^{1/a}.
        let g = gamma_unchecked(rng, shape + 1.0);
        let u = rng.next_f64();
        return g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.next_f64();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One log-normal draw: exp of N(mu_log, var_log).
pub fn sample_lognormal(rng: &mut RngStream, mu_log: f64, var_log: f64) -> Result<f64> {
    if !(var_log > 0.0) {
        return Err(Error::Domain(format!("log-normal variance must be > 0, got {var_log}")));
    }
    Ok((mu_log + var_log.sqrt() * standard_normal(rng)).exp())
}
