//! Special functions backing the confidence indices: regularized incomplete
//! beta, Student-t CDF and quantile, and the standard normal quantile.
//!
//! Everything is self-contained f64 arithmetic so results are identical across
//! platforms. The t quantile is evaluated by root refinement on the CDF (which
//! is itself an incomplete-beta evaluation); above `NORMAL_APPROX_DF` degrees
//! of freedom it switches to the normal quantile with a one-term Cornish-Fisher
//! correction, accurate to better than 1e-7 there.

use crate::error::{Error, Result};

/// Degrees of freedom above which the t quantile uses the normal approximation.
const NORMAL_APPROX_DF: u64 = 100_000;

/// ln Γ(x) via the Lanczos approximation (g = 7, 9 terms), ~1e-13 relative.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
/// Converges for x below the crossover (a+1)/(a+b+2).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 1000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;

        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;

        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
///
/// Uses the symmetry I_x(a,b) = 1 − I_{1−x}(b,a) so the continued fraction is
/// always evaluated on its fast-converging side.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("reg_inc_beta requires a,b > 0, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("reg_inc_beta requires x in [0,1], got {x}")));
    }
    Ok(reg_inc_beta_unchecked(a, b, x))
}

fn reg_inc_beta_unchecked(a: f64, b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    // x^a (1-x)^b / B(a,b), shared by both branches.
    let front = (a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Beta density, the derivative of I_x(a,b) in x.
fn beta_pdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

/// Inverse of the regularized incomplete beta: y with I_y(a,b) = p.
/// Newton from a Numerical-Recipes-style start with bisection safeguards.
fn inv_reg_inc_beta(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }

    let mut x;
    if a >= 1.0 && b >= 1.0 {
        // Abramowitz & Stegun 26.5.22 normal-based start.
        let z = normal_quantile_unchecked(p);
        let al = 1.0 / (2.0 * a - 1.0);
        let be = 1.0 / (2.0 * b - 1.0);
        let h = 2.0 / (al + be);
        let w = z * (h + (z * z - 3.0) / 6.0).sqrt() / h
            - (be - al) * ((z * z - 3.0 + 2.0 * h) / 6.0 + 5.0 / 6.0 - 2.0 / (3.0 * h));
        x = a / (a + b * (2.0 * w).exp());
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            x = (a * w * p).powf(1.0 / a);
        } else {
            x = 1.0 - (b * w * (1.0 - p)).powf(1.0 / b);
        }
    }
    x = x.clamp(1e-300, 1.0 - 1e-16);

    let tol = 1e-12 * p.min(1.0 - p);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let f = reg_inc_beta_unchecked(a, b, x) - p;
        if f.abs() <= tol {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = beta_pdf(a, b, x);
        let mut next = x - f / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Standard normal quantile via Acklam's rational approximation
/// (relative error < 1.2e-9 over the full open interval).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal_quantile requires p in (0,1), got {p}")));
    }
    Ok(normal_quantile_unchecked(p))
}

pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (-p).ln_1p()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// CDF of the Student t distribution with `df` degrees of freedom.
pub fn t_cdf(x: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(Error::Domain(format!("t_cdf requires df >= 1, got {df}")));
    }
    Ok(t_cdf_unchecked(x, df as f64))
}

fn t_cdf_unchecked(x: f64, nu: f64) -> f64 {
    let ib = reg_inc_beta_unchecked(0.5 * nu, 0.5, nu / (nu + x * x));
    if x >= 0.0 {
        1.0 - 0.5 * ib
    } else {
        0.5 * ib
    }
}

fn t_pdf(x: f64, nu: f64) -> f64 {
    (ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p())
    .exp()
}

/// Cornish-Fisher expansion of the t quantile around the normal quantile z
/// (Abramowitz & Stegun 26.7.5). Only useful where z²/ν is small.
fn t_series(z: f64, nu: f64) -> f64 {
    let z2 = z * z;
    let z3 = z2 * z;
    let z5 = z3 * z2;
    let z7 = z5 * z2;
    z + (z3 + z) / (4.0 * nu)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * nu * nu * nu)
        + (79.0 * z7 * z2 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z)
            / (92160.0 * nu * nu * nu * nu)
}

/// Quantile of the Student t distribution: the x with CDF_t(x; df) = p.
///
/// Initial guess from the Cornish-Fisher series (large df) or the inverse
/// incomplete beta (small df), then Newton refinement on the CDF.
pub fn t_quantile(p: f64, df: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("t_quantile requires p in (0,1), got {p}")));
    }
    if df < 1 {
        return Err(Error::Domain(format!("t_quantile requires df >= 1, got {df}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }

    let nu = df as f64;
    if df > NORMAL_APPROX_DF {
        let z = normal_quantile_unchecked(p);
        return Ok(z + (z * z * z + z) / (4.0 * nu));
    }

    // Work in the upper tail; mirror at the end.
    let pp = p.max(1.0 - p);
    let z = normal_quantile_unchecked(pp);
    let mut x = if z * z <= 0.3 * nu {
        t_series(z, nu)
    } else {
        // Invert the incomplete beta: tail mass 2(1-pp) = I_y(ν/2, 1/2)
        // at y = ν/(ν+x²).
        let y = inv_reg_inc_beta(0.5 * nu, 0.5, 2.0 * (1.0 - pp));
        if y > 0.0 {
            (nu * (1.0 - y) / y).sqrt()
        } else {
            f64::MAX.sqrt()
        }
    };

    let tol = 1e-12 * (1.0 - pp);
    for _ in 0..40 {
        let err = t_cdf_unchecked(x, nu) - pp;
        if err.abs() <= tol {
            break;
        }
        let step = err / t_pdf(x, nu);
        if !step.is_finite() {
            break;
        }
        let next = x - step;
        if next == x {
            break;
        }
        x = next;
    }

    Ok(if p >= 0.5 { x } else { -x })
}

/// One row of the quantile-vs-bound table: the squared t quantile at
/// p = 1 − 1/T^alpha with T−q−1 degrees of freedom, next to 3.726·ln T.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileBoundRow {
    pub t_horizon: u64,
    pub q: u64,
    pub v_squared: f64,
    pub bound: f64,
    pub ratio: f64,
    /// False when T is below the validity threshold q + max(32, ceil(0.7 q));
    /// the bound is not claimed there.
    pub valid: bool,
}

/// Tabulates (V_{T,T,q})² against 3.726·ln T over a (T, q) grid.
pub fn quantile_bound_table(
    t_values: &[u64],
    q_values: &[u64],
    alpha: f64,
) -> Result<Vec<QuantileBoundRow>> {
    if !(alpha > 1.0) {
        return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
    }
    let mut rows = Vec::with_capacity(t_values.len() * q_values.len());
    for &t in t_values {
        for &q in q_values {
            if t <= q + 1 {
                return Err(Error::Domain(format!(
                    "horizon T={t} leaves no degrees of freedom for q={q}"
                )));
            }
            let p = 1.0 - (t as f64).powf(-alpha);
            let v = t_quantile(p, t - q - 1)?;
            let bound = 3.726 * (t as f64).ln();
            let threshold = q + (32u64).max((0.7 * q as f64).ceil() as u64);
            rows.push(QuantileBoundRow {
                t_horizon: t,
                q,
                v_squared: v * v,
                bound,
                ratio: v * v / bound,
                valid: t >= threshold,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // ---- independent oracle: t CDF by adaptive Simpson quadrature ----

    fn simpson(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, fa, flm, fm, eps / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, eps / 2.0, depth - 1)
        }
    }

    /// P(0 <= T <= x), by quadrature of the density.
    fn t_mass_quadrature(x: f64, nu: f64) -> f64 {
        let f = |u: f64| t_pdf(u, nu);
        simpson(&f, 0.0, x, f(0.0), f(0.5 * x), f(x), 1e-13, 40)
    }

    /// Inverts the quadrature CDF by bisection.
    fn t_quantile_quadrature(p: f64, nu: f64) -> f64 {
        assert!(p > 0.5);
        let target = p - 0.5;
        let mut hi = 1.0;
        while t_mass_quadrature(hi, nu) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if t_mass_quadrature(mid, nu) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn normal_quantile_quadrature(p: f64) -> f64 {
        assert!(p > 0.5);
        let target = p - 0.5;
        let mass = |x: f64| {
            simpson(
                &normal_pdf,
                0.0,
                x,
                normal_pdf(0.0),
                normal_pdf(0.5 * x),
                normal_pdf(x),
                1e-14,
                40,
            )
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // ---- reg_inc_beta ----

    #[test]
    fn beta_uniform_case_is_identity() {
        assert_abs_diff_eq!(reg_inc_beta(1.0, 1.0, 0.3).unwrap(), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn beta_symmetric_midpoint() {
        assert_abs_diff_eq!(reg_inc_beta(2.0, 2.0, 0.5).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn beta_arcsine_law() {
        // I_x(1/2, 1/2) = (2/π)·asin(√x), evaluated independently.
        let expect = 2.0 / std::f64::consts::PI * (0.25_f64).sqrt().asin();
        assert_abs_diff_eq!(reg_inc_beta(0.5, 0.5, 0.25).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(reg_inc_beta(0.5, 0.5, 0.25).unwrap(), 0.33333, epsilon = 1e-5);
    }

    #[test]
    fn beta_domain_errors() {
        assert!(reg_inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, -1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn beta_reflection_identity(
            a in 0.1f64..50.0,
            b in 0.1f64..50.0,
            x in 0.0f64..=1.0,
        ) {
            let lhs = reg_inc_beta(a, b, x).unwrap();
            let rhs = reg_inc_beta(b, a, 1.0 - x).unwrap();
            prop_assert!((lhs + rhs - 1.0).abs() < 1e-12);
        }
    }

    // ---- t quantile ----

    #[test]
    fn t_quantile_median_is_zero() {
        assert_eq!(t_quantile(0.5, 7).unwrap(), 0.0);
    }

    #[test]
    fn t_quantile_small_df_matches_quadrature_oracle() {
        let oracle = t_quantile_quadrature(0.975, 1.0);
        assert_abs_diff_eq!(oracle, 12.7062, epsilon = 1e-3);
        assert_abs_diff_eq!(t_quantile(0.975, 1).unwrap(), oracle, epsilon = 1e-6);
    }

    #[test]
    fn t_quantile_huge_df_matches_normal_oracle() {
        let oracle = normal_quantile_quadrature(0.975);
        assert_abs_diff_eq!(oracle, 1.95997, epsilon = 1e-3);
        assert_abs_diff_eq!(t_quantile(0.975, 1_000_000).unwrap(), oracle, epsilon = 1e-3);
    }

    #[test]
    fn t_quantile_matches_quadrature_across_df() {
        for df in [2u64, 3, 5, 9, 18, 40, 150, 999] {
            for p in [0.6, 0.9, 0.975, 0.9999] {
                let oracle = t_quantile_quadrature(p, df as f64);
                assert_abs_diff_eq!(t_quantile(p, df).unwrap(), oracle, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn t_quantile_spot_table() {
        // Standard two-sided t-table values.
        for (p, df, expect) in [
            (0.975, 5, 2.571),
            (0.975, 10, 2.228),
            (0.99, 30, 2.457),
            (0.95, 2, 2.920),
            (0.9995, 20, 3.850),
        ] {
            assert_abs_diff_eq!(t_quantile(p, df).unwrap(), expect, epsilon = 2e-3);
        }
    }

    #[test]
    fn t_quantile_domain_errors() {
        assert!(t_quantile(0.0, 5).is_err());
        assert!(t_quantile(1.0, 5).is_err());
        assert!(t_quantile(0.9, 0).is_err());
    }

    #[test]
    fn t_quantile_strictly_increasing_in_p() {
        for df in [1u64, 2, 5, 10, 30, 100] {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..1000 {
                let p = i as f64 / 1000.0;
                let v = t_quantile(p, df).unwrap();
                assert!(v > prev, "df={df}, p={p}: {v} <= {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn t_quantile_antisymmetric() {
        for df in [1u64, 3, 7, 50, 400] {
            for p in [0.6, 0.75, 0.9, 0.99, 0.9999] {
                let hi = t_quantile(p, df).unwrap();
                let lo = t_quantile(1.0 - p, df).unwrap();
                assert!((hi + lo).abs() < 1e-9, "df={df}, p={p}: {hi} vs {lo}");
            }
        }
    }

    #[test]
    fn t_quantile_decreases_in_df_toward_normal() {
        let p = 0.975;
        let z = normal_quantile(p).unwrap();
        let mut prev = f64::INFINITY;
        for df in [1u64, 2, 5, 10, 30, 100, 1000, 10_000, 100_000] {
            let v = t_quantile(p, df).unwrap();
            assert!(v < prev, "df={df}");
            assert!(v > z, "df={df}: {v} not above normal quantile {z}");
            prev = v;
        }
        assert_abs_diff_eq!(t_quantile(p, 100_000_000).unwrap(), z, epsilon = 1e-6);
    }

    #[test]
    fn t_cdf_round_trips_quantile() {
        for df in [1u64, 4, 19, 120, 5000] {
            for p in [0.51, 0.8, 0.999, 0.999999] {
                let x = t_quantile(p, df).unwrap();
                assert_abs_diff_eq!(t_cdf(x, df).unwrap(), p, epsilon = 1e-11);
            }
        }
    }

    // ---- quantile bound table ----

    #[test]
    fn bound_holds_on_every_valid_row() {
        let t_values = [100, 1_000, 10_000, 100_000, 1_000_000];
        let q_values = [1, 2, 5, 10, 20];
        for row in quantile_bound_table(&t_values, &q_values, 2.0).unwrap() {
            assert!(row.valid);
            assert!(
                row.v_squared <= row.bound,
                "T={}, q={}: {} > {}",
                row.t_horizon,
                row.q,
                row.v_squared,
                row.bound
            );
        }
    }

    #[test]
    fn ratio_at_large_horizon_is_in_unit_interval() {
        let rows = quantile_bound_table(&[1_000_000], &[1], 2.0).unwrap();
        assert!(rows[0].ratio > 0.0 && rows[0].ratio <= 1.0);
    }

    #[test]
    fn v_squared_increases_in_q_at_fixed_horizon() {
        let rows = quantile_bound_table(&[1000], &[1, 2, 5, 10, 20], 2.0).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].v_squared > w[0].v_squared);
        }
    }

    #[test]
    fn below_threshold_rows_are_flagged_not_rejected() {
        let rows = quantile_bound_table(&[20], &[1], 2.0).unwrap();
        assert!(!rows[0].valid);
    }
}
