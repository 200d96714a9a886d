//! Acceptance suite: one test per verifiable claim, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! The Monte-Carlo gates use fixed seeds, so every run checks the same
//! numbers; tolerances are wide enough that the checks are not seed-lotteries.

use bandit_cv::{
    direct_estimate, jackknife_estimate, make_instance, quantile_bound_table, run_experiment,
    sample_gamma, sample_normal, split_estimate, t_quantile, CvStats, PolicySpec, RngStream,
};

fn pass(line: &str) {
    println!("ACCEPTANCE {line}: PASS");
}

// ---------------------------------------------------------------------------
// 1. Squared confidence quantile stays under 3.726·ln T on the whole grid.
// ---------------------------------------------------------------------------
#[test]
fn criterion_01_quantile_bound() {
    let t_values = [100u64, 1_000, 10_000, 100_000, 1_000_000];
    let q_values = [1u64, 2, 5, 10, 20];
    let rows = quantile_bound_table(&t_values, &q_values, 2.0).unwrap();
    assert_eq!(rows.len(), 25);
    for row in &rows {
        assert!(row.valid, "T={} q={} unexpectedly below threshold", row.t_horizon, row.q);
        assert!(
            row.v_squared <= row.bound,
            "bound violated at T={} q={}: {} > {}",
            row.t_horizon,
            row.q,
            row.v_squared,
            row.bound
        );
    }
    pass("01 quantile-bound (V² <= 3.726 ln T on 25-cell grid)");
}

// ---------------------------------------------------------------------------
// Monte-Carlo rig for criteria 2-4: bivariate-normal arm with rho = sqrt(0.5).
// X = V + W, V ~ N(0.6, 0.1), W ~ N(0.3, 0.1); the estimator sees omega = 0.3.
// ---------------------------------------------------------------------------
struct NormalArmMc {
    cv_means: Vec<f64>,
    adjusted_means: Vec<f64>,
    plain_means: Vec<f64>,
    variances_of_mean: Vec<f64>,
}

fn run_normal_mc(s: usize, reps: usize, seed: u64) -> NormalArmMc {
    let mut out = NormalArmMc {
        cv_means: Vec::new(),
        adjusted_means: Vec::with_capacity(reps),
        plain_means: Vec::with_capacity(reps),
        variances_of_mean: Vec::with_capacity(reps),
    };
    out.cv_means.push(0.3);
    let mut rng = RngStream::new(seed, 0);
    for _ in 0..reps {
        let mut stats = CvStats::new(vec![0.3]);
        for _ in 0..s {
            let v = sample_normal(&mut rng, 0.6, 0.1).unwrap();
            let w = sample_normal(&mut rng, 0.3, 0.1).unwrap();
            stats.push(v + w, &[w]).unwrap();
        }
        let est = direct_estimate(&stats).unwrap();
        out.adjusted_means.push(est.mean);
        out.plain_means.push(stats.reward_mean());
        out.variances_of_mean.push(est.variance_of_mean);
    }
    out
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

// ---------------------------------------------------------------------------
// 2. The adjusted mean is unbiased and its variance is (s−2)/(s−q−2)·(1−ρ²)
//    times the plain mean's.
// ---------------------------------------------------------------------------
#[test]
fn criterion_02_estimator_unbiasedness_and_variance_ratio() {
    let reps = 100_000;
    let mc = run_normal_mc(20, reps, 101);
    let (mean_c, var_c) = mean_and_var(&mc.adjusted_means);
    let (_, var_plain) = mean_and_var(&mc.plain_means);

    let se = (var_c / reps as f64).sqrt();
    let bias = (mean_c - 0.9).abs();
    assert!(bias < 4.0 * se, "bias {bias:.2e} vs 4·SE {:.2e}", 4.0 * se);

    // (s−2)/(s−q−2)·(1−ρ²) = (18/17)·0.5 at s = 20, q = 1.
    let ratio = var_c / var_plain;
    let target = 18.0 / 17.0 * 0.5;
    assert!(
        (ratio - target).abs() < 0.03,
        "variance ratio {ratio:.4} vs target {target:.4} +- 0.03"
    );
    pass(&format!(
        "02 estimator-unbiasedness (|bias|={bias:.2e} < 4SE; var-ratio {ratio:.4} in {target:.4}+-0.03)"
    ));
}

// ---------------------------------------------------------------------------
// 3. The variance estimator is unbiased for the adjusted mean's variance.
// ---------------------------------------------------------------------------
#[test]
fn criterion_03_variance_estimator_unbiasedness() {
    let reps = 100_000;
    let mc = run_normal_mc(20, reps, 202);
    let (mean_nu, _) = mean_and_var(&mc.variances_of_mean);
    let (_, var_c) = mean_and_var(&mc.adjusted_means);
    let ratio = mean_nu / var_c;
    assert!((ratio - 1.0).abs() < 0.05, "E[nu]/Var = {ratio:.4}, expected 1 +- 0.05");
    pass(&format!("03 variance-estimator-unbiasedness (E[nu]/Var = {ratio:.4})"));
}

// ---------------------------------------------------------------------------
// 4. Coverage: |μ̂ᶜ − μ| exceeds the confidence radius with frequency at most
//    2/t² (plus Monte-Carlo slack).
// ---------------------------------------------------------------------------
#[test]
fn criterion_04_coverage() {
    let reps = 100_000usize;
    for (t, s, seed) in [(10u32, 5usize, 303u64), (100, 20, 304)] {
        let mc = run_normal_mc(s, reps, seed);
        let p = 1.0 - 1.0 / (t as f64).powi(2);
        let v = t_quantile(p, (s - 2) as u64).unwrap();
        let exceed = mc
            .adjusted_means
            .iter()
            .zip(&mc.variances_of_mean)
            .filter(|(m, nu)| (**m - 0.9).abs() >= v * nu.sqrt())
            .count();
        let freq = exceed as f64 / reps as f64;
        let bound_p = 2.0 / (t as f64).powi(2);
        let se = (bound_p * (1.0 - bound_p) / reps as f64).sqrt();
        assert!(
            freq <= bound_p + 3.0 * se,
            "coverage breach at t={t}, s={s}: {freq:.5} > {:.5}",
            bound_p + 3.0 * se
        );
        pass(&format!(
            "04 coverage t={t} s={s} (exceedance {freq:.5} <= {:.5})",
            bound_p + 3.0 * se
        ));
    }
}

// ---------------------------------------------------------------------------
// 5. Regret ordering on instances 1 and 2: the CV policy beats UCB1 and UCB-V
//    with separated 95% bands, and the UCB family grows sublinearly.
// ---------------------------------------------------------------------------
#[test]
fn criterion_05_regret_ordering() {
    let horizon = 10_000;
    let reps = 100;
    let checkpoints = [2_500usize, 5_000, 10_000];
    for id in [1u32, 2] {
        let inst = make_instance(id, 10).unwrap();
        let mut ids = vec!["ucb-cv", "ucb1", "ucb-v"];
        if id == 1 {
            ids.push("ucb-cv-batching:m=3");
        }
        let specs: Vec<PolicySpec> =
            ids.iter().map(|s| PolicySpec::parse(s).unwrap()).collect();
        let results =
            run_experiment(&inst, &specs, horizon, reps, 7, &checkpoints).unwrap();

        let cv = &results[0];
        for base in &results[1..3] {
            let cv_hi = cv.final_mean() + cv.final_ci();
            let base_lo = base.final_mean() - base.final_ci();
            assert!(
                cv_hi < base_lo,
                "instance {id}: ucb-cv {:.1}+-{:.1} not separated below {} {:.1}+-{:.1}",
                cv.final_mean(),
                cv.final_ci(),
                base.policy,
                base.final_mean(),
                base.final_ci()
            );
        }
        for res in &results {
            let ratio = res.mean_at(10_000).unwrap() / res.mean_at(5_000).unwrap();
            assert!(
                ratio < 1.9,
                "instance {id}: {} regret ratio {ratio:.3} not sublinear",
                res.policy
            );
        }
        pass(&format!(
            "05 regret-ordering instance {id} (ucb-cv {:.1}+-{:.1} < ucb1 {:.1}+-{:.1}, ucb-v {:.1}+-{:.1})",
            results[0].final_mean(),
            results[0].final_ci(),
            results[1].final_mean(),
            results[1].final_ci(),
            results[2].final_mean(),
            results[2].final_ci()
        ));
    }
}

// ---------------------------------------------------------------------------
// 6. Correlation sweep: final regret does not increase with the correlation,
//    up to overlapping confidence bands.
// ---------------------------------------------------------------------------
#[test]
fn criterion_06_correlation_monotonicity() {
    let base = make_instance(5, 10).unwrap();
    let spec = PolicySpec::parse("ucb-cv").unwrap();
    let rows = bandit_cv::correlation_sweep(
        &base,
        &[1.0, 1.5, 2.0, 2.5, 3.0],
        &spec,
        10_000,
        100,
        7,
        &[5_000, 10_000],
    )
    .unwrap();
    // Rows are ordered by var_v ascending, i.e. rho descending.
    for w in rows.windows(2) {
        let (hi_rho, lo_rho) = (&w[0], &w[1]);
        assert!(hi_rho.rho > lo_rho.rho);
        let monotone = hi_rho.result.final_mean() <= lo_rho.result.final_mean();
        let overlap = hi_rho.result.final_mean() - hi_rho.result.final_ci()
            <= lo_rho.result.final_mean() + lo_rho.result.final_ci();
        assert!(
            monotone || overlap,
            "regret increased with correlation without CI overlap: rho {:.4} -> {:.4}, {:.1}+-{:.1} vs {:.1}+-{:.1}",
            lo_rho.rho,
            hi_rho.rho,
            lo_rho.result.final_mean(),
            lo_rho.result.final_ci(),
            hi_rho.result.final_mean(),
            hi_rho.result.final_ci()
        );
    }
    let summary: Vec<String> =
        rows.iter().map(|r| format!("rho={:.3}:{:.0}", r.rho, r.result.final_mean())).collect();
    pass(&format!("06 correlation-monotonicity ({})", summary.join(" ")));
}

// ---------------------------------------------------------------------------
// 7. Approximation-error sweep: CV regret trends up with epsilon (CI slack)
//    while CV-blind baselines are bit-identical across the sweep.
// ---------------------------------------------------------------------------
#[test]
fn criterion_07_epsilon_trend() {
    let base = make_instance(1, 10).unwrap();
    let specs: Vec<PolicySpec> = ["ucb-cv", "ucb1", "ucb-v"]
        .iter()
        .map(|s| PolicySpec::parse(s).unwrap())
        .collect();
    let rows = bandit_cv::epsilon_sweep(
        &base,
        &[0.0, 0.05, 0.1, 0.2],
        &specs,
        10_000,
        100,
        7,
        &[5_000, 10_000],
    )
    .unwrap();

    // CV policy: nondecreasing in epsilon up to CI overlap.
    for w in rows.windows(2) {
        let (lo, hi) = (&w[0].results[0], &w[1].results[0]);
        let monotone = hi.final_mean() >= lo.final_mean();
        let overlap = hi.final_mean() + hi.final_ci() >= lo.final_mean() - lo.final_ci();
        assert!(
            monotone || overlap,
            "regret dropped with epsilon without CI overlap: eps {} -> {}",
            w[0].epsilon,
            w[1].epsilon
        );
    }
    let first = &rows[0].results[0];
    let last = &rows[rows.len() - 1].results[0];
    assert!(
        last.final_mean() + last.final_ci() >= first.final_mean() - first.final_ci(),
        "largest-epsilon regret fell below the unperturbed one beyond CI slack"
    );

    // Baselines never read the CV mean, so their traces are epsilon-invariant.
    for policy_idx in 1..=2 {
        for row in &rows[1..] {
            assert_eq!(
                row.results[policy_idx].mean_regret, rows[0].results[policy_idx].mean_regret,
                "baseline {} is not bit-invariant in epsilon",
                rows[0].results[policy_idx].policy
            );
            assert_eq!(
                row.results[policy_idx].ci_halfwidth,
                rows[0].results[policy_idx].ci_halfwidth
            );
        }
    }
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("eps={}:{:.0}", r.epsilon, r.results[0].final_mean()))
        .collect();
    pass(&format!("07 epsilon-trend ({})", summary.join(" ")));
}

// ---------------------------------------------------------------------------
// 8. Resampling estimators: unbiased on the gamma instance, and the policies
//    they back stay sublinear on instances 2-4.
// ---------------------------------------------------------------------------
#[test]
fn criterion_08a_resampling_unbiasedness() {
    // Arm 1 of instance 3: V ~ Gamma(0.6), W ~ Gamma(0.8), mu = 1.4.
    let (reps, s) = (100_000, 30);
    let mut rng = RngStream::new(505, 0);
    let mut jack = Vec::with_capacity(reps);
    let mut split = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut stats = CvStats::new(vec![0.8]);
        for _ in 0..s {
            let v = sample_gamma(&mut rng, 0.6, 1.0).unwrap();
            let w = sample_gamma(&mut rng, 0.8, 1.0).unwrap();
            stats.push(v + w, &[w]).unwrap();
        }
        jack.push(jackknife_estimate(&stats).unwrap().mean);
        split.push(split_estimate(&stats).unwrap().mean);
    }
    for (name, estimates) in [("jackknife", &jack), ("splitting", &split)] {
        let (mean, var) = mean_and_var(estimates);
        let se = (var / reps as f64).sqrt();
        let bias = (mean - 1.4).abs();
        assert!(bias < 4.0 * se, "{name} bias {bias:.2e} vs 4·SE {:.2e}", 4.0 * se);
        pass(&format!("08a resampling-unbiasedness {name} (|bias|={bias:.2e} < {:.2e})", 4.0 * se));
    }
}

#[test]
fn criterion_08b_resampling_policies_sublinear() {
    let specs: Vec<PolicySpec> = ["ucb-cv-jackknife", "ucb-cv-splitting"]
        .iter()
        .map(|s| PolicySpec::parse(s).unwrap())
        .collect();
    for id in [2u32, 3, 4] {
        let inst = make_instance(id, 10).unwrap();
        let results =
            run_experiment(&inst, &specs, 10_000, 100, 7, &[5_000, 10_000]).unwrap();
        for res in &results {
            let ratio = res.mean_at(10_000).unwrap() / res.mean_at(5_000).unwrap();
            assert!(
                ratio < 1.9,
                "instance {id}: {} ratio {ratio:.3} not sublinear",
                res.policy
            );
            pass(&format!(
                "08b sublinear instance {id} {} (regret(T)/regret(T/2) = {ratio:.3})",
                res.policy
            ));
        }
    }
}

// ---------------------------------------------------------------------------
// 9. Hand-sized oracle equivalence: incremental-sums estimates match naive
//    from-scratch recomputation to 1e-10.
// ---------------------------------------------------------------------------

/// Textbook single-CV recomputation: full passes, no shared sums.
struct NaiveSingle {
    beta: f64,
    mean: f64,
    variance_of_mean: f64,
}

fn naive_single(omega: f64, xs: &[f64], ws: &[f64]) -> NaiveSingle {
    let s = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / s;
    let what = ws.iter().sum::<f64>() / s;
    let num: f64 = xs.iter().zip(ws).map(|(x, w)| (x - mu) * (w - omega)).sum();
    let den: f64 = ws.iter().map(|w| (w - omega) * (w - omega)).sum();
    let beta = num / den;
    let mean = mu + beta * (omega - what);
    let adj: Vec<f64> = xs.iter().zip(ws).map(|(x, w)| x + beta * (omega - w)).collect();
    let ss: f64 = adj.iter().map(|a| (a - mean) * (a - mean)).sum();
    let sigma_c_sq = ss / (s - 2.0);
    let sum_d: f64 = ws.iter().map(|w| w - omega).sum();
    let z = 1.0 / (1.0 - sum_d * sum_d / (s * den));
    NaiveSingle { beta, mean, variance_of_mean: z * sigma_c_sq / s }
}

#[test]
fn criterion_09_naive_oracle_equivalence() {
    let omega = 0.25;
    let xs = [0.9, 1.7, 0.4, 1.1, 1.5];
    let ws = [0.2, 0.6, -0.1, 0.4, 0.3];
    let mut stats = CvStats::new(vec![omega]);
    for (x, w) in xs.iter().zip(&ws) {
        stats.push(*x, &[*w]).unwrap();
    }

    let naive = naive_single(omega, &xs, &ws);
    let beta = bandit_cv::estimate_beta_single(&stats).unwrap();
    let est = direct_estimate(&stats).unwrap();
    assert!((beta - naive.beta).abs() < 1e-10);
    assert!((est.mean - naive.mean).abs() < 1e-10);
    assert!((est.variance_of_mean - naive.variance_of_mean).abs() < 1e-10);

    // Jackknife pseudo-values: Y_j = s·mean − (s−1)·mean_without_j.
    let s = xs.len();
    let jack = jackknife_estimate(&stats).unwrap();
    let split = split_estimate(&stats).unwrap();
    for j in 0..s {
        let keep: Vec<usize> = (0..s).filter(|&r| r != j).collect();
        let loo_x: Vec<f64> = keep.iter().map(|&r| xs[r]).collect();
        let loo_w: Vec<f64> = keep.iter().map(|&r| ws[r]).collect();
        let loo = naive_single(omega, &loo_x, &loo_w);
        let expect_jack = s as f64 * naive.mean - (s - 1) as f64 * loo.mean;
        let expect_split = xs[j] + loo.beta * (omega - ws[j]);
        assert!(
            (jack.pseudo_values[j] - expect_jack).abs() < 1e-10,
            "jackknife pseudo-value {j}"
        );
        assert!(
            (split.pseudo_values[j] - expect_split).abs() < 1e-10,
            "splitting pseudo-value {j}"
        );
    }

    // Two-CV variant: naive 2x2 solve with the same ridge constant.
    let omegas = [0.2, -0.1];
    let xs2 = [1.2, 0.7, 1.9, 0.4, 1.0, 1.6];
    let w1 = [0.3, 0.1, 0.5, -0.2, 0.2, 0.4];
    let w2 = [-0.3, 0.0, -0.2, 0.1, -0.1, -0.4];
    let mut stats2 = CvStats::new(omegas.to_vec());
    for i in 0..6 {
        stats2.push(xs2[i], &[w1[i], w2[i]]).unwrap();
    }
    let s = 6.0;
    let mu = xs2.iter().sum::<f64>() / s;
    let m1 = w1.iter().sum::<f64>() / s;
    let m2 = w2.iter().sum::<f64>() / s;
    let c11: f64 = w1.iter().map(|w| (w - m1) * (w - m1)).sum::<f64>() / (s - 1.0);
    let c22: f64 = w2.iter().map(|w| (w - m2) * (w - m2)).sum::<f64>() / (s - 1.0);
    let c12: f64 =
        w1.iter().zip(&w2).map(|(a, b)| (a - m1) * (b - m2)).sum::<f64>() / (s - 1.0);
    let b1: f64 =
        w1.iter().zip(&xs2).map(|(w, x)| (w - m1) * (x - mu)).sum::<f64>() / (s - 1.0);
    let b2: f64 =
        w2.iter().zip(&xs2).map(|(w, x)| (w - m2) * (x - mu)).sum::<f64>() / (s - 1.0);
    let ridge = 1e-10 * (c11 + c22) / 2.0;
    let (a11, a22) = (c11 + ridge, c22 + ridge);
    let det = a11 * a22 - c12 * c12;
    let beta_naive = [(b1 * a22 - b2 * c12) / det, (b2 * a11 - b1 * c12) / det];
    let beta_multi = bandit_cv::estimate_beta_multi(&stats2).unwrap();
    for j in 0..2 {
        assert!(
            (beta_multi[j] - beta_naive[j]).abs() < 1e-10,
            "matrix coefficient {j}: {} vs {}",
            beta_multi[j],
            beta_naive[j]
        );
    }
    let mean_naive = mu + beta_naive[0] * (omegas[0] - m1) + beta_naive[1] * (omegas[1] - m2);
    let mean_multi = bandit_cv::cv_mean_estimate(&stats2, &beta_multi).unwrap();
    assert!((mean_multi - mean_naive).abs() < 1e-10);

    pass("09 naive-oracle-equivalence (beta, mean, nu, jackknife, splitting, 2-CV matrix)");
}

// ---------------------------------------------------------------------------
// 10. The reproduce subcommand is byte-deterministic.
// ---------------------------------------------------------------------------
#[test]
fn criterion_10_reproduce_determinism() {
    let bin = env!("CARGO_BIN_EXE_bandit-cv");
    let base = std::env::temp_dir().join(format!("bandit-cv-repro-{}", std::process::id()));
    let dirs = [base.join("a"), base.join("b")];
    for dir in &dirs {
        let status = std::process::Command::new(bin)
            .args([
                "reproduce",
                "--seed",
                "7",
                "--T",
                "1500",
                "--R",
                "10",
                "--checkpoints",
                "20",
                "--output",
            ])
            .arg(dir)
            .status()
            .expect("spawn reproduce");
        assert!(status.success(), "reproduce exited with {status:?}");
    }

    let mut csvs: Vec<std::path::PathBuf> = walk_csvs(&dirs[0]);
    csvs.sort();
    assert!(csvs.len() >= 8, "expected a full suite of CSVs, found {}", csvs.len());
    for a_path in &csvs {
        let rel = a_path.strip_prefix(&dirs[0]).unwrap();
        let b_path = dirs[1].join(rel);
        let a = std::fs::read(a_path).unwrap();
        let b = std::fs::read(&b_path)
            .unwrap_or_else(|_| panic!("missing {} in second run", rel.display()));
        assert_eq!(a, b, "CSV differs between runs: {}", rel.display());
    }
    std::fs::remove_dir_all(&base).ok();
    pass(&format!("10 reproduce-determinism ({} CSVs byte-identical)", csvs.len()));
}

fn walk_csvs(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path);
            }
        }
    }
    out
}
