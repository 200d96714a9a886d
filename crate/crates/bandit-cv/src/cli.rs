//! Command-line interface: `run`, `sweep-correlation`, `sweep-epsilon`,
//! `quantile-table`, and `reproduce` (the full built-in experiment suite).
//!
//! Exit codes: 0 success, 2 configuration/usage errors, 1 runtime failures.
//! `BANDIT_CV_THREADS` caps worker threads (default: all cores).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{InstanceSpec, PolicyConfig, RunConfig};
use crate::error::{Error, Result};
use crate::harness::{correlation_sweep, epsilon_sweep, run_experiment, ExperimentResult};
use crate::report::{
    format_f64, write_experiment_outputs, write_file_string, write_quantile_csv,
};
use crate::special::quantile_bound_table;

#[derive(Parser, Debug)]
#[command(
    name = "bandit-cv",
    version,
    about = "Multi-armed bandit simulations with control variates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a set of policies on one instance and write CSV/JSON/SVG results.
    Run(RunArgs),
    /// Sweep the component variance var_v (and so the reward/CV correlation).
    SweepCorrelation(SweepCorrelationArgs),
    /// Sweep the CV-mean approximation error ε.
    SweepEpsilon(SweepEpsilonArgs),
    /// Tabulate the squared confidence quantile against 3.726·ln T.
    QuantileTable(QuantileTableArgs),
    /// Run the full built-in experiment suite with one seed.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in instance id (1..=5).
    #[arg(long)]
    pub instance: Option<u32>,
    /// Comma-separated policy ids (e.g. ucb-cv,ucb1,ucb-cv-batching:m=3).
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
    /// Horizon: rounds per episode.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// Independent repetitions.
    #[arg(long = "R")]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of evenly spaced checkpoints.
    #[arg(long)]
    pub checkpoints: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Exploration exponent applied to every policy.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Range scale applied to the ucb1/ucb-v bonuses.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepCorrelationArgs {
    /// Base instance family.
    #[arg(long, default_value_t = 5)]
    pub instance: u32,
    /// var_v grid.
    #[arg(long = "var-v", value_delimiter = ',', default_value = "1.0,1.5,2.0,2.5,3.0")]
    pub var_v: Vec<f64>,
    /// Policy to sweep.
    #[arg(long, default_value = "ucb-cv")]
    pub policy: String,
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long = "R", default_value_t = 100)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub checkpoints: usize,
    #[arg(long, short, default_value = "results")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepEpsilonArgs {
    #[arg(long, default_value_t = 1)]
    pub instance: u32,
    /// ε grid added to the declared CV means.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.2")]
    pub epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "ucb-cv,ucb1,ucb-v")]
    pub policies: Vec<String>,
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long = "R", default_value_t = 100)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub checkpoints: usize,
    #[arg(long, short, default_value = "results")]
    pub output: PathBuf,
    /// Range scale for the ucb1/ucb-v baselines.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Args, Debug)]
pub struct QuantileTableArgs {
    /// Horizon grid; scientific notation like 1e6 is accepted.
    #[arg(long = "T", value_delimiter = ',', value_parser = parse_horizon,
          default_value = "100,1000,10000,100000,1000000")]
    pub t_values: Vec<u64>,
    /// CV-count grid.
    #[arg(long = "q", value_delimiter = ',', default_value = "1,2,5,10,20")]
    pub q_values: Vec<u64>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, short, default_value = "results")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long = "R", default_value_t = 100)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 100)]
    pub checkpoints: usize,
    #[arg(long, short, default_value = "results")]
    pub output: PathBuf,
}

fn parse_horizon(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if f >= 1.0 && f.fract() == 0.0 && f < 9.0e15 {
        Ok(f as u64)
    } else {
        Err(format!("not a positive integer: {s}"))
    }
}

/// Caps the rayon pool from BANDIT_CV_THREADS; silently keeps the default
/// when unset or unparsable.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("BANDIT_CV_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepCorrelation(args) => cmd_sweep_correlation(args),
        Command::SweepEpsilon(args) => cmd_sweep_epsilon(args),
        Command::QuantileTable(args) => cmd_quantile_table(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let instance = args
                .instance
                .ok_or_else(|| Error::Config("--instance (or --config) is required".into()))?;
            let ids = args
                .policies
                .clone()
                .ok_or_else(|| Error::Config("--policies (or --config) is required".into()))?;
            RunConfig {
                instance: InstanceSpec::Builtin(instance),
                policies: ids.iter().map(|id| PolicyConfig::from_id(id)).collect(),
                horizon: 10_000,
                repetitions: 100,
                base_seed: 0,
                checkpoints: 100,
                output_dir: PathBuf::from("results"),
            }
        }
    };
    if args.config.is_some() {
        if let Some(id) = args.instance {
            cfg.instance = InstanceSpec::Builtin(id);
        }
        if let Some(ids) = &args.policies {
            cfg.policies = ids.iter().map(|id| PolicyConfig::from_id(id)).collect();
        }
    }
    if let Some(t) = args.horizon {
        cfg.horizon = t;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(c) = args.checkpoints {
        cfg.checkpoints = c;
    }
    if let Some(o) = args.output {
        cfg.output_dir = o;
    }
    if let Some(a) = args.alpha {
        for p in &mut cfg.policies {
            p.alpha = a;
        }
    }
    if let Some(b) = args.scale {
        for p in &mut cfg.policies {
            p.scale = b;
        }
    }
    cfg.validate()?;

    let started = Instant::now();
    let instance = cfg.instance.build(10)?;
    let results = run_experiment(
        &instance,
        &cfg.policy_specs()?,
        cfg.horizon,
        cfg.repetitions,
        cfg.base_seed,
        &cfg.checkpoint_rounds(),
    )?;
    let stem = format!("run-{}", instance.name);
    let files = write_experiment_outputs(
        &cfg.output_dir,
        &stem,
        &results,
        "run",
        &cfg,
        serde_json::Value::Null,
        started.elapsed().as_secs_f64(),
    )?;
    print_summary(&results);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep_correlation(args: SweepCorrelationArgs) -> Result<()> {
    let cfg = RunConfig {
        instance: InstanceSpec::Builtin(args.instance),
        policies: vec![PolicyConfig::from_id(&args.policy)],
        horizon: args.horizon,
        repetitions: args.repetitions,
        base_seed: args.seed,
        checkpoints: args.checkpoints,
        output_dir: args.output.clone(),
    };
    cfg.validate()?;
    let started = Instant::now();
    let base = cfg.instance.build(10)?;
    let spec = cfg.policies[0].to_spec()?;
    let rows = correlation_sweep(
        &base,
        &args.var_v,
        &spec,
        cfg.horizon,
        cfg.repetitions,
        cfg.base_seed,
        &cfg.checkpoint_rounds(),
    )?;

    // One plotted series per correlation level.
    let mut plot: Vec<ExperimentResult> = Vec::new();
    let mut flat: Vec<ExperimentResult> = Vec::new();
    let mut summary = String::from("var_v,rho,final_mean_regret,final_ci_halfwidth\n");
    for row in &rows {
        flat.push(row.result.clone());
        let mut labeled = row.result.clone();
        labeled.policy = format!("rho={:.4}", row.rho);
        plot.push(labeled);
        summary.push_str(&format!(
            "{},{},{},{}\n",
            row.var_v,
            format_f64(row.rho),
            format_f64(row.result.final_mean()),
            format_f64(row.result.final_ci())
        ));
    }
    crate::report::write_results_csv(&cfg.output_dir.join("correlation-sweep.csv"), &flat)?;
    crate::report::emit_svg(&plot, &cfg.output_dir.join("correlation-sweep.svg"))?;
    write_file_string(&cfg.output_dir.join("correlation-sweep-summary.csv"), &summary)?;
    crate::report::write_metadata_json(
        &cfg.output_dir.join("correlation-sweep.json"),
        "sweep-correlation",
        &cfg,
        json!({ "var_v": args.var_v, "rho": rows.iter().map(|r| r.rho).collect::<Vec<_>>() }),
        started.elapsed().as_secs_f64(),
    )?;
    for row in &rows {
        println!(
            "var_v={:<4} rho={:.4} final regret {:.2} +- {:.2}",
            row.var_v,
            row.rho,
            row.result.final_mean(),
            row.result.final_ci()
        );
    }
    Ok(())
}

fn cmd_sweep_epsilon(args: SweepEpsilonArgs) -> Result<()> {
    let mut policies: Vec<PolicyConfig> =
        args.policies.iter().map(|id| PolicyConfig::from_id(id)).collect();
    for p in &mut policies {
        p.scale = args.scale;
    }
    let cfg = RunConfig {
        instance: InstanceSpec::Builtin(args.instance),
        policies,
        horizon: args.horizon,
        repetitions: args.repetitions,
        base_seed: args.seed,
        checkpoints: args.checkpoints,
        output_dir: args.output.clone(),
    };
    cfg.validate()?;
    let started = Instant::now();
    let base = cfg.instance.build(10)?;
    let specs = cfg.policy_specs()?;
    let rows = epsilon_sweep(
        &base,
        &args.epsilon,
        &specs,
        cfg.horizon,
        cfg.repetitions,
        cfg.base_seed,
        &cfg.checkpoint_rounds(),
    )?;

    let stem = format!("epsilon-sweep-{}", base.name);
    let mut flat: Vec<ExperimentResult> = Vec::new();
    let mut plot: Vec<ExperimentResult> = Vec::new();
    let mut summary = String::from("epsilon,policy,final_mean_regret,final_ci_halfwidth\n");
    for row in &rows {
        for res in &row.results {
            flat.push(res.clone());
            let mut labeled = res.clone();
            labeled.policy = format!("{} eps={}", res.policy, row.epsilon);
            plot.push(labeled);
            summary.push_str(&format!(
                "{},{},{},{}\n",
                row.epsilon,
                res.policy,
                format_f64(res.final_mean()),
                format_f64(res.final_ci())
            ));
        }
    }
    crate::report::write_results_csv(&cfg.output_dir.join(format!("{stem}.csv")), &flat)?;
    crate::report::emit_svg(&plot, &cfg.output_dir.join(format!("{stem}.svg")))?;
    write_file_string(&cfg.output_dir.join(format!("{stem}-summary.csv")), &summary)?;
    crate::report::write_metadata_json(
        &cfg.output_dir.join(format!("{stem}.json")),
        "sweep-epsilon",
        &cfg,
        json!({ "epsilon": args.epsilon }),
        started.elapsed().as_secs_f64(),
    )?;
    for line in summary.lines().skip(1) {
        println!("{line}");
    }
    Ok(())
}

fn cmd_quantile_table(args: QuantileTableArgs) -> Result<()> {
    let rows = quantile_bound_table(&args.t_values, &args.q_values, args.alpha)?;
    for row in rows.iter().filter(|r| !r.valid) {
        eprintln!(
            "warning: T={} is below the validity threshold for q={}; bound not claimed",
            row.t_horizon, row.q
        );
    }
    let path = args.output.join("quantile-table.csv");
    write_quantile_csv(&path, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<()> {
    let comparison = ["ucb-cv", "ucb1", "ucb-v", "thompson"];

    // Regret comparison on the two normal instances.
    for id in [1u32, 2] {
        let run_args = RunArgs {
            config: None,
            instance: Some(id),
            policies: Some(comparison.iter().map(|s| s.to_string()).collect()),
            horizon: Some(args.horizon),
            repetitions: Some(args.repetitions),
            seed: Some(args.seed),
            checkpoints: Some(args.checkpoints),
            output: Some(args.output.clone()),
            alpha: None,
            scale: None,
        };
        eprintln!("[reproduce] regret comparison on instance {id}");
        cmd_run(run_args)?;
    }

    // Regret vs correlation on the instance-5 family.
    eprintln!("[reproduce] correlation sweep on instance 5");
    cmd_sweep_correlation(SweepCorrelationArgs {
        instance: 5,
        var_v: vec![1.0, 1.5, 2.0, 2.5, 3.0],
        policy: "ucb-cv".into(),
        horizon: args.horizon,
        repetitions: args.repetitions,
        seed: args.seed,
        checkpoints: args.checkpoints,
        output: args.output.clone(),
    })?;

    // Resampling estimators on instances 2-4.
    for id in [2u32, 3, 4] {
        let run_args = RunArgs {
            config: None,
            instance: Some(id),
            policies: Some(
                ["ucb-cv", "ucb-cv-jackknife", "ucb-cv-splitting", "ucb-cv-batching:m=3"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            ),
            horizon: Some(args.horizon),
            repetitions: Some(args.repetitions),
            seed: Some(args.seed),
            checkpoints: Some(args.checkpoints),
            output: Some(args.output.join("resampling")),
            alpha: None,
            scale: None,
        };
        eprintln!("[reproduce] resampling comparison on instance {id}");
        cmd_run(run_args)?;
    }

    // CV-mean approximation error on instances 1, 2 and 5.
    for id in [1u32, 2, 5] {
        // Instance 5 rewards span more than one unit, so the bounded-range
        // baselines get the wider confidence scale.
        let scale = if id == 5 { 6.0 } else { 1.0 };
        eprintln!("[reproduce] epsilon sweep on instance {id}");
        cmd_sweep_epsilon(SweepEpsilonArgs {
            instance: id,
            epsilon: vec![0.0, 0.05, 0.1, 0.2],
            policies: comparison.iter().map(|s| s.to_string()).collect(),
            horizon: args.horizon,
            repetitions: args.repetitions,
            seed: args.seed,
            checkpoints: args.checkpoints,
            output: args.output.clone(),
            scale,
        })?;
    }

    eprintln!("[reproduce] done");
    Ok(())
}

fn print_summary(results: &[ExperimentResult]) {
    for res in results {
        println!(
            "{:<24} {:<22} final regret {:>10.2} +- {:.2}",
            res.policy,
            res.instance,
            res.final_mean(),
            res.final_ci()
        );
    }
}
