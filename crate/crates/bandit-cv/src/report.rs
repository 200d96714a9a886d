//! Result persistence: CSV tables, a JSON metadata sidecar, and a
//! dependency-free SVG line chart of cumulative regret.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::ExperimentResult;
use crate::special::QuantileBoundRow;

/// 17 significant digits: enough for exact f64 round-trips.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes a prebuilt text file, creating parent directories.
pub fn write_file_string(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

/// Writes experiment results as CSV with the fixed column order
/// policy, instance, checkpoint_round, mean_regret, ci_halfwidth, R, seed.
pub fn write_results_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let mut out = String::from("policy,instance,checkpoint_round,mean_regret,ci_halfwidth,R,seed\n");
    for res in results {
        for (i, &round) in res.checkpoints.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                res.policy,
                res.instance,
                round,
                format_f64(res.mean_regret[i]),
                format_f64(res.ci_halfwidth[i]),
                res.repetitions,
                res.base_seed
            );
        }
    }
    write_file(path, &out)
}

/// Writes the quantile-vs-bound table: T, q, V_squared, bound_3726_logT, ratio.
pub fn write_quantile_csv(path: &Path, rows: &[QuantileBoundRow]) -> Result<()> {
    let mut out = String::from("T,q,V_squared,bound_3726_logT,ratio\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.t_horizon,
            row.q,
            format_f64(row.v_squared),
            format_f64(row.bound),
            format_f64(row.ratio)
        );
    }
    write_file(path, &out)
}

/// The JSON sidecar written next to every result file.
#[derive(Serialize)]
pub struct RunMetadata<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub sweep: serde_json::Value,
    pub library_version: &'a str,
    pub wall_clock_secs: f64,
    pub created_unix_secs: u64,
}

pub fn write_metadata_json(
    path: &Path,
    command: &str,
    config: &RunConfig,
    sweep: serde_json::Value,
    wall_clock_secs: f64,
) -> Result<()> {
    let meta = RunMetadata {
        command,
        config,
        sweep,
        library_version: env!("CARGO_PKG_VERSION"),
        wall_clock_secs,
        created_unix_secs: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("serialize metadata: {e}")))?;
    write_file(path, &text)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders cumulative regret vs round: one polyline per policy with a
/// translucent 95%-CI band, legend, and labeled linear axes. Self-contained
/// SVG 1.1, no external references.
pub fn emit_svg(results: &[ExperimentResult], path: &Path) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Config("cannot plot an empty result list".into()));
    }
    for res in results {
        if res.checkpoints.len() < 2 {
            return Err(Error::Config(format!(
                "policy {} has {} checkpoints; plotting needs at least 2",
                res.policy,
                res.checkpoints.len()
            )));
        }
    }

    let (width, height) = (880.0, 540.0);
    let (left, right, top, bottom) = (80.0, 200.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_max = results
        .iter()
        .flat_map(|r| r.checkpoints.iter())
        .copied()
        .max()
        .unwrap_or(1) as f64;
    let mut y_max = 0.0f64;
    for r in results {
        for (m, c) in r.mean_regret.iter().zip(&r.ci_halfwidth) {
            y_max = y_max.max(m + c);
        }
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;

    let to_x = |round: f64| left + round / x_max * plot_w;
    let to_y = |v: f64| top + plot_h - (v / y_max * plot_h).clamp(0.0, plot_h);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);

    // Axes.
    let x0 = left;
    let y0 = top + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{:.2}" y2="{y0}" stroke="black" stroke-width="1"/>"#,
        left + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{top}" stroke="black" stroke-width="1"/>"#
    );

    // Ticks and grid.
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let xv = frac * x_max;
        let x = to_x(xv);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            tick_label(xv)
        );
        let yv = frac * y_max;
        let y = to_y(yv);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            tick_label(yv)
        );
        if i > 0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
                left + plot_w
            );
        }
    }

    // Axis labels.
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">round</text>"#,
        left + plot_w / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-weight="bold" transform="rotate(-90 20 {:.2})">cumulative regret</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    // Series: CI band then mean line.
    for (idx, res) in results.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut band = String::new();
        for (i, &round) in res.checkpoints.iter().enumerate() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                to_x(round as f64),
                to_y(res.mean_regret[i] + res.ci_halfwidth[i])
            );
        }
        for (i, &round) in res.checkpoints.iter().enumerate().rev() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                to_x(round as f64),
                to_y((res.mean_regret[i] - res.ci_halfwidth[i]).max(0.0))
            );
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
            band.trim_end()
        );

        let mut line = String::new();
        for (i, &round) in res.checkpoints.iter().enumerate() {
            let _ = write!(line, "{:.2},{:.2} ", to_x(round as f64), to_y(res.mean_regret[i]));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            line.trim_end()
        );

        // Legend entry.
        let ly = top + 10.0 + idx as f64 * 20.0;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="14" fill="{color}"/>"#,
            ly - 11.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
            lx + 20.0,
            xml_escape(&res.policy)
        );
    }

    let _ = writeln!(svg, "</svg>");
    write_file(path, &svg)
}

/// Convenience bundle: CSV + SVG + JSON sidecar under one stem.
pub fn write_experiment_outputs(
    output_dir: &Path,
    stem: &str,
    results: &[ExperimentResult],
    command: &str,
    config: &RunConfig,
    sweep: serde_json::Value,
    wall_clock_secs: f64,
) -> Result<Vec<PathBuf>> {
    let csv = output_dir.join(format!("{stem}.csv"));
    let svg = output_dir.join(format!("{stem}.svg"));
    let json = output_dir.join(format!("{stem}.json"));
    write_results_csv(&csv, results)?;
    emit_svg(results, &svg)?;
    write_metadata_json(&json, command, config, sweep, wall_clock_secs)?;
    Ok(vec![csv, svg, json])
}
