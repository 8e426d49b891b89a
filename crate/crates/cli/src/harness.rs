//! Experiment runners: analytic reports, plan optimization, simulation
//! rows, parameter sweeps, and the approximation-gap comparison, all
//! emitting stable CSV.
//!
//! Determinism contract: re-running any command with the same
//! configuration and seed yields byte-identical output except for the
//! `runtime_s` column, regardless of how trials or sweep points are
//! scheduled across threads.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use freqcache_core::analytic::approx_success;
use freqcache_core::model::{zipf_popularity, CachePolicy, Popularity, SystemConfig};
use freqcache_core::optimizer::{make_baseline, optimize, BaselineKind, OptResult};
use freqcache_core::sim::stream::{derive, TAG_POINT};
use freqcache_core::sim::{dump_realization, estimate_p, generate, window_side, SimOptions};

use crate::config::{config_at, from_core, CliError, ExperimentConfig, SweepAxis};

pub const SWEEP_HEADER: &str = "sweep_value,scheme,M,L_prime,p_analytic,p_hat,ci95,runtime_s,error";
pub const COMPARE_HEADER: &str =
    "sweep_value,M,L_prime,p_analytic,p_hat,ci95,gap,upper_bound,runtime_s,error";

/// Output of one runner: the emitted text plus any operator warnings.
pub struct RunOutput {
    pub text: String,
    pub warnings: Vec<String>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Run-length encoding of an allocation vector as `value x count` pairs,
/// e.g. `5x2,1x18,0x980`.
pub fn rle(q: &[u32]) -> String {
    let mut out = String::new();
    let mut iter = q.iter().peekable();
    while let Some(&v) = iter.next() {
        let mut count = 1usize;
        while iter.peek() == Some(&&v) {
            iter.next();
            count += 1;
        }
        if !out.is_empty() {
            out.push(',');
        }
        let _ = write!(out, "{v}x{count}");
    }
    out
}

fn sanitize(err: String) -> String {
    err.replace([',', '\n'], ";")
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<(String, SystemConfig)>, CliError> {
    match (cfg.axis, cfg.range) {
        (SweepAxis::None, _) => Ok(vec![(String::new(), cfg.sys.clone())]),
        (axis, Some(range)) => Ok(range
            .values()?
            .into_iter()
            .map(|v| (fmt_f64(v), config_at(&cfg.sys, axis, v)))
            .collect()),
        (axis, None) => Err(CliError::Config(format!(
            "axis {} requires a range",
            axis.name()
        ))),
    }
}

fn popularity_for(sys: &SystemConfig) -> Result<Popularity, CliError> {
    zipf_popularity(sys.library_size, sys.zipf_exp).map_err(from_core)
}

fn sim_options(cfg: &ExperimentConfig, point_seed: u64) -> SimOptions {
    SimOptions {
        n_trials: cfg.n_trials,
        base_seed: point_seed,
        bs_per_group: cfg.bs_per_group,
        fixed_ppp: cfg.fixed_ppp,
    }
}

struct SchemeRow {
    m: u32,
    l_prime: usize,
    p_analytic: Option<f64>,
    p_hat: f64,
    ci95: f64,
    warning: Option<String>,
}

fn run_scheme(
    sys: &SystemConfig,
    scheme: BaselineKind,
    cfg: &ExperimentConfig,
    point_seed: u64,
) -> Result<SchemeRow, CliError> {
    sys.validate().map_err(from_core)?;
    let rho = popularity_for(sys)?;
    let spec = make_baseline(scheme, sys, &rho, cfg.m_max).map_err(from_core)?;
    let opts = sim_options(cfg, point_seed);
    let out = estimate_p(sys, &rho, &spec.policy, spec.m, &opts).map_err(from_core)?;
    let warning = out.window_warning.then(|| {
        format!(
            "empty-candidate rate {:.2e} above 1e-3 for scheme {}; enlarge bs_per_group",
            out.diagnostics.empty_candidates as f64 / out.n_users.max(1) as f64,
            scheme.name()
        )
    });
    Ok(SchemeRow {
        m: spec.m,
        l_prime: spec.l_prime,
        p_analytic: spec.p_analytic,
        p_hat: out.p_hat,
        ci95: out.ci95,
        warning,
    })
}

/// One `sweep`/`simulate` CSV data row. Failed rows carry the error in
/// the last column and leave the value cells empty.
fn sweep_row(
    value: &str,
    scheme: BaselineKind,
    result: Result<SchemeRow, CliError>,
    runtime_s: f64,
) -> (String, Option<String>) {
    match result {
        Ok(row) => (
            format!(
                "{},{},{},{},{},{},{},{:.3},",
                value,
                scheme.name(),
                row.m,
                row.l_prime,
                fmt_opt(row.p_analytic),
                fmt_f64(row.p_hat),
                fmt_f64(row.ci95),
                runtime_s
            ),
            row.warning,
        ),
        Err(err) => (
            format!(
                "{},{},,,,,,{:.3},{}",
                value,
                scheme.name(),
                runtime_s,
                sanitize(err.to_string())
            ),
            None,
        ),
    }
}

/// Sweeps the configured axis over every scheme. Schemes at one sweep
/// point share their simulation seed, so comparisons are made under
/// common random numbers.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let points = sweep_points(cfg)?;
    let mut jobs = Vec::new();
    for (vi, (label, sys)) in points.iter().enumerate() {
        for &scheme in &cfg.schemes {
            jobs.push((vi, label.clone(), sys.clone(), scheme));
        }
    }
    let mut rows: Vec<(usize, usize, String, Option<String>)> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(ji, (vi, label, sys, scheme))| {
            let start = Instant::now();
            let point_seed = derive(cfg.base_seed, &[TAG_POINT, vi as u64]);
            let result = run_scheme(&sys, scheme, cfg, point_seed);
            let (line, warning) = sweep_row(&label, scheme, result, start.elapsed().as_secs_f64());
            (vi, ji, line, warning)
        })
        .collect();
    rows.sort_by_key(|&(vi, ji, ..)| (vi, ji));
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    let mut warnings = Vec::new();
    for (_, _, line, warning) in rows {
        text.push_str(&line);
        text.push('\n');
        warnings.extend(warning);
    }
    Ok(RunOutput { text, warnings })
}

/// Simulates the configured schemes at the current operating point; the
/// sweep-value column stays empty. Optionally dumps the trial-zero
/// realization of the first scheme for external visualization.
pub fn run_simulate(
    cfg: &ExperimentConfig,
    dump_path: Option<&std::path::Path>,
) -> Result<RunOutput, CliError> {
    let mut out = {
        let single = ExperimentConfig {
            axis: SweepAxis::None,
            range: None,
            ..cfg.clone()
        };
        run_sweep(&single)?
    };
    if let Some(path) = dump_path {
        let rho = popularity_for(&cfg.sys)?;
        let spec = make_baseline(cfg.schemes[0], &cfg.sys, &rho, cfg.m_max).map_err(from_core)?;
        let side = window_side(&cfg.sys, spec.m, cfg.bs_per_group);
        let point_seed = derive(cfg.base_seed, &[TAG_POINT, 0]);
        let trial_seed = derive(point_seed, &[freqcache_core::sim::stream::TAG_TRIAL, 0]);
        let real = generate(&cfg.sys, &rho, spec.m, side, trial_seed, trial_seed);
        let mut file = std::fs::File::create(path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        dump_realization(&real, &mut file)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        out.warnings
            .push(format!("realization written to {}", path.display()));
    }
    Ok(out)
}

fn optimize_at(sys: &SystemConfig, m_max: u32) -> Result<(OptResult, Popularity), CliError> {
    sys.validate().map_err(from_core)?;
    let rho = popularity_for(sys)?;
    let opt = optimize(sys, &rho, m_max).map_err(from_core)?;
    Ok((opt, rho))
}

/// Optimizes the reuse factor and allocation, emitting key=value lines.
pub fn run_optimize(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (opt, _) = optimize_at(&cfg.sys, cfg.m_max)?;
    let mut text = String::new();
    let _ = writeln!(text, "M_star = {}", opt.m_star);
    let _ = writeln!(text, "L_prime_star = {}", opt.l_prime_star);
    let _ = writeln!(text, "q = {}", rle(&opt.q_int.q));
    let _ = writeln!(text, "upper_bound = {}", fmt_f64(opt.upper_bound));
    let _ = writeln!(text, "achieved = {}", fmt_f64(opt.achieved));
    Ok(RunOutput {
        text,
        warnings: Vec::new(),
    })
}

/// Optimizes, then reports the closed-form success probabilities at the
/// chosen plan: summary lines followed by a per-file CSV block
/// (1-based file indices).
pub fn run_analytic(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (opt, rho) = optimize_at(&cfg.sys, cfg.m_max)?;
    let report = approx_success(&opt.q_int, &cfg.sys, &rho).map_err(from_core)?;
    let mut text = String::new();
    let _ = writeln!(text, "M = {}", opt.m_star);
    let _ = writeln!(text, "L_prime = {}", opt.l_prime_star);
    let _ = writeln!(text, "q = {}", rle(&opt.q_int.q));
    let _ = writeln!(text, "aggregate_p = {}", fmt_f64(report.aggregate_p));
    let _ = writeln!(text, "g_tilde = {}", fmt_f64(report.g_tilde));
    let _ = writeln!(text, "beta = {}", fmt_f64(report.beta));
    let _ = writeln!(text, "file,rho,q,p_file");
    for (idx, &p) in report.per_file_p.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            idx + 1,
            fmt_f64(rho.probs()[idx]),
            opt.q_int.q[idx],
            fmt_f64(p)
        );
    }
    Ok(RunOutput {
        text,
        warnings: Vec::new(),
    })
}

/// Approximation-gap table for the joint design: per sweep value, the
/// closed-form value at the rounded plan, the simulated estimate, their
/// gap, and the relaxed upper bound.
pub fn compare_approximation(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let points = sweep_points(cfg)?;
    let mut rows: Vec<(usize, String, Option<String>)> = points
        .into_par_iter()
        .enumerate()
        .map(|(vi, (label, sys))| {
            let start = Instant::now();
            let point_seed = derive(cfg.base_seed, &[TAG_POINT, vi as u64]);
            let result = (|| -> Result<(OptResult, f64, f64), CliError> {
                let (opt, rho) = optimize_at(&sys, cfg.m_max)?;
                let opts = sim_options(cfg, point_seed);
                let sim = estimate_p(
                    &sys,
                    &rho,
                    &CachePolicy::Grouped(opt.q_int.clone()),
                    opt.m_star,
                    &opts,
                )
                .map_err(from_core)?;
                Ok((opt, sim.p_hat, sim.ci95))
            })();
            let runtime = start.elapsed().as_secs_f64();
            match result {
                Ok((opt, p_hat, ci95)) => {
                    let gap = (opt.achieved - p_hat).abs();
                    let line = format!(
                        "{},{},{},{},{},{},{},{},{:.3},",
                        label,
                        opt.m_star,
                        opt.l_prime_star,
                        fmt_f64(opt.achieved),
                        fmt_f64(p_hat),
                        fmt_f64(ci95),
                        fmt_f64(gap),
                        fmt_f64(opt.upper_bound),
                        runtime
                    );
                    (vi, line, None)
                }
                Err(err) => (
                    vi,
                    format!(
                        "{},,,,,,,,{:.3},{}",
                        label,
                        runtime,
                        sanitize(err.to_string())
                    ),
                    None,
                ),
            }
        })
        .collect();
    rows.sort_by_key(|&(vi, ..)| vi);
    let mut text = String::from(COMPARE_HEADER);
    text.push('\n');
    for (_, line, _) in rows {
        text.push_str(&line);
        text.push('\n');
    }
    Ok(RunOutput {
        text,
        warnings: Vec::new(),
    })
}
