//! Seeded `(N, theta)` sweeps over several methods.
//!
//! Each trial `(N, theta, t)` draws its instance from
//! `seed = base_seed + cell_hash(N, theta, t)` (wrapping), where
//! `cell_hash` chains SplitMix64 over `N`, the IEEE bits of `theta`, and `t`.
//! The signal uses `seed` directly and the kernel uses `splitmix64(seed)`.
//! Seeds depend only on the trial's own coordinates, so resizing one cell
//! never perturbs another, and every method sees the same instances.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use web_time::Instant;

use crate::bilinear::Homotopy;
use crate::data::{fmt_f64, gen_bernoulli_gaussian, gen_gaussian_kernel, BernoulliGaussianSpec};
use crate::error::{Error, Result};
use crate::harness::method::{solve, Method, SolveReport, SolverSettings};
use crate::lifting::convolve;
use crate::metrics::{classify_trial, recovery_error, TrialRecord, E_THR};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n_values: Vec<usize>,
    pub theta_values: Vec<f64>,
    pub kernel_len: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub e_thr: f64,
    /// When false, `wall_seconds` is written as zero so repeated sweeps
    /// produce byte-identical files.
    pub record_wall_time: bool,
}

impl Default for SweepGrid {
    /// A desk-scale grid: coarser than the full 100-trial study, same axes.
    fn default() -> Self {
        SweepGrid {
            n_values: vec![100, 400, 800],
            theta_values: vec![0.025, 0.1, 0.2],
            kernel_len: 10,
            trials: 20,
            methods: Method::ALL.to_vec(),
            base_seed: 1,
            e_thr: E_THR,
            record_wall_time: true,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| {
            Err(Error::Config {
                key: key.into(),
                message: message.into(),
            })
        };
        if self.n_values.is_empty() {
            return bad("N_values", "must not be empty");
        }
        if self.theta_values.is_empty() {
            return bad("theta_values", "must not be empty");
        }
        if self.methods.is_empty() {
            return bad("methods", "must not be empty");
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1");
        }
        if !(self.e_thr > 0.0) {
            return bad("e_thr", "must be positive");
        }
        if self.kernel_len == 0 {
            return bad("M", "must be at least 1");
        }
        if self.n_values.iter().any(|&n| n < self.kernel_len) {
            return bad("N_values", "every N must be at least M");
        }
        if self.theta_values.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad("theta_values", "every theta must lie in [0, 1]");
        }
        Ok(())
    }
}

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(base_seed: u64, n: usize, theta: f64, trial: usize) -> u64 {
    let h = splitmix64(n as u64);
    let h = splitmix64(h ^ theta.to_bits());
    let h = splitmix64(h ^ trial as u64);
    base_seed.wrapping_add(h)
}

/// A generated `(x0, h0, y)` triple.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x0: Vec<f64>,
    pub h0: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn make_instance(n: usize, m: usize, theta: f64, seed: u64) -> Result<Instance> {
    let x0 = gen_bernoulli_gaussian(&BernoulliGaussianSpec {
        len: n,
        theta,
        seed,
    })?;
    let h0 = gen_gaussian_kernel(m, splitmix64(seed))?;
    let y = convolve(&x0, &h0).into_inner();
    Ok(Instance {
        x0: x0.into_inner(),
        h0: h0.into_inner(),
        y,
    })
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    n: usize,
    theta: f64,
    trial: usize,
}

fn run_job<F>(job: Job, grid: &SweepGrid, solver: &F) -> TrialRecord
where
    F: Fn(Method, &[f64], usize) -> Result<SolveReport>,
{
    let seed = trial_seed(grid.base_seed, job.n, job.theta, job.trial);
    let m = grid.kernel_len;
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<(f64, usize)> {
        let inst = make_instance(job.n, m, job.theta, seed)?;
        let report = solver(job.method, &inst.y, m)?;
        Ok((
            recovery_error(&report.factors.h, &inst.h0, job.n),
            report.iterations,
        ))
    }));
    let wall_seconds = if grid.record_wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let (e_rec, iterations) = match outcome {
        Ok(Ok((e, it))) if e.is_finite() => (e, it),
        Ok(Ok((_, it))) => (f64::INFINITY, it),
        _ => (f64::INFINITY, 0),
    };
    TrialRecord {
        method: job.method.name().to_string(),
        n: job.n,
        m,
        theta: job.theta,
        seed,
        e_rec,
        success: classify_trial(e_rec, grid.e_thr),
        iterations,
        wall_seconds,
    }
}

/// Runs every `(method, N, theta, trial)` job. Records come back ordered by
/// method, then `N`, then `theta`, then trial, in grid order, regardless of
/// how the jobs were scheduled.
pub fn run_sweep(grid: &SweepGrid, settings: &SolverSettings) -> Result<Vec<TrialRecord>> {
    run_sweep_with(grid, |method, y, m| solve(method, y, m, settings))
}

/// [`run_sweep`] with a caller-supplied solver. A solver that errors or
/// panics on one trial costs only that trial, which is recorded as a failure
/// with `e_rec = inf`.
pub fn run_sweep_with<F>(grid: &SweepGrid, solver: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(Method, &[f64], usize) -> Result<SolveReport> + Sync,
{
    grid.validate()?;
    let mut jobs = Vec::new();
    for &method in &grid.methods {
        for &n in &grid.n_values {
            for &theta in &grid.theta_values {
                for trial in 0..grid.trials {
                    jobs.push(Job {
                        method,
                        n,
                        theta,
                        trial,
                    });
                }
            }
        }
    }
    #[cfg(feature = "parallel")]
    let records = {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&j| run_job(j, grid, &solver))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records = jobs.iter().map(|&j| run_job(j, grid, &solver)).collect();
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Mean `e_rec` over successful trials; `None` if there were none.
    pub mean_success_error: Option<f64>,
    pub mean_iterations: f64,
    pub mean_wall_seconds: f64,
}

/// Aggregates records per `(method, N, theta)` cell, keeping the order in
/// which cells first appear.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(String, usize, u64)> = Vec::new();
    let mut cells: BTreeMap<(String, usize, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.method.clone(), r.n, r.theta.to_bits());
        cells
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &cells[&key];
            let trials = rs.len();
            let successes: Vec<f64> = rs.iter().filter(|r| r.success).map(|r| r.e_rec).collect();
            let failures = trials - successes.len();
            CellSummary {
                method: key.0.clone(),
                n: key.1,
                m: rs[0].m,
                theta: rs[0].theta,
                trials,
                failures,
                failure_rate: failures as f64 / trials as f64,
                mean_success_error: (!successes.is_empty())
                    .then(|| successes.iter().sum::<f64>() / successes.len() as f64),
                mean_iterations: rs.iter().map(|r| r.iterations as f64).sum::<f64>()
                    / trials as f64,
                mean_wall_seconds: rs.iter().map(|r| r.wall_seconds).sum::<f64>() / trials as f64,
            }
        })
        .collect()
}

pub fn summary_csv_bytes(cells: &[CellSummary]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "N",
        "M",
        "theta",
        "trials",
        "failures",
        "failure_rate",
        "mean_success_error",
        "mean_iterations",
        "mean_wall_seconds",
    ])
    .expect("in-memory write");
    for c in cells {
        w.write_record([
            c.method.clone(),
            c.n.to_string(),
            c.m.to_string(),
            fmt_f64(c.theta),
            c.trials.to_string(),
            c.failures.to_string(),
            fmt_f64(c.failure_rate),
            c.mean_success_error
                .map_or_else(|| "NaN".to_string(), fmt_f64),
            fmt_f64(c.mean_iterations),
            fmt_f64(c.mean_wall_seconds),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `results.csv` -> `results.summary.csv`.
pub fn summary_path(results: &Path) -> std::path::PathBuf {
    let stem = results
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    results.with_file_name(format!("{stem}.summary.csv"))
}

/// Sweep settings read from a TOML key-value file.
///
/// ```toml
/// N_values = [100, 400, 800]
/// theta_values = [0.025, 0.1, 0.2]
/// M = 10
/// trials = 20
/// methods = ["roco", "adm"]
/// base_seed = 1
/// e_thr = 0.01
/// record_wall_time = true
///
/// [roco]
/// rho = 2.0
///
/// [bilinear]
/// momentum = 0.9
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub settings: SolverSettings,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn get_f64(v: &toml::Value, key: &str) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(config_err(
            key,
            format!("expected a number, found {}", other.type_str()),
        )),
    }
}

fn get_usize(v: &toml::Value, key: &str) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(config_err(
            key,
            format!("expected a non-negative integer, found {other}"),
        )),
    }
}

fn get_array<'a>(v: &'a toml::Value, key: &str) -> Result<&'a Vec<toml::Value>> {
    v.as_array()
        .ok_or_else(|| config_err(key, format!("expected an array, found {}", v.type_str())))
}

fn section_keys<'a>(
    table: &'a toml::Table,
    section: &str,
    allowed: &[&str],
) -> Result<Vec<(String, &'a toml::Value)>> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(config_err(&format!("{section}.{k}"), "unknown key"));
        }
    }
    Ok(table
        .iter()
        .map(|(k, v)| (format!("{section}.{k}"), v))
        .collect())
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let message = e.message().to_string();
            config_err("<syntax>", message)
        })?;
        let mut grid = SweepGrid::default();
        let mut settings = SolverSettings::default();
        for (key, value) in &table {
            match key.as_str() {
                "N_values" => {
                    grid.n_values = get_array(value, key)?
                        .iter()
                        .map(|v| get_usize(v, key))
                        .collect::<Result<_>>()?
                }
                "theta_values" => {
                    grid.theta_values = get_array(value, key)?
                        .iter()
                        .map(|v| get_f64(v, key))
                        .collect::<Result<_>>()?
                }
                "M" => grid.kernel_len = get_usize(value, key)?,
                "trials" => grid.trials = get_usize(value, key)?,
                "base_seed" => grid.base_seed = get_usize(value, key)? as u64,
                "e_thr" => grid.e_thr = get_f64(value, key)?,
                "record_wall_time" => {
                    grid.record_wall_time = value.as_bool().ok_or_else(|| {
                        config_err(
                            key,
                            format!("expected a boolean, found {}", value.type_str()),
                        )
                    })?
                }
                "methods" => {
                    grid.methods = get_array(value, key)?
                        .iter()
                        .map(|v| {
                            v.as_str()
                                .ok_or_else(|| config_err(key, "method names must be strings"))?
                                .parse::<Method>()
                                .map_err(|e| config_err(key, e.to_string()))
                        })
                        .collect::<Result<_>>()?
                }
                "roco" => {
                    let t = value
                        .as_table()
                        .ok_or_else(|| config_err(key, "expected a table"))?;
                    for (k, v) in section_keys(
                        t,
                        "roco",
                        &["rho", "max_iters", "tol", "svd_tol", "svd_max_iters"],
                    )? {
                        let r = &mut settings.roco;
                        match k.as_str() {
                            "roco.rho" => r.rho = get_f64(v, &k)?,
                            "roco.max_iters" => r.max_iters = get_usize(v, &k)?,
                            "roco.tol" => r.tol = get_f64(v, &k)?,
                            "roco.svd_tol" => r.svd_tol = get_f64(v, &k)?,
                            _ => r.svd_max_iters = get_usize(v, &k)?,
                        }
                    }
                }
                "bilinear" => {
                    let t = value
                        .as_table()
                        .ok_or_else(|| config_err(key, "expected a table"))?;
                    let allowed = [
                        "lambda",
                        "max_iters",
                        "tol",
                        "momentum",
                        "lambda_init",
                        "lambda_final",
                        "eta",
                        "inner_iters",
                    ];
                    let mut homotopy = Homotopy::default();
                    for (k, v) in section_keys(t, "bilinear", &allowed)? {
                        let b = &mut settings.bilinear;
                        match k.as_str() {
                            "bilinear.lambda" => b.lambda = Some(get_f64(v, &k)?),
                            "bilinear.max_iters" => b.max_iters = get_usize(v, &k)?,
                            "bilinear.tol" => b.tol = get_f64(v, &k)?,
                            "bilinear.momentum" => b.momentum = get_f64(v, &k)?,
                            "bilinear.lambda_init" => homotopy.lambda_init = Some(get_f64(v, &k)?),
                            "bilinear.lambda_final" => {
                                homotopy.lambda_final = Some(get_f64(v, &k)?)
                            }
                            "bilinear.eta" => homotopy.eta = get_f64(v, &k)?,
                            _ => homotopy.inner_iters = get_usize(v, &k)?,
                        }
                    }
                    settings.bilinear.homotopy = Some(homotopy);
                }
                other => return Err(config_err(other, "unknown key")),
            }
        }
        grid.validate()?;
        settings
            .roco
            .validate()
            .map_err(|e| config_err("roco", e.to_string()))?;
        settings
            .bilinear
            .validate()
            .map_err(|e| config_err("bilinear", e.to_string()))?;
        Ok(SweepConfig { grid, settings })
    }
}
