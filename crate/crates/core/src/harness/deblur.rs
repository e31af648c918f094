//! Single-image blind deblurring on vectorised digits.

use std::fmt::Write as _;
use web_time::Instant;

use crate::data::{gen_gaussian_kernel, ImageSet};
use crate::error::{Error, Result};
use crate::harness::method::{solve, Method, SolverSettings};
use crate::lifting::convolve;
use crate::metrics::psnr_shifted;
use crate::roco::RocoConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DeblurConfig {
    pub digits: Vec<u8>,
    pub kernel_len: usize,
    pub kernel_seed: u64,
    pub methods: Vec<Method>,
    pub settings: SolverSettings,
}

pub const DEFAULT_DIGITS: [u8; 4] = [5, 0, 9, 3];

impl Default for DeblurConfig {
    fn default() -> Self {
        DeblurConfig {
            digits: DEFAULT_DIGITS.to_vec(),
            kernel_len: 9,
            kernel_seed: 1,
            methods: Method::ALL.to_vec(),
            settings: SolverSettings {
                roco: RocoConfig::images(),
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub psnr_db: f64,
    pub wall_seconds: f64,
    pub iterations: usize,
    pub recovered: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DigitResult {
    pub label: String,
    pub truth: Vec<f64>,
    pub blurred: Vec<f64>,
    pub results: Vec<MethodResult>,
}

/// Resolves the sign ambiguity of a recovered image using the fact that the
/// ground truth is nonnegative.
pub fn orient_nonnegative(mut x: Vec<f64>) -> Vec<f64> {
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

/// Blurs `truth` with the seeded kernel and runs every configured method.
pub fn deblur_image(label: &str, truth: &[f64], cfg: &DeblurConfig) -> Result<DigitResult> {
    let h0 = gen_gaussian_kernel(cfg.kernel_len, cfg.kernel_seed)?;
    let blurred = convolve(truth, &h0).into_inner();
    let mut results = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let report = solve(method, &blurred, cfg.kernel_len, &cfg.settings)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let recovered = orient_nonnegative(report.factors.x.into_inner());
        results.push(MethodResult {
            method,
            psnr_db: psnr_shifted(&recovered, truth),
            wall_seconds,
            iterations: report.iterations,
            recovered,
        });
    }
    Ok(DigitResult {
        label: label.to_string(),
        truth: truth.to_vec(),
        blurred,
        results,
    })
}

/// Deblurs the first image of each requested digit label.
pub fn run_deblur(set: &ImageSet, cfg: &DeblurConfig) -> Result<Vec<DigitResult>> {
    if set.labels.is_none() {
        return Err(Error::InvalidInput(
            "image set has no labels; cannot select digits".into(),
        ));
    }
    cfg.digits
        .iter()
        .map(|&d| {
            let idx = set
                .first_with_label(d)
                .ok_or_else(|| Error::InvalidInput(format!("digit {d} not found in dataset")))?;
            deblur_image(&d.to_string(), &set.images[idx], cfg)
        })
        .collect()
}

/// Deterministic PSNR table (no timings), one row per digit.
pub fn psnr_csv(results: &[DigitResult]) -> String {
    let mut out = String::from("digit");
    if let Some(first) = results.first() {
        for r in &first.results {
            let _ = write!(out, ",{}", r.method);
        }
    }
    out.push('\n');
    for d in results {
        out.push_str(&d.label);
        for r in &d.results {
            let _ = write!(out, ",{:.4}", r.psnr_db);
        }
        out.push('\n');
    }
    out
}

/// Human-readable table: PSNR per digit and method, then mean runtime.
pub fn render_table(results: &[DigitResult]) -> String {
    let Some(first) = results.first() else {
        return String::new();
    };
    let methods: Vec<Method> = first.results.iter().map(|r| r.method).collect();
    let mut out = format!("| {:<28} |", "");
    for m in &methods {
        let _ = write!(out, " {:>14} |", m.name());
    }
    out.push('\n');
    out.push_str(&format!("|{}|", "-".repeat(30)));
    for _ in &methods {
        out.push_str(&format!("{}|", "-".repeat(16)));
    }
    out.push('\n');
    for d in results {
        let _ = write!(
            out,
            "| {:<28} |",
            format!("PSNR for digit {} (dB)", d.label)
        );
        for r in &d.results {
            let _ = write!(out, " {:>14.4} |", r.psnr_db);
        }
        out.push('\n');
    }
    let _ = write!(out, "| {:<28} |", "Average running time (s)");
    for (i, _) in methods.iter().enumerate() {
        let mean = results
            .iter()
            .map(|d| d.results[i].wall_seconds)
            .sum::<f64>()
            / results.len() as f64;
        let _ = write!(out, " {:>14.3} |", mean);
    }
    out.push('\n');
    out
}

/// Min-max rescales to `[0, 1]` for display; constant inputs map to zero.
pub fn rescale_for_display(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}
