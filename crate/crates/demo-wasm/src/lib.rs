//! WebAssembly exports for the page in `www/`. Every export takes plain
//! numbers and returns a JSON string, so the page only needs `JSON.parse`.
//! The same operations are available as ordinary Rust functions for tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sasd::data::synthetic_glyph;
use sasd::harness::deblur::{deblur_image, rescale_for_display, DeblurConfig};
use sasd::harness::sweep::make_instance;
use sasd::harness::{solve, Method, SolverSettings, Trace};
use sasd::lifting::{circ_shift, pad};
use sasd::metrics::{classify_trial, recovery_error};
use sasd::roco::RocoConfig;

/// Keeps a single call short enough for a browser tab.
pub const MAX_DEMO_LEN: usize = 2000;
pub const E_THR: f64 = 1e-2;

#[derive(Debug, Serialize)]
pub struct Recovery {
    pub n: usize,
    pub m: usize,
    pub h_true: Vec<f64>,
    /// Estimate moved by the best shift and sign, cut back to `m` taps.
    pub h_aligned: Vec<f64>,
    pub e_rec: f64,
    pub success: bool,
    pub iterations: usize,
    pub converged: bool,
    /// `||A(Z) - y||` after each iteration.
    pub data_residual: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct MethodScore {
    pub method: String,
    pub e_rec: f64,
    pub success: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct GlyphDeblur {
    pub rows: usize,
    pub cols: usize,
    pub truth: Vec<f64>,
    /// Min-max rescaled for display.
    pub blurred: Vec<f64>,
    pub recovered: Vec<f64>,
    pub psnr_db: f64,
    pub iterations: usize,
}

fn check_size(n: usize, m: usize) -> Result<(), String> {
    if n == 0 || n > MAX_DEMO_LEN {
        return Err(format!("signal length must lie in 1..={MAX_DEMO_LEN}"));
    }
    if m == 0 || m > n {
        return Err(format!("kernel length must lie in 1..={n}"));
    }
    Ok(())
}

fn align(h_hat: &[f64], h0: &[f64], n: usize) -> Vec<f64> {
    let target = pad(h0, n);
    let base = pad(h_hat, n);
    let mut best = (f64::INFINITY, base.clone());
    for tau in 0..n as i64 {
        let moved = circ_shift(&base, tau);
        for s in [1.0, -1.0] {
            let err: f64 = moved
                .iter()
                .zip(&target)
                .map(|(a, b)| (s * a - b).powi(2))
                .sum();
            if err < best.0 {
                best = (err, moved.iter().map(|a| s * a).collect());
            }
        }
    }
    best.1.truncate(h0.len());
    best.1
}

pub fn recover_instance(
    n: usize,
    m: usize,
    theta: f64,
    seed: u64,
    rho: f64,
) -> Result<Recovery, String> {
    check_size(n, m)?;
    let inst = make_instance(n, m, theta, seed).map_err(|e| e.to_string())?;
    let settings = SolverSettings {
        roco: RocoConfig {
            rho,
            ..RocoConfig::default()
        },
        ..SolverSettings::default()
    };
    settings.roco.validate().map_err(|e| e.to_string())?;
    let report = solve(Method::Roco, &inst.y, m, &settings).map_err(|e| e.to_string())?;
    let e_rec = recovery_error(&report.factors.h, &inst.h0, n);
    let data_residual = match &report.trace {
        Trace::Residuals { residuals, .. } => residuals.iter().map(|r| r.data).collect(),
        Trace::Objective { .. } => Vec::new(),
    };
    Ok(Recovery {
        n,
        m,
        h_aligned: align(&report.factors.h, &inst.h0, n),
        h_true: inst.h0,
        e_rec,
        success: classify_trial(e_rec, E_THR),
        iterations: report.iterations,
        converged: report.converged,
        data_residual,
    })
}

/// All five methods on one seeded instance.
pub fn compare_methods(
    n: usize,
    m: usize,
    theta: f64,
    seed: u64,
) -> Result<Vec<MethodScore>, String> {
    check_size(n, m)?;
    let inst = make_instance(n, m, theta, seed).map_err(|e| e.to_string())?;
    let settings = SolverSettings::default();
    Method::ALL
        .iter()
        .map(|&method| {
            let report = solve(method, &inst.y, m, &settings).map_err(|e| e.to_string())?;
            let e_rec = recovery_error(&report.factors.h, &inst.h0, n);
            Ok(MethodScore {
                method: method.to_string(),
                e_rec,
                success: classify_trial(e_rec, E_THR),
                iterations: report.iterations,
                converged: report.converged,
            })
        })
        .collect()
}

pub fn deblur_test_glyph(
    method: &str,
    kernel_len: usize,
    kernel_seed: u64,
    max_iters: usize,
) -> Result<GlyphDeblur, String> {
    let method: Method = method.parse().map_err(|e: sasd::Error| e.to_string())?;
    let mut cfg = DeblurConfig {
        kernel_len,
        kernel_seed,
        methods: vec![method],
        ..DeblurConfig::default()
    };
    cfg.settings.roco.max_iters = max_iters;
    cfg.settings.bilinear.max_iters = max_iters;
    let truth = synthetic_glyph();
    check_size(truth.len(), kernel_len)?;
    let out = deblur_image("glyph", &truth, &cfg).map_err(|e| e.to_string())?;
    let r = out
        .results
        .into_iter()
        .next()
        .expect("one method requested");
    Ok(GlyphDeblur {
        rows: 28,
        cols: 28,
        blurred: rescale_for_display(&out.blurred),
        truth: out.truth,
        recovered: r.recovered.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        psnr_db: r.psnr_db,
        iterations: r.iterations,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn recover(n: usize, m: usize, theta: f64, seed: u64, rho: f64) -> Result<String, JsError> {
    to_json(recover_instance(n, m, theta, seed, rho))
}

#[wasm_bindgen]
pub fn compare(n: usize, m: usize, theta: f64, seed: u64) -> Result<String, JsError> {
    to_json(compare_methods(n, m, theta, seed))
}

#[wasm_bindgen]
pub fn deblur_glyph(
    method: &str,
    kernel_len: usize,
    kernel_seed: u64,
    max_iters: usize,
) -> Result<String, JsError> {
    to_json(deblur_test_glyph(
        method,
        kernel_len,
        kernel_seed,
        max_iters,
    ))
}
