//! Alternating-descent baselines for the bilinear Lasso
//!
//! `min_{x, h} 1/2 ||y - x (*) h||^2 + lambda ||x||_1   s.t. ||h||_2 = 1`.
//!
//! Each outer iteration takes one proximal-gradient step in `x` and one
//! Riemannian gradient step on the sphere in `h`, each with a halving line
//! search that only accepts steps that do not increase the objective. The
//! inertial variant extrapolates both blocks before stepping and falls back
//! to the plain step whenever the extrapolated one is rejected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lifting::{convolve, correlate, correlate_window, dot, l2_norm, Kernel, Signal};
use crate::roco::{FactorPair, SIGN_EPS};

const MAX_HALVINGS: usize = 40;
const INITIAL_STEP: f64 = 1.0;
const DEGENERATE_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Homotopy {
    /// Starting weight; defaults to `||correlate(y, h_init)||_inf`.
    pub lambda_init: Option<f64>,
    /// Final weight; defaults to the resolved `lambda`.
    pub lambda_final: Option<f64>,
    /// Geometric decay per stage, in `(0, 1)`.
    pub eta: f64,
    /// Iterations spent at each intermediate weight.
    pub inner_iters: usize,
}

impl Default for Homotopy {
    fn default() -> Self {
        Homotopy {
            lambda_init: None,
            lambda_final: None,
            eta: 0.5,
            inner_iters: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BilinearConfig {
    /// Sparsity weight; `None` means `0.1 * ||correlate(y, h_init)||_inf`.
    pub lambda: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    /// Inertia for the iADM variant, in `[0, 1)`.
    pub momentum: f64,
    pub homotopy: Option<Homotopy>,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        BilinearConfig {
            lambda: None,
            max_iters: 1000,
            tol: 1e-6,
            momentum: 0.9,
            homotopy: None,
        }
    }
}

impl BilinearConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidInput(format!("bilinear config: {what}")));
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if self.max_iters == 0 || !(self.tol > 0.0) {
            return bad("max_iters and tol must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        if let Some(h) = &self.homotopy {
            if !(h.eta > 0.0 && h.eta < 1.0) {
                return bad(format!("homotopy eta must lie in (0, 1), got {}", h.eta));
            }
            if h.inner_iters == 0 {
                return bad("homotopy inner_iters must be positive".into());
            }
            if let (Some(a), Some(b)) = (h.lambda_init, h.lambda_final) {
                if !(b > 0.0 && a >= b) {
                    return bad(format!(
                        "homotopy needs lambda_init >= lambda_final > 0, got {a} and {b}"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BilinearState {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub iteration: usize,
    /// Objective after every iteration, at the weight active for it.
    pub objective: Vec<f64>,
    /// `(lambda, first iteration index)` for each continuation stage.
    pub stages: Vec<(f64, usize)>,
    /// Count of `h` steps rejected because the update collapsed to zero.
    pub degenerate_steps: usize,
}

impl BilinearState {
    /// `x = 0` and `h` the normalised first `m` samples of `y` (an impulse
    /// if those are all zero).
    pub fn initial(y: &[f64], m: usize) -> Self {
        let mut h = y[..m].to_vec();
        let norm = l2_norm(&h);
        if norm > 0.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        } else {
            h.iter_mut().for_each(|v| *v = 0.0);
            h[0] = 1.0;
        }
        BilinearState {
            x: vec![0.0; y.len()],
            x_prev: vec![0.0; y.len()],
            h_prev: h.clone(),
            h,
            iteration: 0,
            objective: Vec::new(),
            stages: Vec::new(),
            degenerate_steps: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BilinearOutcome {
    pub factors: FactorPair,
    pub state: BilinearState,
    pub converged: bool,
    pub lambda: f64,
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `1/2 ||y - x (*) h||^2 + lambda ||x||_1`.
pub fn objective(x: &[f64], h: &[f64], y: &[f64], lambda: f64) -> f64 {
    let r = residual(x, h, y);
    0.5 * dot(&r, &r) + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// `x (*) h - y`.
pub fn residual(x: &[f64], h: &[f64], y: &[f64]) -> Vec<f64> {
    convolve(x, h).iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Gradient of the smooth part with respect to `x`.
pub fn grad_x(x: &[f64], h: &[f64], y: &[f64]) -> Vec<f64> {
    correlate(&residual(x, h, y), h).into_inner()
}

/// Euclidean gradient of the smooth part with respect to `h`.
pub fn grad_h(h: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    correlate_window(&residual(x, h, y), x, h.len())
}

/// `(I - h h^T) grad_h`: the gradient projected onto the sphere's tangent
/// space at `h`.
pub fn riemannian_grad_h(h: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    let g = grad_h(h, x, y);
    let along = dot(h, &g);
    g.iter().zip(h).map(|(gi, hi)| gi - along * hi).collect()
}

/// One proximal-gradient step in `x` with a fixed step size.
pub fn lasso_x_step(x: &[f64], h: &[f64], y: &[f64], lambda: f64, step: f64) -> Signal {
    let g = grad_x(x, h, y);
    Signal::from_raw(
        x.iter()
            .zip(&g)
            .map(|(xi, gi)| soft_threshold(xi - step * gi, step * lambda))
            .collect(),
    )
}

/// One Riemannian gradient step on the unit sphere, retracted by
/// normalisation. Returns `(h, true)` unchanged when the update collapses.
pub fn sphere_h_step(h: &[f64], x: &[f64], y: &[f64], step: f64) -> (Kernel, bool) {
    let g = riemannian_grad_h(h, x, y);
    retract_step(h, &g, step)
}

fn retract_step(h: &[f64], g: &[f64], step: f64) -> (Kernel, bool) {
    let moved: Vec<f64> = h.iter().zip(g).map(|(hi, gi)| hi - step * gi).collect();
    let norm = l2_norm(&moved);
    if norm < DEGENERATE_NORM {
        return (Kernel::from_raw(h.to_vec()), true);
    }
    (
        Kernel::from_raw(moved.into_iter().map(|v| v / norm).collect()),
        false,
    )
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let norm = l2_norm(&v);
    if norm < DEGENERATE_NORM {
        return v;
    }
    v.into_iter().map(|x| x / norm).collect()
}

fn extrapolate(cur: &[f64], prev: &[f64], beta: f64) -> Vec<f64> {
    cur.iter()
        .zip(prev)
        .map(|(c, p)| c + beta * (c - p))
        .collect()
}

/// Halving search on the `x` block from `base`; accepts the first candidate
/// whose objective does not exceed `reference`.
fn search_x(
    base: &[f64],
    h: &[f64],
    y: &[f64],
    lambda: f64,
    reference: f64,
) -> Option<(Vec<f64>, f64)> {
    let g = grad_x(base, h, y);
    let mut step = INITIAL_STEP;
    for _ in 0..MAX_HALVINGS {
        let cand: Vec<f64> = base
            .iter()
            .zip(&g)
            .map(|(xi, gi)| soft_threshold(xi - step * gi, step * lambda))
            .collect();
        let f = objective(&cand, h, y, lambda);
        if f <= reference {
            return Some((cand, f));
        }
        step *= 0.5;
    }
    None
}

fn search_h(
    base: &[f64],
    x: &[f64],
    y: &[f64],
    lambda: f64,
    reference: f64,
    degenerate: &mut usize,
) -> Option<(Vec<f64>, f64)> {
    let g = riemannian_grad_h(base, x, y);
    let mut step = INITIAL_STEP;
    for _ in 0..MAX_HALVINGS {
        let (cand, collapsed) = retract_step(base, &g, step);
        if collapsed {
            *degenerate += 1;
        } else {
            let f = objective(x, &cand, y, lambda);
            if f <= reference {
                return Some((cand.into_inner(), f));
            }
        }
        step *= 0.5;
    }
    None
}

/// Runs up to `iters` alternating iterations at a fixed `lambda`. Returns
/// whether the joint iterate change fell below `tol`.
fn descend(
    state: &mut BilinearState,
    y: &[f64],
    lambda: f64,
    momentum: f64,
    iters: usize,
    tol: f64,
) -> bool {
    for _ in 0..iters {
        let current = objective(&state.x, &state.h, y, lambda);

        let mut x_next = None;
        if momentum > 0.0 {
            let base = extrapolate(&state.x, &state.x_prev, momentum);
            x_next = search_x(&base, &state.h, y, lambda, current);
        }
        let (x_new, fx) = x_next
            .or_else(|| search_x(&state.x, &state.h, y, lambda, current))
            .unwrap_or_else(|| (state.x.clone(), current));

        let mut h_next = None;
        if momentum > 0.0 {
            let base = normalized(extrapolate(&state.h, &state.h_prev, momentum));
            h_next = search_h(&base, &x_new, y, lambda, fx, &mut state.degenerate_steps);
        }
        let (h_new, fh) = h_next
            .or_else(|| search_h(&state.h, &x_new, y, lambda, fx, &mut state.degenerate_steps))
            .unwrap_or_else(|| (state.h.clone(), fx));

        let dx: f64 = x_new
            .iter()
            .zip(&state.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let dh: f64 = h_new
            .iter()
            .zip(&state.h)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        state.x_prev = std::mem::replace(&mut state.x, x_new);
        state.h_prev = std::mem::replace(&mut state.h, h_new);
        state.iteration += 1;
        state.objective.push(fh);
        if (dx + dh).sqrt() < tol {
            return true;
        }
    }
    false
}

/// `0.1 * ||correlate(y, h_init)||_inf`, the default sparsity weight.
pub fn default_lambda(y: &[f64], m: usize) -> f64 {
    0.1 * lambda_max(y, m)
}

fn lambda_max(y: &[f64], m: usize) -> f64 {
    let init = BilinearState::initial(y, m);
    correlate(y, &init.h)
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

fn check_problem(y: &[f64], m: usize, cfg: &BilinearConfig) -> Result<()> {
    cfg.validate()?;
    if m == 0 || m > y.len() {
        return Err(Error::Dimension(format!(
            "kernel length {m} must lie in 1..={}",
            y.len()
        )));
    }
    Ok(())
}

fn resolve_lambda(y: &[f64], m: usize, cfg: &BilinearConfig) -> f64 {
    match cfg.lambda {
        Some(l) => l,
        // y = 0 gives lambda_max = 0; any positive weight works there.
        None => {
            let l = default_lambda(y, m);
            if l > 0.0 {
                l
            } else {
                1.0
            }
        }
    }
}

fn finish(state: BilinearState, converged: bool, lambda: f64) -> BilinearOutcome {
    let sigma = l2_norm(&state.x);
    let s = state
        .h
        .iter()
        .find(|v| v.abs() > SIGN_EPS)
        .map_or(1.0, |v| v.signum());
    let factors = FactorPair {
        x: Signal::from_raw(state.x.iter().map(|v| s * v).collect()),
        h: Kernel::from_raw(state.h.iter().map(|v| s * v).collect()),
        sigma,
        degenerate: sigma == 0.0,
    };
    BilinearOutcome {
        factors,
        state,
        converged,
        lambda,
    }
}

fn run_plain(y: &[f64], m: usize, cfg: &BilinearConfig, momentum: f64) -> Result<BilinearOutcome> {
    check_problem(y, m, cfg)?;
    let lambda = resolve_lambda(y, m, cfg);
    let mut state = BilinearState::initial(y, m);
    state.stages.push((lambda, 0));
    let converged = descend(&mut state, y, lambda, momentum, cfg.max_iters, cfg.tol);
    Ok(finish(state, converged, lambda))
}

/// Alternating descent method.
pub fn run_adm(y: &[f64], m: usize, cfg: &BilinearConfig) -> Result<BilinearOutcome> {
    run_plain(y, m, cfg, 0.0)
}

/// Inertial alternating descent with momentum `cfg.momentum`.
pub fn run_iadm(y: &[f64], m: usize, cfg: &BilinearConfig) -> Result<BilinearOutcome> {
    run_plain(y, m, cfg, cfg.momentum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BaseSolver {
    Adm,
    Iadm,
}

/// The weights visited by a continuation schedule:
/// `lambda_init * eta^k`, clamped to end exactly at `lambda_final`.
pub fn homotopy_schedule(lambda_init: f64, lambda_final: f64, eta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut l = lambda_init;
    while l > lambda_final {
        out.push(l);
        l *= eta;
    }
    out.push(lambda_final);
    out
}

/// Continuation on `lambda`: `inner_iters` iterations at each intermediate
/// weight, warm-started from the previous stage, then a full run at the
/// final weight.
pub fn run_homotopy(
    base: BaseSolver,
    y: &[f64],
    m: usize,
    cfg: &BilinearConfig,
) -> Result<BilinearOutcome> {
    let schedule = cfg.homotopy.unwrap_or_default();
    let cfg = BilinearConfig {
        homotopy: Some(schedule),
        ..*cfg
    };
    check_problem(y, m, &cfg)?;
    let lambda_final = schedule
        .lambda_final
        .unwrap_or_else(|| resolve_lambda(y, m, &cfg));
    let lambda_init = schedule
        .lambda_init
        .unwrap_or_else(|| lambda_max(y, m))
        .max(lambda_final);
    let momentum = match base {
        BaseSolver::Adm => 0.0,
        BaseSolver::Iadm => cfg.momentum,
    };

    let mut state = BilinearState::initial(y, m);
    let lambdas = homotopy_schedule(lambda_init, lambda_final, schedule.eta);
    let (last, intermediate) = lambdas.split_last().expect("schedule is non-empty");
    for &l in intermediate {
        state.stages.push((l, state.iteration));
        descend(&mut state, y, l, momentum, schedule.inner_iters, cfg.tol);
    }
    state.stages.push((*last, state.iteration));
    let converged = descend(&mut state, y, *last, momentum, cfg.max_iters, cfg.tol);
    Ok(finish(state, converged, *last))
}
