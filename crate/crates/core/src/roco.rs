//! Rank-one constrained deconvolution on the full lifted matrix.
//!
//! The solver splits `min ||Z||_{r,2,1} s.t. A(Z) = y, rank(Z) <= 1` into a
//! row-sparse copy `P`, a rank-one copy `Q` and the data-consistent
//! iterate `Z`, with scaled multipliers `lambda1`, `lambda2` (matrices) and
//! `lambda0` (a length-`N` vector). Every sub-problem has a closed form:
//!
//! * `P`: row-wise block soft thresholding at `1 / rho`;
//! * `Q`: truncation to the leading singular triple;
//! * `Z`: a diagonal solve in the cyclic-lifted domain, since each lifted row
//!   only couples through `(2 I + 1 1^T)`, whose inverse is
//!   `1/2 (I - 1 1^T / (M + 2))`.
//!
//! All blocks start at zero, so runs are a deterministic function of `y`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lifting::{apply_a, cyclic_lift, cyclic_unlift, l2_norm, Kernel, LiftedMatrix, Signal};
use crate::rank_one::leading_triple;

/// Penalty parameter used for the synthetic experiments.
pub const RHO_SYNTHETIC: f64 = 2.0;
/// Penalty parameter used for image deblurring.
pub const RHO_IMAGES: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocoConfig {
    pub rho: f64,
    pub max_iters: usize,
    /// Stop once `||Z^{l+1} - Z^l||_F < tol`.
    pub tol: f64,
    pub svd_tol: f64,
    pub svd_max_iters: usize,
}

impl Default for RocoConfig {
    fn default() -> Self {
        RocoConfig {
            rho: RHO_SYNTHETIC,
            max_iters: 1000,
            tol: 1e-6,
            svd_tol: 1e-12,
            svd_max_iters: 1000,
        }
    }
}

impl RocoConfig {
    pub fn images() -> Self {
        RocoConfig {
            rho: RHO_IMAGES,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("roco config: {what}")));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.tol > 0.0) || !(self.svd_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iters == 0 || self.svd_max_iters == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }
}

/// Residual norms recorded after each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `||Z - P||_F`
    pub z_minus_p: f64,
    /// `||Z - Q||_F`
    pub z_minus_q: f64,
    /// `||A(Z) - y||_2`
    pub data: f64,
    /// `||Z^{l+1} - Z^l||_F`
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: LiftedMatrix,
    pub p: LiftedMatrix,
    pub q: LiftedMatrix,
    pub lambda1: LiftedMatrix,
    pub lambda2: LiftedMatrix,
    pub lambda0: Vec<f64>,
    pub iteration: usize,
    pub residuals: Vec<Residuals>,
    /// Number of rank-one projections whose power iteration hit its sweep
    /// limit before reaching `svd_tol`.
    pub svd_warnings: usize,
}

impl AdmmState {
    /// All-zero state for an observation of length `n` and kernel length `m`.
    pub fn zeros(n: usize, m: usize) -> Self {
        AdmmState {
            z: LiftedMatrix::zeros(n, m),
            p: LiftedMatrix::zeros(n, m),
            q: LiftedMatrix::zeros(n, m),
            lambda1: LiftedMatrix::zeros(n, m),
            lambda2: LiftedMatrix::zeros(n, m),
            lambda0: vec![0.0; n],
            iteration: 0,
            residuals: Vec::new(),
            svd_warnings: 0,
        }
    }

    pub fn last_residuals(&self) -> Option<&Residuals> {
        self.residuals.last()
    }

    /// One sweep: `P`, `Q`, `Z`, then the three multiplier updates.
    pub fn step(&mut self, y: &[f64], cfg: &RocoConfig) {
        let (n, _) = self.z.shape();
        assert_eq!(y.len(), n, "observation length does not match state");

        let p = prox_row_l21(&(&self.z + &self.lambda1), cfg.rho);
        let projection = project_rank1(&(&self.z + &self.lambda2), cfg.svd_tol, cfg.svd_max_iters);
        if !projection.converged {
            self.svd_warnings += 1;
        }
        let q = projection.matrix;

        let c1 = &p - &self.lambda1;
        let c2 = &q - &self.lambda2;
        let c3: Vec<f64> = y.iter().zip(&self.lambda0).map(|(a, b)| a - b).collect();
        let z = solve_z_update(&c1, &c2, &c3);

        for (l, (zi, pi)) in self
            .lambda1
            .as_mut_slice()
            .iter_mut()
            .zip(z.as_slice().iter().zip(p.as_slice()))
        {
            *l = *l + zi - pi;
        }
        for (l, (zi, qi)) in self
            .lambda2
            .as_mut_slice()
            .iter_mut()
            .zip(z.as_slice().iter().zip(q.as_slice()))
        {
            *l = *l + zi - qi;
        }
        let az = apply_a(&z);
        let mut data_sq = 0.0;
        for (l, (ai, yi)) in self.lambda0.iter_mut().zip(az.iter().zip(y)) {
            let r = ai - yi;
            *l += r;
            data_sq += r * r;
        }

        self.residuals.push(Residuals {
            z_minus_p: z.distance(&p),
            z_minus_q: z.distance(&q),
            data: data_sq.sqrt(),
            step: z.distance(&self.z),
        });
        self.z = z;
        self.p = p;
        self.q = q;
        self.iteration += 1;
    }
}

/// Row-wise block soft thresholding: the minimiser of
/// `||P||_{r,2,1} + rho/2 ||P_hat - P||_F^2`.
pub fn prox_row_l21(p_hat: &LiftedMatrix, rho: f64) -> LiftedMatrix {
    let mut out = p_hat.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let norm = l2_norm(row);
        if rho * norm <= 1.0 {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let factor = 1.0 - 1.0 / (rho * norm);
            row.iter_mut().for_each(|v| *v *= factor);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RankOneProjection {
    pub matrix: LiftedMatrix,
    pub sigma: f64,
    pub converged: bool,
}

/// Best rank-<=1 Frobenius approximation `sigma u v^T` of `q_hat`.
pub fn project_rank1(
    q_hat: &LiftedMatrix,
    svd_tol: f64,
    svd_max_iters: usize,
) -> RankOneProjection {
    let t = leading_triple(q_hat, svd_tol, svd_max_iters);
    let su: Vec<f64> = t.u.iter().map(|u| u * t.sigma).collect();
    RankOneProjection {
        matrix: LiftedMatrix::outer(&su, &t.v),
        sigma: t.sigma,
        converged: t.converged,
    }
}

/// Exact minimiser of `||Z - C1||_F^2 + ||Z - C2||_F^2 + ||A(Z) - c3||_2^2`:
/// `1/2 * unlift((lift(C1 + C2) + c3 1^T) (I - 1 1^T / (M + 2)))`.
pub fn solve_z_update(c1: &LiftedMatrix, c2: &LiftedMatrix, c3: &[f64]) -> LiftedMatrix {
    let (n, m) = c1.shape();
    assert_eq!(c2.shape(), (n, m));
    assert_eq!(c3.len(), n);
    let mut w = cyclic_lift(&(c1 + c2));
    let denom = (m + 2) as f64;
    for (r, &c) in c3.iter().enumerate() {
        let row = w.row_mut(r);
        row.iter_mut().for_each(|v| *v += c);
        let mean = row.iter().sum::<f64>() / denom;
        row.iter_mut().for_each(|v| *v = 0.5 * (*v - mean));
    }
    cyclic_unlift(&w)
}

/// Recovered signal/kernel pair, `x h^T ~ Z`.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub x: Signal,
    pub h: Kernel,
    pub sigma: f64,
    /// Set when the input had no energy (sigma == 0); `x` and `h` are zero.
    pub degenerate: bool,
}

/// Entries with magnitude at or below this are treated as zero when picking
/// the sign of the kernel.
pub const SIGN_EPS: f64 = 1e-12;

/// Leading singular pair of `Z` with the sign fixed so the first nonzero
/// kernel entry is positive.
pub fn extract_factors(z: &LiftedMatrix) -> FactorPair {
    let defaults = RocoConfig::default();
    let t = leading_triple(z, defaults.svd_tol, defaults.svd_max_iters);
    if t.sigma == 0.0 {
        return FactorPair {
            x: Signal::zeros(z.rows()),
            h: Kernel::from_raw(vec![0.0; z.cols()]),
            sigma: 0.0,
            degenerate: true,
        };
    }
    let s =
        t.v.iter()
            .find(|v| v.abs() > SIGN_EPS)
            .map_or(1.0, |v| v.signum());
    FactorPair {
        x: Signal::from_raw(t.u.iter().map(|u| s * t.sigma * u).collect()),
        h: Kernel::from_raw(t.v.iter().map(|v| s * v).collect()),
        sigma: t.sigma,
        degenerate: false,
    }
}

#[derive(Debug, Clone)]
pub struct RocoOutcome {
    pub factors: FactorPair,
    pub state: AdmmState,
    /// `true` when the step tolerance was met before `max_iters`.
    pub converged: bool,
}

/// Runs the solver from the zero state until the step criterion is met or
/// `max_iters` is reached, then factors the final `Z`.
pub fn run_roco(y: &[f64], kernel_len: usize, cfg: &RocoConfig) -> Result<RocoOutcome> {
    cfg.validate()?;
    if kernel_len == 0 || kernel_len > y.len() {
        return Err(Error::Dimension(format!(
            "kernel length {kernel_len} must lie in 1..={}",
            y.len()
        )));
    }
    let mut state = AdmmState::zeros(y.len(), kernel_len);
    let mut converged = false;
    while state.iteration < cfg.max_iters {
        state.step(y, cfg);
        let last = state.residuals.last().expect("step records residuals");
        if !last.step.is_finite() {
            break;
        }
        if last.step < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(RocoOutcome {
        factors: extract_factors(&state.z),
        state,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> LiftedMatrix {
        LiftedMatrix::from_row_major(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn prox_shrinks_row_by_factor() {
        let out = prox_row_l21(&m(1, 2, &[1.2, 1.6]), 2.0);
        assert!((out.get(0, 0) - 0.9).abs() < 1e-15);
        assert!((out.get(0, 1) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn prox_zeroes_small_rows() {
        let out = prox_row_l21(&m(3, 2, &[0.3, 0.4, 0.0, 0.0, 0.1, -0.2]), 2.0);
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank1_of_dyad_and_zero() {
        let z = LiftedMatrix::outer(&[1.0, 0.0, -3.0], &[0.6, -0.8]);
        let q = project_rank1(&z, 1e-12, 1000);
        assert!(q.matrix.distance(&z) < 1e-10);
        let zero = project_rank1(&LiftedMatrix::zeros(3, 2), 1e-12, 1000);
        assert_eq!(zero.sigma, 0.0);
        assert!(zero.matrix.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank1_keeps_dominant_dyad() {
        let q_hat = m(3, 2, &[3.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let q = project_rank1(&q_hat, 1e-12, 1000);
        assert!((q.sigma - 3.0).abs() < 1e-12);
        assert!((q.matrix.distance(&q_hat) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_update_single_column_is_average() {
        let c1 = m(3, 1, &[1.0, 2.0, -1.0]);
        let c2 = m(3, 1, &[0.5, 0.0, 4.0]);
        let c3 = [3.0, -1.0, 0.0];
        let z = solve_z_update(&c1, &c2, &c3);
        for r in 0..3 {
            let expect = (c1.get(r, 0) + c2.get(r, 0) + c3[r]) / 3.0;
            assert!((z.get(r, 0) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn z_update_fixed_point() {
        let z_star = m(4, 2, &[1.0, -0.5, 0.0, 2.0, 0.25, 0.0, -1.5, 1.0]);
        let c3 = apply_a(&z_star);
        let z = solve_z_update(&z_star, &z_star, &c3);
        assert!(z.distance(&z_star) < 1e-12);
    }

    #[test]
    fn zero_observation_stays_zero() {
        let mut state = AdmmState::zeros(6, 2);
        let cfg = RocoConfig::default();
        for _ in 0..3 {
            state.step(&[0.0; 6], &cfg);
        }
        assert!(state.z.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(state.residuals.len(), 3);

        let out = run_roco(&[0.0; 6], 2, &cfg).unwrap();
        assert!(out.converged);
        assert!(out.factors.degenerate);
        assert_eq!(out.factors.sigma, 0.0);
    }

    #[test]
    fn first_step_from_zero_state() {
        let y = [1.0, -2.0, 0.5, 3.0, 0.0];
        let mut state = AdmmState::zeros(5, 3);
        state.step(&y, &RocoConfig::default());
        assert!(state.p.as_slice().iter().all(|&v| v == 0.0));
        assert!(state.q.as_slice().iter().all(|&v| v == 0.0));
        // Z = 1/2 unlift(C3 (I - 11^T/(M+2))): each lifted row is y[n]/5 * 1^T
        for n in 0..5 {
            for c in 0..3 {
                let lifted_row = (n + c) % 5;
                let expect = 0.5 * (y[lifted_row] - 3.0 * y[lifted_row] / 5.0);
                assert!((state.z.get(n, c) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn extract_factors_sign_rule() {
        let x = [0.0, 2.0, 0.0, -1.0];
        let h = [0.6, 0.8];
        let a = extract_factors(&LiftedMatrix::outer(&x, &h));
        let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
        let neg_h: Vec<f64> = h.iter().map(|v| -v).collect();
        let b = extract_factors(&LiftedMatrix::outer(&neg_x, &neg_h));
        for (i, xi) in x.iter().enumerate() {
            assert!((a.x[i] - xi).abs() < 1e-10);
            assert_eq!(a.x[i], b.x[i]);
        }
        assert!((a.h[0] - 0.6).abs() < 1e-10);
        assert!(extract_factors(&LiftedMatrix::zeros(4, 2)).degenerate);
    }

    #[test]
    fn rejects_bad_kernel_length() {
        let cfg = RocoConfig::default();
        assert!(run_roco(&[1.0, 2.0], 0, &cfg).is_err());
        assert!(run_roco(&[1.0, 2.0], 3, &cfg).is_err());
        let bad = RocoConfig { rho: 0.0, ..cfg };
        assert!(run_roco(&[1.0, 2.0], 1, &bad).is_err());
    }
}
