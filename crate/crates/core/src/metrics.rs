//! Error measures that quotient out the shift and sign ambiguities of blind
//! deconvolution.

use serde::Serialize;

use crate::lifting::pad;

/// Trials with `e_rec <= E_THR` count as successful recoveries.
pub const E_THR: f64 = 1e-2;

/// Value reported by [`psnr_shifted`] for an exact match.
pub const PSNR_CAP_DB: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub seed: u64,
    pub e_rec: f64,
    pub success: bool,
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// `min_{tau, s} ||s * shift(pad(h_hat), tau) - pad(h0)||_2` over all
/// `tau in 0..n` and `s in {+1, -1}`.
pub fn recovery_error(h_hat: &[f64], h0: &[f64], n: usize) -> f64 {
    assert!(h_hat.len() <= n && h0.len() <= n, "kernels longer than N");
    let a = pad(h_hat, n);
    let b = pad(h0, n);
    let mut best = f64::INFINITY;
    for tau in 0..n {
        let (mut plus, mut minus) = (0.0, 0.0);
        for (i, &bi) in b.iter().enumerate() {
            // shift(a, tau)[i] = a[i - tau]
            let ai = a[(i + n - tau) % n];
            plus += (ai - bi) * (ai - bi);
            minus += (ai + bi) * (ai + bi);
        }
        best = best.min(plus.min(minus));
    }
    best.sqrt()
}

/// Shift-maximised PSNR: the best of
/// `10 log10(N / ||shift(i_hat, tau) - i0||^2)` over
/// `tau in 0..=sqrt(N) - 1`. An exact match reports [`PSNR_CAP_DB`].
pub fn psnr_shifted(i_hat: &[f64], i0: &[f64]) -> f64 {
    let n = i0.len();
    assert_eq!(i_hat.len(), n, "image sizes differ");
    let side = (n as f64).sqrt().round() as usize;
    assert_eq!(side * side, n, "image length must be a perfect square");
    let mut best_err = f64::INFINITY;
    for tau in 0..side {
        let err: f64 = (0..n)
            .map(|i| {
                let d = i_hat[(i + n - tau) % n] - i0[i];
                d * d
            })
            .sum();
        best_err = best_err.min(err);
    }
    if best_err == 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (n as f64 / best_err).log10()).min(PSNR_CAP_DB)
}

pub fn classify_trial(e_rec: f64, e_thr: f64) -> bool {
    e_rec <= e_thr
}
