//! Algebraic properties of the lifting operators and the ambiguity-aware
//! metrics.

use proptest::prelude::*;

use sasd::lifting::{
    apply_a, circ_shift, convolve, correlate, cyclic_lift, cyclic_unlift, dot, pad, LiftedMatrix,
};
use sasd::metrics::{psnr_shifted, recovery_error};

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

fn matrix() -> impl Strategy<Value = LiftedMatrix> {
    (1usize..24, 1usize..8)
        .prop_filter("M <= N", |(n, m)| m <= n)
        .prop_flat_map(|(n, m)| {
            vec_of(n * m).prop_map(move |d| LiftedMatrix::from_row_major(n, m, d).unwrap())
        })
}

/// `A^T r`: entry `(n, m)` reads `r[(n + m) mod N]`.
fn adjoint(r: &[f64], m: usize) -> LiftedMatrix {
    let n = r.len();
    let mut z = LiftedMatrix::zeros(n, m);
    for row in 0..n {
        for col in 0..m {
            z.set(row, col, r[(row + col) % n]);
        }
    }
    z
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shift_round_trip(v in vec_of(17), tau in -40i64..40) {
        prop_assert_eq!(circ_shift(&circ_shift(&v, tau), -tau), v.clone());
        prop_assert_eq!(circ_shift(&v, tau), circ_shift(&v, tau + 17));
    }

    #[test]
    fn lift_round_trips(z in matrix()) {
        prop_assert_eq!(cyclic_unlift(&cyclic_lift(&z)), z.clone());
        prop_assert_eq!(cyclic_lift(&cyclic_unlift(&z)), z);
    }

    #[test]
    fn lift_permutes_entries(z in matrix()) {
        let sorted = |m: &LiftedMatrix| {
            let mut v = m.as_slice().to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        prop_assert_eq!(sorted(&cyclic_lift(&z)), sorted(&z));
    }

    #[test]
    fn adjoint_identity(z in matrix(), seed in any::<u64>()) {
        let n = z.rows();
        let r: Vec<f64> = (0..n).map(|i| ((seed.wrapping_add(i as u64 * 7919)) % 1000) as f64 / 100.0 - 5.0).collect();
        let lhs = dot(&apply_a(&z), &r);
        let rhs = dot(z.as_slice(), adjoint(&r, z.cols()).as_slice());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn correlate_is_adjoint_of_convolve(x in vec_of(20), h in vec_of(5), r in vec_of(20)) {
        let lhs = dot(&convolve(&x, &h), &r);
        let rhs = dot(&x, &correlate(&r, &h));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn outer_product_lifts_to_convolution(x in vec_of(16), h in vec_of(4)) {
        let direct = convolve(&x, &h);
        let lifted = apply_a(&LiftedMatrix::outer(&x, &h));
        for (a, b) in direct.iter().zip(lifted.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn scaling_ambiguity(x in vec_of(16), h in vec_of(4), a in 0.1f64..10.0) {
        let xs: Vec<f64> = x.iter().map(|v| v * a).collect();
        let hs: Vec<f64> = h.iter().map(|v| v / a).collect();
        let y0 = convolve(&x, &h);
        let y1 = convolve(&xs, &hs);
        for (p, q) in y0.iter().zip(y1.iter()) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn shift_ambiguity(x in vec_of(16), h in vec_of(4), tau in 0i64..16) {
        // (S_tau x) (*) (S_-tau h) = x (*) h, with h padded to the full length
        let y0 = convolve(&x, &pad(&h, 16));
        let y1 = convolve(&circ_shift(&x, tau), &circ_shift(&pad(&h, 16), -tau));
        for (p, q) in y0.iter().zip(y1.iter()) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn recovery_error_quotients_shift_and_sign(h in vec_of(6), tau in 0i64..32, neg in any::<bool>()) {
        let s = if neg { -1.0 } else { 1.0 };
        let moved: Vec<f64> = circ_shift(&pad(&h, 32), tau).iter().map(|v| s * v).collect();
        prop_assert!(recovery_error(&moved, &h, 32) <= 1e-12);
    }

    #[test]
    fn recovery_error_is_nonnegative_and_symmetric_in_sign(a in vec_of(5), b in vec_of(5)) {
        let e = recovery_error(&a, &b, 12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(e, recovery_error(&neg, &b, 12));
    }
}

#[test]
fn psnr_identity_hits_cap() {
    let img: Vec<f64> = (0..49).map(|i| (i % 5) as f64 / 4.0).collect();
    assert_eq!(psnr_shifted(&img, &img), sasd::metrics::PSNR_CAP_DB);
}

#[test]
fn psnr_invariant_to_searched_shifts() {
    let truth: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
    let noisy: Vec<f64> = truth
        .iter()
        .enumerate()
        .map(|(i, v)| v + 0.01 * ((i % 3) as f64 - 1.0))
        .collect();
    let base = psnr_shifted(&noisy, &truth);
    // The search applies forward shifts in 0..8, so undoing one by moving
    // the estimate backwards keeps the best alignment reachable.
    for tau in 0..8 {
        assert_eq!(
            psnr_shifted(&circ_shift(&noisy, -tau), &truth),
            base,
            "tau = {tau}"
        );
    }
}
