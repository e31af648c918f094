//! Independent dense-linear-algebra and transform-domain checks of the
//! closed-form operators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use sasd::lifting::{apply_a, convolve, cyclic_lift, LiftedMatrix};
use sasd::roco::{project_rank1, prox_row_l21, solve_z_update};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LiftedMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    LiftedMatrix::from_row_major(rows, cols, data).unwrap()
}

/// `A = [I, S_1(I), ..., S_{M-1}(I)]` acting on the column-stacked `vec(Z)`.
pub fn dense_lifted_operator(n: usize, m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n * m);
    for col in 0..m {
        for j in 0..n {
            // S_col(I) moves row j of the identity down by `col`
            a[((j + col) % n, col * n + j)] = 1.0;
        }
    }
    a
}

fn vec_col_major(z: &LiftedMatrix) -> DVector<f64> {
    let (n, m) = z.shape();
    DVector::from_iterator(
        n * m,
        (0..m)
            .flat_map(|c| (0..n).map(move |r| (r, c)))
            .map(|(r, c)| z.get(r, c)),
    )
}

#[test]
fn dense_operator_matches_row_sum_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(1..20usize);
        let m = rng.random_range(1..=n);
        let z = random_matrix(&mut rng, n, m);
        let dense = dense_lifted_operator(n, m) * vec_col_major(&z);
        let fast = apply_a(&z);
        for i in 0..n {
            assert!((dense[i] - fast[i]).abs() < 1e-13);
        }
    }
}

#[test]
fn z_update_solves_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 16;
    let m = 4;
    let c1 = random_matrix(&mut rng, n, m);
    let c2 = random_matrix(&mut rng, n, m);
    let c3: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z = solve_z_update(&c1, &c2, &c3);

    let a = dense_lifted_operator(n, m);
    let lhs = DMatrix::<f64>::identity(n * m, n * m) * 2.0 + a.transpose() * &a;
    let rhs = vec_col_major(&c1) + vec_col_major(&c2) + a.transpose() * DVector::from_vec(c3);
    let oracle = lhs.lu().solve(&rhs).unwrap();
    let got = vec_col_major(&z);
    assert!((got - &oracle).norm() / oracle.norm() < 1e-8);
}

#[test]
fn rank1_projection_matches_full_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let q_hat = random_matrix(&mut rng, 30, 5);
    let q = project_rank1(&q_hat, 1e-12, 1000);
    let dense = DMatrix::from_row_slice(30, 5, q_hat.as_slice());
    let svd = dense.svd(true, true);
    let (i, _) = svd.singular_values.argmax();
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let best = u.column(i) * vt.row(i) * svd.singular_values[i];
    let got = DMatrix::from_row_slice(30, 5, q.matrix.as_slice());
    assert!((got - best).norm() < 1e-8);
}

#[test]
fn lifted_product_matches_fft_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut planner = FftPlanner::<f64>::new();
    for _ in 0..20 {
        let n = rng.random_range(2..128usize);
        let m = rng.random_range(1..=n.min(16));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut xf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut hf: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(if i < m { h[i] } else { 0.0 }, 0.0))
            .collect();
        planner.plan_fft_forward(n).process(&mut xf);
        planner.plan_fft_forward(n).process(&mut hf);
        let mut yf: Vec<Complex<f64>> = xf.iter().zip(&hf).map(|(a, b)| a * b).collect();
        planner.plan_fft_inverse(n).process(&mut yf);
        let y = apply_a(&LiftedMatrix::outer(&x, &h));
        for i in 0..n {
            assert!((y[i] - yf[i].re / n as f64).abs() < 1e-10);
        }
        assert_eq!(&*y, &*convolve(&x, &h));
    }
}

#[test]
fn prox_zero_is_zero_and_lift_is_permutation() {
    let z = LiftedMatrix::zeros(5, 3);
    assert_eq!(prox_row_l21(&z, 2.0), z);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = random_matrix(&mut rng, 9, 4);
    let mut before: Vec<f64> = a.as_slice().to_vec();
    let mut after: Vec<f64> = cyclic_lift(&a).as_slice().to_vec();
    before.sort_by(f64::total_cmp);
    after.sort_by(f64::total_cmp);
    assert_eq!(before, after);
}
