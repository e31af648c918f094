//! Properties of the bilinear Lasso baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sasd::bilinear::{
    grad_h, grad_x, homotopy_schedule, objective, riemannian_grad_h, run_adm, run_homotopy,
    run_iadm, sphere_h_step, BaseSolver, BilinearConfig, BilinearState, Homotopy,
};
use sasd::data::{gen_bernoulli_gaussian, gen_gaussian_kernel, BernoulliGaussianSpec};
use sasd::lifting::{convolve, dot, l2_norm};

fn instance(n: usize, m: usize, theta: f64, seed: u64) -> Vec<f64> {
    let x = gen_bernoulli_gaussian(&BernoulliGaussianSpec {
        len: n,
        theta,
        seed,
    })
    .unwrap();
    let h = gen_gaussian_kernel(m, seed.wrapping_mul(31).wrapping_add(7)).unwrap();
    convolve(&x, &h).into_inner()
}

fn smooth(x: &[f64], h: &[f64], y: &[f64]) -> f64 {
    objective(x, h, y, 0.0)
}

fn randn(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let eps = 1e-6;
    for _ in 0..20 {
        let (n, m) = (24, 5);
        let (x, h, y) = (randn(&mut rng, n), randn(&mut rng, m), randn(&mut rng, n));
        let gx = grad_x(&x, &h, &y);
        for i in 0..n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (smooth(&xp, &h, &y) - smooth(&xm, &h, &y)) / (2.0 * eps);
            assert!(rel_close(fd, gx[i], 1e-5), "x[{i}]: fd {fd} vs {}", gx[i]);
        }
        let gh = grad_h(&h, &x, &y);
        for i in 0..m {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[i] += eps;
            hm[i] -= eps;
            let fd = (smooth(&x, &hp, &y) - smooth(&x, &hm, &y)) / (2.0 * eps);
            assert!(rel_close(fd, gh[i], 1e-5), "h[{i}]: fd {fd} vs {}", gh[i]);
        }
    }
}

#[test]
fn riemannian_gradient_is_tangent() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let mut h = randn(&mut rng, 6);
        let norm = l2_norm(&h);
        h.iter_mut().for_each(|v| *v /= norm);
        let (x, y) = (randn(&mut rng, 30), randn(&mut rng, 30));
        let g = riemannian_grad_h(&h, &x, &y);
        assert!(dot(&g, &h).abs() <= 1e-12);
        let (next, collapsed) = sphere_h_step(&h, &x, &y, rng.random_range(0.01..2.0));
        assert!(!collapsed);
        assert!((l2_norm(&next) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn objective_never_increases_and_h_stays_on_sphere() {
    let cfg = BilinearConfig {
        max_iters: 200,
        ..BilinearConfig::default()
    };
    for seed in 0..6 {
        let y = instance(120, 6, 0.1, seed);
        for out in [
            run_adm(&y, 6, &cfg).unwrap(),
            run_iadm(&y, 6, &cfg).unwrap(),
        ] {
            let init = BilinearState::initial(&y, 6);
            let mut prev = objective(&init.x, &init.h, &y, out.lambda);
            for (k, &f) in out.state.objective.iter().enumerate() {
                assert!(
                    f <= prev + 1e-12,
                    "seed {seed} iteration {k}: {prev} -> {f}"
                );
                prev = f;
            }
            assert!((l2_norm(&out.state.h) - 1.0).abs() <= 1e-10);
            assert!((l2_norm(&out.factors.h) - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn zero_momentum_matches_adm_bit_for_bit() {
    let y = instance(150, 8, 0.05, 4);
    let cfg = BilinearConfig {
        momentum: 0.0,
        max_iters: 300,
        ..BilinearConfig::default()
    };
    let a = run_adm(&y, 8, &cfg).unwrap();
    let b = run_iadm(&y, 8, &cfg).unwrap();
    assert_eq!(a.state.iteration, b.state.iteration);
    assert_eq!(a.state.objective, b.state.objective);
    assert_eq!(a.state.x, b.state.x);
    assert_eq!(a.state.h, b.state.h);
}

#[test]
fn momentum_usually_needs_fewer_iterations() {
    let cfg = BilinearConfig {
        max_iters: 3000,
        ..BilinearConfig::default()
    };
    let mut wins = 0;
    for seed in 0..20 {
        let y = instance(800, 10, 0.1, 100 + seed);
        let adm = run_adm(&y, 10, &cfg).unwrap();
        let iadm = run_iadm(&y, 10, &cfg).unwrap();
        if iadm.state.iteration <= adm.state.iteration {
            wins += 1;
        }
    }
    assert!(wins > 10, "iADM faster on only {wins}/20 seeds");
}

#[test]
fn single_stage_homotopy_is_the_base_solver() {
    let y = instance(100, 5, 0.1, 8);
    let lambda = 0.05;
    for (base, plain) in [
        (
            BaseSolver::Adm,
            run_adm as fn(&[f64], usize, &BilinearConfig) -> _,
        ),
        (BaseSolver::Iadm, run_iadm),
    ] {
        let cfg = BilinearConfig {
            lambda: Some(lambda),
            max_iters: 400,
            homotopy: Some(Homotopy {
                lambda_init: Some(lambda),
                lambda_final: Some(lambda),
                ..Homotopy::default()
            }),
            ..BilinearConfig::default()
        };
        let h = run_homotopy(base, &y, 5, &cfg).unwrap();
        let p = plain(&y, 5, &cfg).unwrap();
        assert_eq!(h.state.stages.len(), 1);
        assert_eq!(h.state.objective, p.state.objective);
        assert_eq!(h.state.x, p.state.x);
        assert_eq!(h.state.h, p.state.h);
    }
}

#[test]
fn schedule_is_strictly_decreasing_geometric() {
    let s = homotopy_schedule(1.0, 0.1, 0.5);
    assert_eq!(s, vec![1.0, 0.5, 0.25, 0.125, 0.1]);
    assert!(s.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(homotopy_schedule(0.3, 0.3, 0.5), vec![0.3]);
}

#[test]
fn warm_start_bookkeeping() {
    let y = instance(120, 6, 0.1, 12);
    let schedule = Homotopy {
        inner_iters: 30,
        ..Homotopy::default()
    };
    let cfg = BilinearConfig {
        max_iters: 300,
        homotopy: Some(schedule),
        ..BilinearConfig::default()
    };
    let out = run_homotopy(BaseSolver::Adm, &y, 6, &cfg).unwrap();
    let stages = &out.state.stages;
    assert!(stages.len() > 2);
    assert!(stages
        .windows(2)
        .all(|w| w[1].0 < w[0].0 && w[1].1 >= w[0].1));
    assert_eq!(stages.last().unwrap().0, out.lambda);

    for w in stages.windows(2) {
        let ((l_prev, _), (l_next, start)) = (w[0], w[1]);
        if start == 0 || start >= out.state.objective.len() {
            continue;
        }
        // Truncating the schedule at `l_prev` replays the run up to the end
        // of that stage, which exposes the warm-start iterate.
        let upto = BilinearConfig {
            max_iters: schedule.inner_iters,
            homotopy: Some(Homotopy {
                lambda_final: Some(l_prev),
                ..schedule
            }),
            ..cfg
        };
        let prefix = run_homotopy(BaseSolver::Adm, &y, 6, &upto).unwrap();
        assert_eq!(prefix.state.iteration, start);
        let f_end = *prefix.state.objective.last().unwrap();
        assert_eq!(f_end, out.state.objective[start - 1]);
        let l1: f64 = prefix.state.x.iter().map(|v| v.abs()).sum();
        let carried = f_end - (l_prev - l_next) * l1;
        assert!(
            out.state.objective[start] <= carried + 1e-12,
            "stage at lambda {l_next} starts at {} above {carried}",
            out.state.objective[start]
        );
    }
}

#[test]
fn zero_data_gives_zero_signal() {
    let y = vec![0.0; 40];
    let out = run_adm(
        &y,
        4,
        &BilinearConfig {
            lambda: Some(0.1),
            ..BilinearConfig::default()
        },
    )
    .unwrap();
    assert!(out.state.x.iter().all(|&v| v == 0.0));
}
