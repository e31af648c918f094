//! Leading singular triple of a tall `N x M` matrix via power iteration on
//! its `M x M` Gram matrix.

use crate::lifting::{dot, l2_norm, LiftedMatrix};

#[derive(Debug, Clone)]
pub struct LeadingTriple {
    pub sigma: f64,
    /// Unit left singular vector, length `N`. All zeros when `sigma == 0`.
    pub u: Vec<f64>,
    /// Unit right singular vector, length `M`. All zeros when `sigma == 0`.
    pub v: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `A^T A` for row-major `A`, packed as a dense `M x M` row-major buffer.
pub fn gram(a: &LiftedMatrix) -> Vec<f64> {
    let m = a.cols();
    let mut g = vec![0.0; m * m];
    for r in 0..a.rows() {
        let row = a.row(r);
        for i in 0..m {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..m {
                g[i * m + j] += ri * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            g[i * m + j] = g[j * m + i];
        }
    }
    g
}

fn mat_vec(g: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    (0..m).map(|i| dot(&g[i * m..(i + 1) * m], v)).collect()
}

/// Power iteration from the all-ones start vector. Stops once successive
/// unit iterates differ by at most `tol` in l2, or after `max_iters` sweeps.
pub fn leading_triple(a: &LiftedMatrix, tol: f64, max_iters: usize) -> LeadingTriple {
    let (n, m) = a.shape();
    let zero = |iterations, converged| LeadingTriple {
        sigma: 0.0,
        u: vec![0.0; n],
        v: vec![0.0; m],
        iterations,
        converged,
    };

    let g = gram(a);
    let trace: f64 = (0..m).map(|i| g[i * m + i]).sum();
    if trace == 0.0 {
        return zero(0, true);
    }

    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut gv = mat_vec(&g, &v);
    // The ones vector can sit in the null space of G; restart on the
    // heaviest coordinate in that case.
    if l2_norm(&gv) <= f64::EPSILON * trace {
        let k = (0..m)
            .max_by(|&i, &j| g[i * m + i].total_cmp(&g[j * m + j]))
            .unwrap_or(0);
        v = vec![0.0; m];
        v[k] = 1.0;
        gv = mat_vec(&g, &v);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let norm = l2_norm(&gv);
        if norm == 0.0 {
            break;
        }
        let next: Vec<f64> = gv.iter().map(|x| x / norm).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        if change <= tol {
            converged = true;
            break;
        }
        gv = mat_vec(&g, &v);
    }

    let mut u: Vec<f64> = (0..n).map(|r| dot(a.row(r), &v)).collect();
    let sigma = l2_norm(&u);
    if sigma == 0.0 {
        return zero(iterations, converged);
    }
    u.iter_mut().for_each(|x| *x /= sigma);
    LeadingTriple {
        sigma,
        u,
        v,
        iterations,
        converged,
    }
}
