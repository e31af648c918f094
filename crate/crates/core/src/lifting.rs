//! Circular shifts, cyclic lifting and the convolution primitives every
//! solver is built on.
//!
//! Indexing is 0-based. A positive shift moves entries toward larger indices
//! (downward), wrapping modulo the length. Kernels are stored as their short
//! `M`-vector and are zero-padded on the fly wherever a length-`N` view is
//! needed.

use std::ops::{Add, Deref, Sub};

use crate::error::{Error, Result};

/// A length-`N` real vector: an observation or a sparse signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

/// A short real vector of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel(Vec<f64>);

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{what} must have length >= 1")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} entry {i} is not finite ({})",
            values[i]
        )));
    }
    Ok(())
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("signal", &values)?;
        Ok(Signal(values))
    }

    pub fn zeros(len: usize) -> Self {
        Signal(vec![0.0; len])
    }

    /// Wraps solver output without re-validating it.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Signal(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Deref for Signal {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Kernel {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("kernel", &values)?;
        Ok(Kernel(values))
    }

    /// Builds a kernel and rescales it to unit l2 norm. Fails on the zero vector.
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        check_finite("kernel", &values)?;
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::InvalidInput(
                "cannot normalize an all-zero kernel".into(),
            ));
        }
        Ok(Kernel(values.into_iter().map(|v| v / norm).collect()))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Kernel(values)
    }

    pub fn is_unit_norm(&self) -> bool {
        (l2_norm(&self.0) - 1.0).abs() <= 1e-12
    }

    /// The kernel zero-padded to length `n`.
    pub fn padded(&self, n: usize) -> Vec<f64> {
        pad(&self.0, n)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Kernel {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A dense `N x M` matrix stored row-major. Row `n` is `x[n] * h^T` for a
/// lifted pair, so row operations (the group-sparsity prox) are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LiftedMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LiftedMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "lifted matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(LiftedMatrix { rows, cols, data })
    }

    /// The outer product `x h^T`.
    pub fn outer(x: &[f64], h: &[f64]) -> Self {
        let mut data = Vec::with_capacity(x.len() * h.len());
        for &xi in x {
            data.extend(h.iter().map(|&hj| xi * hj));
        }
        LiftedMatrix {
            rows: x.len(),
            cols: h.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        l2_norm(&self.data)
    }

    /// `||self - other||_F`.
    pub fn distance(&self, other: &LiftedMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= factor);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Add for &LiftedMatrix {
    type Output = LiftedMatrix;
    fn add(self, rhs: &LiftedMatrix) -> LiftedMatrix {
        assert_eq!(self.shape(), rhs.shape());
        LiftedMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &LiftedMatrix {
    type Output = LiftedMatrix;
    fn sub(self, rhs: &LiftedMatrix) -> LiftedMatrix {
        assert_eq!(self.shape(), rhs.shape());
        LiftedMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v` zero-padded (or truncated) to length `n`.
pub fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let k = v.len().min(n);
    out[..k].copy_from_slice(&v[..k]);
    out
}

#[inline]
fn wrap(index: i64, n: usize) -> usize {
    index.rem_euclid(n as i64) as usize
}

/// `out[n] = v[(n - shift) mod N]`.
pub fn circ_shift(v: &[f64], shift: i64) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let s = wrap(shift, n);
    let mut out = vec![0.0; n];
    for (i, &value) in v.iter().enumerate() {
        out[(i + s) % n] = value;
    }
    out
}

fn shift_columns(z: &LiftedMatrix, direction: i64) -> LiftedMatrix {
    let (rows, cols) = z.shape();
    let mut out = LiftedMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let target = wrap(r as i64 + direction * c as i64, rows);
            out.set(target, c, z.get(r, c));
        }
    }
    out
}

/// Shifts column `m` down by `m` places.
pub fn cyclic_lift(z: &LiftedMatrix) -> LiftedMatrix {
    shift_columns(z, 1)
}

/// Shifts column `m` up by `m` places; the exact inverse of [`cyclic_lift`].
pub fn cyclic_unlift(c: &LiftedMatrix) -> LiftedMatrix {
    shift_columns(c, -1)
}

/// Circular convolution `y[n] = sum_m x[m] h[(n - m) mod N]`, summed directly
/// over the `M` kernel taps.
pub fn convolve(x: &[f64], h: &[f64]) -> Signal {
    let n = x.len();
    assert!(h.len() <= n, "kernel longer than signal");
    let mut y = vec![0.0; n];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, &hm) in h.iter().enumerate() {
            acc += x[wrap(i as i64 - m as i64, n)] * hm;
        }
        *yi = acc;
    }
    Signal::from_raw(y)
}

/// Row sums of the cyclic lift of `z`: the lifted convolution operator.
/// For `z = x h^T` this equals `convolve(x, h)` bit for bit.
pub fn apply_a(z: &LiftedMatrix) -> Signal {
    let (rows, cols) = z.shape();
    let mut y = vec![0.0; rows];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for m in 0..cols {
            acc += z.get(wrap(i as i64 - m as i64, rows), m);
        }
        *yi = acc;
    }
    Signal::from_raw(y)
}

/// Adjoint of `x -> convolve(x, h)`: `out[m] = sum_n r[n] h[(n - m) mod N]`.
pub fn correlate(r: &[f64], h: &[f64]) -> Signal {
    let n = r.len();
    assert!(h.len() <= n, "kernel longer than signal");
    let mut out = vec![0.0; n];
    for (j, oj) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &hk) in h.iter().enumerate() {
            acc += r[(j + k) % n] * hk;
        }
        *oj = acc;
    }
    Signal::from_raw(out)
}

/// The first `len` lags of the circular cross-correlation
/// `out[m] = sum_n r[n] x[(n - m) mod N]`. This is the gradient of
/// `1/2 ||convolve(x, h) - y||^2` with respect to a length-`len` kernel when
/// `r` is the residual.
pub fn correlate_window(r: &[f64], x: &[f64], len: usize) -> Vec<f64> {
    let n = r.len();
    assert_eq!(x.len(), n);
    (0..len)
        .map(|m| {
            let mut acc = 0.0;
            for (i, &ri) in r.iter().enumerate() {
                acc += ri * x[wrap(i as i64 - m as i64, n)];
            }
            acc
        })
        .collect()
}
