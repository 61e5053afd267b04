//! Chebyshev–Gauss–Lobatto collocation on `[0, s_max]`: spectral
//! differentiation, Clenshaw–Curtis quadrature (total and cumulative) and
//! barycentric interpolation of matrix-valued samples.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::CMat;

pub const MIN_NODES: usize = 17;

#[derive(Clone, Debug)]
pub struct SGrid {
    s_max: f64,
    nodes: Vec<f64>,
    // Lobatto angles θ_j with x_j = -cos θ_j, increasing.
    theta: Vec<f64>,
    bary: Vec<f64>,
    diff: DMatrix<f64>,
    weights: Vec<f64>,
    cumulative: DMatrix<f64>,
}

impl SGrid {
    pub fn new(s_max: f64, count: usize) -> Result<Self> {
        if !(s_max > 0.0) || !s_max.is_finite() {
            return Err(Error::InvalidGrid(format!("s_max = {s_max} must be positive")));
        }
        if count < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "{count} collocation nodes requested, at least {MIN_NODES} required"
            )));
        }
        let n = count - 1;
        let theta: Vec<f64> = (0..count).map(|j| PI * j as f64 / n as f64).collect();
        // x_j = -cos θ_j written symmetrically so that x_{n-j} = -x_j exactly
        let x: Vec<f64> = (0..count)
            .map(|j| (PI * (2.0 * j as f64 - n as f64) / (2.0 * n as f64)).sin())
            .collect();
        let nodes: Vec<f64> = x.iter().map(|&xi| 0.5 * s_max * (xi + 1.0)).collect();

        let bary: Vec<f64> = (0..count)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();

        // x_i - x_j = 2 sin((θ_i+θ_j)/2) sin((θ_i-θ_j)/2), free of cancellation
        let mut diff = DMatrix::zeros(count, count);
        for i in 0..count {
            let mut row_sum = 0.0;
            for j in 0..count {
                if i != j {
                    let dx = 2.0 * (0.5 * (theta[i] + theta[j])).sin() * (0.5 * (theta[i] - theta[j])).sin();
                    let v = bary[j] / bary[i] / dx;
                    diff[(i, j)] = v;
                    row_sum += v;
                }
            }
            diff[(i, i)] = -row_sum;
        }
        diff *= 2.0 / s_max;

        let weights = clenshaw_curtis_weights(n).into_iter().map(|w| 0.5 * s_max * w).collect();
        let cumulative = cumulative_matrix(n) * (0.5 * s_max);

        Ok(SGrid {
            s_max,
            nodes,
            theta,
            bary,
            diff,
            weights,
            cumulative,
        })
    }

    /// Nested refinement: twice as many intervals, every old node kept.
    pub fn refined(&self) -> Self {
        SGrid::new(self.s_max, 2 * (self.len() - 1) + 1).expect("refinement of a valid grid")
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn differentiation_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn differentiate_scalar(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                (0..self.len())
                    .filter(|&j| j != i)
                    .map(|j| self.diff[(i, j)] * (f[j] - f[i]))
                    .sum()
            })
            .collect()
    }

    /// Entrywise spectral derivative of matrix-valued samples, written as
    /// `Σ_j D_ij (f_j − f_i)` so that constants differentiate to exact zero.
    pub fn differentiate(&self, samples: &[CMat]) -> Vec<CMat> {
        assert_eq!(samples.len(), self.len(), "sample count must match the grid");
        let (r, c) = samples[0].shape();
        (0..self.len())
            .map(|i| {
                let mut acc = CMat::zeros(r, c);
                let base = &samples[i];
                for (j, m) in samples.iter().enumerate() {
                    if j != i {
                        add_scaled_difference(&mut acc, self.diff[(i, j)], m, base);
                    }
                }
                acc
            })
            .collect()
    }

    /// Derivative of order 1 or 2.
    pub fn differentiate_order(&self, samples: &[CMat], order: usize) -> Result<Vec<CMat>> {
        match order {
            1 => Ok(self.differentiate(samples)),
            2 => Ok(self.differentiate(&self.differentiate(samples))),
            _ => Err(Error::InvalidGrid(format!(
                "differentiation order {order} unsupported (1 or 2)"
            ))),
        }
    }

    /// Clenshaw–Curtis approximation of `∫_0^{s_max} f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `∫_0^{s_i} f` at every node, by integrating the Chebyshev interpolant.
    pub fn cumulative_integral(&self, f: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.cumulative * v).iter().copied().collect()
    }

    /// Barycentric weights `ℓ_j(s)` such that `p(s) = Σ ℓ_j(s) f_j`.
    pub fn interpolation_weights(&self, s: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&x| x == s) {
            let mut out = vec![0.0; self.len()];
            out[j] = 1.0;
            return out;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.bary)
            .map(|(&x, &b)| b / (s - x))
            .collect();
        let total: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / total).collect()
    }

    pub fn interpolate(&self, samples: &[CMat], s: f64) -> CMat {
        let w = self.interpolation_weights(s);
        let (r, c) = samples[0].shape();
        let mut acc = CMat::zeros(r, c);
        for (wj, m) in w.iter().zip(samples) {
            add_scaled(&mut acc, *wj, m);
        }
        acc
    }

    #[allow(dead_code)]
    pub(crate) fn angles(&self) -> &[f64] {
        &self.theta
    }
}

fn add_scaled_difference(acc: &mut CMat, c: f64, m: &CMat, base: &CMat) {
    for ((x, y), b) in acc.as_mut_slice().iter_mut().zip(m.as_slice()).zip(base.as_slice()) {
        *x += (y - b) * c;
    }
}

fn add_scaled(acc: &mut CMat, c: f64, m: &CMat) {
    for (x, y) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *x += y * c;
    }
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the `n + 1` Lobatto nodes.
fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
    let interior = 1..n;
    let mut v = vec![1.0; n + 1];
    if n % 2 == 0 {
        w[0] = 1.0 / (n * n - 1) as f64;
        w[n] = w[0];
        for k in 1..n / 2 {
            for j in interior.clone() {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
        for j in interior.clone() {
            v[j] -= (n as f64 * theta[j]).cos() / (n * n - 1) as f64;
        }
    } else {
        w[0] = 1.0 / (n * n) as f64;
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for j in interior.clone() {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4 * k * k - 1) as f64;
            }
        }
    }
    for j in interior {
        w[j] = 2.0 * v[j] / n as f64;
    }
    w
}

/// Matrix mapping values at `x_j = -cos(πj/n)` to `∫_{-1}^{x_i}` of their
/// degree-`n` interpolant.
fn cumulative_matrix(n: usize) -> DMatrix<f64> {
    let count = n + 1;
    // cos of (π (n - j)/n): x_j = cos θ'_j with θ'_j = π (n - j) / n
    let tp = |k: usize, j: usize| (k as f64 * PI * (n - j) as f64 / n as f64).cos();
    let mut out = DMatrix::zeros(count, count);
    for col in 0..count {
        // coefficients of the interpolant of the unit vector e_col
        let mut c = vec![0.0; n + 3];
        for (k, ck) in c.iter_mut().enumerate().take(n + 1) {
            let half = if col == 0 || col == n { 0.5 } else { 1.0 };
            let mut v = 2.0 / n as f64 * half * tp(k, col);
            if k == 0 || k == n {
                v *= 0.5;
            }
            *ck = v;
        }
        // antiderivative coefficients
        let mut b = vec![0.0; n + 2];
        b[1] = c[0] - 0.5 * c[2];
        for k in 2..=n + 1 {
            b[k] = (c[k - 1] - c[k + 1]) / (2.0 * k as f64);
        }
        let at_minus_one: f64 = (1..=n + 1)
            .map(|k| if k % 2 == 0 { b[k] } else { -b[k] })
            .sum();
        b[0] = -at_minus_one;
        for row in 0..count {
            let th = PI * (n - row) as f64 / n as f64;
            let v: f64 = b
                .iter()
                .enumerate()
                .map(|(k, bk)| bk * (k as f64 * th).cos())
                .sum();
            out[(row, col)] = v;
        }
    }
    out
}
