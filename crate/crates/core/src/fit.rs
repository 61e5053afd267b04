//! Least-squares fits used by the scaling studies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_SCALING_POINTS: usize = 4;

/// `log y ≈ slope · log x + intercept`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log units.
    pub residual: f64,
}

impl ScalingFit {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Fit(format!("{} abscissae but {} ordinates", x.len(), y.len())));
        }
        if x.len() < MIN_SCALING_POINTS {
            return Err(Error::Fit(format!(
                "scaling fit needs at least {MIN_SCALING_POINTS} points, got {}",
                x.len()
            )));
        }
        if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Fit("log-log fit needs positive finite data".into()));
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Fit("abscissae are all equal".into()));
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - slope * a - intercept).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        Ok(ScalingFit {
            x: x.to_vec(),
            y: y.to_vec(),
            slope,
            intercept,
            residual,
        })
    }

    /// The fitted constant `C` in `y ≈ C x^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

/// `y ≈ Σ_{m ≤ degree} c_m x^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFit {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    /// `‖y − p(x)‖₂ / ‖y‖₂`.
    pub relative_residual: f64,
}

impl PolyFit {
    pub fn new(x: &[f64], y: &[f64], degree: usize) -> Result<Self> {
        if x.len() != y.len() || x.len() < degree + 1 {
            return Err(Error::Fit(format!(
                "degree {degree} fit needs at least {} matching points",
                degree + 1
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Fit("polynomial fit needs finite data".into()));
        }
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let vander = DMatrix::from_fn(x.len(), degree + 1, |i, j| (x[i] / scale).powi(j as i32));
        let rhs = DVector::from_column_slice(y);
        let svd = vander.clone().svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-13)
            .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
        let coeffs: Vec<f64> = sol.iter().enumerate().map(|(j, c)| c / scale.powi(j as i32)).collect();
        let fitted = vander * sol;
        let norm_y = rhs.norm();
        let relative_residual = if norm_y == 0.0 {
            (fitted - &rhs).norm()
        } else {
            (fitted - &rhs).norm() / norm_y
        };
        Ok(PolyFit {
            degree,
            coeffs,
            relative_residual,
        })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}
