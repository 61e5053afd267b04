//! Driving profiles `F(u)` and their primitives `G(s, a) = ∫_0^s F(au) du`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Highest derivative order exposed by the closed-form profiles.
pub const ANALYTIC_ORDER: usize = 8;
/// Highest derivative order exposed by tabulated profiles.
pub const TABULATED_ORDER: usize = 3;

const STENCIL: usize = 6;
const PRIMITIVE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrivingProfile {
    /// `F(u) = value`.
    Constant { value: f64 },
    /// `F(u) = amplitude · cos(u + phase)`.
    Cosine {
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `F(u) = amplitude · (1 + tanh((u - center) / width)) / 2`.
    SmoothRamp {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Samples `values[i] = F(start + i · step)`, interpolated by sliding
    /// six-point Lagrange stencils.
    Tabulated {
        start: f64,
        step: f64,
        values: Vec<f64>,
    },
}

impl DrivingProfile {
    pub fn constant(value: f64) -> Self {
        DrivingProfile::Constant { value }
    }

    pub fn cosine(amplitude: f64, phase: f64) -> Self {
        DrivingProfile::Cosine { amplitude, phase }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("drive {what} must be finite")))
            }
        };
        match self {
            DrivingProfile::Constant { value } => finite(*value, "value"),
            DrivingProfile::Cosine { amplitude, phase } => {
                finite(*amplitude, "amplitude")?;
                finite(*phase, "phase")
            }
            DrivingProfile::SmoothRamp {
                amplitude,
                center,
                width,
            } => {
                finite(*amplitude, "amplitude")?;
                finite(*center, "center")?;
                if !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::Config("ramp width must be positive".into()));
                }
                Ok(())
            }
            DrivingProfile::Tabulated {
                start,
                step,
                values,
            } => {
                finite(*start, "start")?;
                if !(*step > 0.0) || !step.is_finite() {
                    return Err(Error::Config("tabulated step must be positive".into()));
                }
                if values.len() < STENCIL {
                    return Err(Error::Config(format!(
                        "tabulated drive needs at least {STENCIL} samples, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("tabulated drive has non-finite samples".into()));
                }
                Ok(())
            }
        }
    }

    pub fn max_derivative_order(&self) -> usize {
        match self {
            DrivingProfile::Tabulated { .. } => TABULATED_ORDER,
            _ => ANALYTIC_ORDER,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, DrivingProfile::Tabulated { .. })
    }

    pub fn value(&self, u: f64) -> Result<f64> {
        self.derivative(u, 0)
    }

    /// `F^{(order)}(u)`.
    pub fn derivative(&self, u: f64, order: usize) -> Result<f64> {
        if order > self.max_derivative_order() {
            return Err(Error::Capability {
                requested: order,
                supported: self.max_derivative_order(),
            });
        }
        Ok(match self {
            DrivingProfile::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            DrivingProfile::Cosine { amplitude, phase } => {
                amplitude * (u + phase + order as f64 * std::f64::consts::FRAC_PI_2).cos()
            }
            DrivingProfile::SmoothRamp {
                amplitude,
                center,
                width,
            } => {
                let t = ((u - center) / width).tanh();
                let p = tanh_derivative_poly(order);
                let base = if order == 0 { 1.0 + eval_poly(&p, t) } else { eval_poly(&p, t) };
                0.5 * amplitude * base / width.powi(order as i32)
            }
            DrivingProfile::Tabulated {
                start,
                step,
                values,
            } => tabulated_derivative(*start, *step, values, u, order)?,
        })
    }

    /// `sup_u |F^{(order)}(u)|`. Tabulated bounds are sampled, not certified.
    pub fn derivative_bound(&self, order: usize) -> Result<f64> {
        if order > self.max_derivative_order() {
            return Err(Error::Capability {
                requested: order,
                supported: self.max_derivative_order(),
            });
        }
        Ok(match self {
            DrivingProfile::Constant { value } => {
                if order == 0 {
                    value.abs()
                } else {
                    0.0
                }
            }
            DrivingProfile::Cosine { amplitude, .. } => amplitude.abs(),
            DrivingProfile::SmoothRamp {
                amplitude, width, ..
            } => {
                let p = tanh_derivative_poly(order);
                let sup = (0..=4000)
                    .map(|i| {
                        let t = -1.0 + i as f64 / 2000.0;
                        let v = eval_poly(&p, t);
                        if order == 0 { (1.0 + v).abs() } else { v.abs() }
                    })
                    .fold(0.0, f64::max);
                0.5 * amplitude.abs() * sup / width.powi(order as i32)
            }
            DrivingProfile::Tabulated {
                start,
                step,
                values,
            } => {
                let end = start + step * (values.len() - 1) as f64;
                let samples = 16 * values.len();
                (0..=samples)
                    .map(|i| start + (end - start) * i as f64 / samples as f64)
                    .map(|u| tabulated_derivative(*start, *step, values, u, order).map(f64::abs))
                    .try_fold(0.0, |acc, v| v.map(|v| f64::max(acc, v)))?
            }
        })
    }

    /// `G(s, a) = ∫_0^s F(a u) du`.
    pub fn primitive(&self, s: f64, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(self.value(0.0)? * s);
        }
        Ok(match self {
            DrivingProfile::Constant { value } => value * s,
            DrivingProfile::Cosine { amplitude, phase } => {
                amplitude * ((a * s + phase).sin() - phase.sin()) / a
            }
            DrivingProfile::SmoothRamp {
                amplitude,
                center,
                width,
            } => {
                let anti = |v: f64| 0.5 * (v + width * log_cosh((v - center) / width));
                amplitude * (anti(a * s) - anti(0.0)) / a
            }
            DrivingProfile::Tabulated {
                start,
                step,
                values,
            } => {
                let end = a * s;
                let (lo, hi) = if end >= 0.0 { (0.0, end) } else { (end, 0.0) };
                let last = start + step * (values.len() - 1) as f64;
                for u in [lo, hi] {
                    if u < *start - 1e-12 || u > last + 1e-12 {
                        return Err(Error::OutOfRange {
                            u,
                            lo: *start,
                            hi: last,
                        });
                    }
                }
                // split at the knots where the stencil changes
                let mut breaks = vec![lo];
                let first_knot = ((lo - start) / step).floor() as i64 + 1;
                let mut i = first_knot;
                loop {
                    let x = start + step * i as f64;
                    if x >= hi {
                        break;
                    }
                    breaks.push(x);
                    i += 1;
                }
                breaks.push(hi);
                let per_piece = PRIMITIVE_TOL / breaks.len() as f64;
                let mut total = 0.0;
                for w in breaks.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    let piece = quad::integrate(
                        |u| {
                            tabulated_eval_at(*start, *step, values, u, mid, 0)
                                .expect("point inside the tabulated range")
                        },
                        w[0],
                        w[1],
                        per_piece,
                    )?;
                    total += piece;
                }
                let signed = if end >= 0.0 { total } else { -total };
                signed / a
            }
        })
    }

    /// `G^{(j)}(s, a)` for `j ≥ 1`: `G' = F(as)`, `G^{(j+1)} = a^j F^{(j)}(as)`.
    pub fn primitive_derivative(&self, s: f64, a: f64, order: usize) -> Result<f64> {
        match order {
            0 => self.primitive(s, a),
            j => {
                let f = self.derivative(a * s, j - 1)?;
                Ok(if j == 1 { f } else { a.powi(j as i32 - 1) * f })
            }
        }
    }
}

fn log_cosh(x: f64) -> f64 {
    let y = x.abs();
    y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2
}

/// Coefficients (ascending powers of `T`) of `d^n tanh(x) / dx^n` as a
/// polynomial in `T = tanh x`.
fn tanh_derivative_poly(order: usize) -> Vec<f64> {
    let mut p = vec![0.0, 1.0];
    for _ in 0..order {
        // d/dx p(T) = p'(T) (1 - T²)
        let dp: Vec<f64> = (1..p.len()).map(|k| k as f64 * p[k]).collect();
        let mut next = vec![0.0; dp.len() + 2];
        for (k, c) in dp.iter().enumerate() {
            next[k] += c;
            next[k + 2] -= c;
        }
        p = next;
    }
    p
}

fn eval_poly(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn tabulated_derivative(start: f64, step: f64, values: &[f64], u: f64, order: usize) -> Result<f64> {
    tabulated_eval_at(start, step, values, u, u, order)
}

/// Evaluates the stencil chosen for `anchor` at `u`, so that integrals over
/// one knot interval use a single polynomial.
fn tabulated_eval_at(
    start: f64,
    step: f64,
    values: &[f64],
    u: f64,
    anchor: f64,
    order: usize,
) -> Result<f64> {
    let n = values.len();
    let last = start + step * (n - 1) as f64;
    if !(u >= start - 1e-12 && u <= last + 1e-12) {
        return Err(Error::OutOfRange { u, lo: start, hi: last });
    }
    let cell = (((anchor - start) / step).floor() as i64).clamp(0, n as i64 - 2) as usize;
    let first = cell.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
    let x = (u - start) / step - first as f64;
    // Lagrange basis on the integer nodes 0..STENCIL, differentiated in x
    let mut total = 0.0;
    for j in 0..STENCIL {
        let others: Vec<f64> = (0..STENCIL).filter(|&m| m != j).map(|m| m as f64).collect();
        let denom: f64 = others.iter().map(|&m| j as f64 - m).product();
        total += values[first + j] * basis_derivative(&others, x, order) / denom;
    }
    Ok(total / step.powi(order as i32))
}

/// `d^order/dx^order Π_m (x - r_m)`.
fn basis_derivative(roots: &[f64], x: f64, order: usize) -> f64 {
    if order == 0 {
        return roots.iter().map(|r| x - r).product();
    }
    if order > roots.len() {
        return 0.0;
    }
    // sum over ordered choices of `order` distinct factors to drop
    let mut total = 0.0;
    for (i, _) in roots.iter().enumerate() {
        let rest: Vec<f64> = roots
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != i)
            .map(|(_, r)| *r)
            .collect();
        total += basis_derivative(&rest, x, order - 1);
    }
    total
}
