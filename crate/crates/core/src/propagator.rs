//! Exponential-midpoint integration of `iε dW/ds = H̃₀(s, a) W`.

use nalgebra::DMatrix;

use crate::bloch::FiberFamily;
use crate::error::{Error, Result};
use crate::linalg::{norm_unchecked, symmetrize, CMat, Eigh, C64};

/// Largest phase `‖H̃₀‖·h/ε` allowed in one step.
pub const MAX_STEP_PHASE: f64 = 0.5;
/// Default cap on the total number of steps of one propagation.
pub const DEFAULT_STEP_BUDGET: usize = 4_000_000;
const MAX_HALVINGS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct StepStats {
    /// Requested step.
    pub requested: f64,
    /// Step-size cap `MAX_STEP_PHASE · ε / sup‖H̃₀‖`.
    pub h_max: f64,
    /// Largest step actually used.
    pub h_used: f64,
    /// True when the cap reduced the requested step.
    pub capped: bool,
    pub steps: usize,
    /// Halvings performed by certification (0 for a plain run).
    pub halvings: usize,
    /// Last change between successive halvings, if certified.
    pub change: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub epsilon: f64,
    pub nodes: Vec<f64>,
    /// `W(s_i)·B` for the initial block `B`.
    pub states: Vec<CMat>,
    /// The initial block `B` (the identity for full propagators).
    pub initial: CMat,
    pub stats: StepStats,
}

/// Upper bound on `sup_s ‖H̃₀(s)‖` over `[0, s_max]`, from the eigenvalues on
/// a dense sample of `κ(s)` plus a margin for the gaps between samples.
pub fn generator_norm_bound(family: &FiberFamily, s_max: f64) -> Result<f64> {
    let samples = 256;
    let mut sup = 0.0_f64;
    for i in 0..=samples {
        let s = s_max * i as f64 / samples as f64;
        let ev = family.quadratic().eigenvalues(family.kappa(s)?);
        let top = ev.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        sup = sup.max(top);
    }
    Ok(1.05 * sup)
}

pub fn step_cap(family: &FiberFamily, epsilon: f64, s_max: f64) -> Result<f64> {
    Ok(MAX_STEP_PHASE * epsilon / generator_norm_bound(family, s_max)?)
}

fn validate_targets(start: f64, targets: &[f64]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidGrid("no output nodes".into()));
    }
    if targets[0] < start || targets.windows(2).any(|w| w[1] < w[0]) || targets.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidGrid("output nodes must be finite, nonnegative and nondecreasing".into()));
    }
    Ok(())
}

/// Substeps per output interval for a maximal step `h`.
fn substeps(start: f64, targets: &[f64], h: f64) -> Vec<usize> {
    let mut prev = start;
    targets
        .iter()
        .map(|&s| {
            let len = s - prev;
            prev = s;
            if len <= 0.0 {
                0
            } else {
                ((len / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
            }
        })
        .collect()
}

fn run(family: &FiberFamily, epsilon: f64, start: f64, targets: &[f64], counts: &[usize], initial: &CMat) -> Result<Vec<CMat>> {
    let mut w = initial.clone();
    let mut out = Vec::with_capacity(targets.len());
    let mut prev = start;
    for (&s, &n) in targets.iter().zip(counts) {
        if n > 0 {
            let h = (s - prev) / n as f64;
            for q in 0..n {
                let mid = prev + (q as f64 + 0.5) * h;
                w = step(family, epsilon, mid, h, &w)?;
            }
        }
        prev = s;
        out.push(w.clone());
    }
    Ok(out)
}

/// `exp(−i h H̃₀(mid)/ε) w` through the eigendecomposition.
fn step(family: &FiberFamily, epsilon: f64, mid: f64, h: f64, w: &CMat) -> Result<CMat> {
    let tau = h / epsilon;
    let kappa = family.kappa(mid)?;
    if let Some(hr) = family.quadratic().real_matrix(kappa) {
        return Ok(real_step(hr, tau, w));
    }
    let eig = Eigh::new(&symmetrize(&family.quadratic().matrix(kappa)));
    let mut coeffs = eig.vectors.adjoint() * w;
    for (r, &l) in eig.values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -tau * l);
        for c in 0..coeffs.ncols() {
            coeffs[(r, c)] *= phase;
        }
    }
    Ok(&eig.vectors * coeffs)
}

/// Real symmetric generator: real eigenvectors, real and imaginary parts
/// of `w` carried separately.
fn real_step(hr: DMatrix<f64>, tau: f64, w: &CMat) -> CMat {
    let e = hr.symmetric_eigen();
    let v = &e.eigenvectors;
    let mut re = v.tr_mul(&w.map(|z| z.re));
    let mut im = v.tr_mul(&w.map(|z| z.im));
    for (r, &l) in e.eigenvalues.iter().enumerate() {
        let (sin, cos) = (tau * l).sin_cos();
        for c in 0..re.ncols() {
            let (x, y) = (re[(r, c)], im[(r, c)]);
            re[(r, c)] = x * cos + y * sin;
            im[(r, c)] = y * cos - x * sin;
        }
    }
    let out_re = v * re;
    let out_im = v * im;
    CMat::from_fn(w.nrows(), w.ncols(), |i, j| C64::new(out_re[(i, j)], out_im[(i, j)]))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon {epsilon} must be positive")));
    }
    Ok(())
}

/// Propagates `initial` (or the identity) to every target with steps of at
/// most `min(h, h_max(ε))`.
pub fn evolve(family: &FiberFamily, epsilon: f64, targets: &[f64], h: f64, initial: Option<&CMat>) -> Result<PropagationResult> {
    evolve_with_budget(family, epsilon, targets, h, initial, DEFAULT_STEP_BUDGET)
}

pub fn evolve_with_budget(
    family: &FiberFamily,
    epsilon: f64,
    targets: &[f64],
    h: f64,
    initial: Option<&CMat>,
    budget: usize,
) -> Result<PropagationResult> {
    check_epsilon(epsilon)?;
    validate_targets(0.0, targets)?;
    if !(h > 0.0) {
        return Err(Error::Config(format!("step {h} must be positive")));
    }
    let s_max = *targets.last().expect("nonempty");
    let h_max = step_cap(family, epsilon, s_max.max(f64::MIN_POSITIVE))?;
    let used = h.min(h_max);
    let counts = substeps(0.0, targets, used);
    let steps: usize = counts.iter().sum();
    if steps > budget {
        return Err(Error::Resource { steps, budget });
    }
    let init = initial.cloned().unwrap_or_else(|| CMat::identity(family.dim(), family.dim()));
    let states = run(family, epsilon, 0.0, targets, &counts, &init)?;
    Ok(PropagationResult {
        epsilon,
        nodes: targets.to_vec(),
        states,
        initial: init,
        stats: StepStats {
            requested: h,
            h_max,
            h_used: used,
            capped: h > h_max,
            steps,
            halvings: 0,
            change: None,
        },
    })
}

/// Halves the step (nested step counts) from `h_max(ε)` until the output
/// changes by less than `tol` at every node.
pub fn evolve_certified(
    family: &FiberFamily,
    epsilon: f64,
    targets: &[f64],
    tol: f64,
    initial: Option<&CMat>,
    budget: usize,
) -> Result<PropagationResult> {
    evolve_certified_from(family, epsilon, 0.0, targets, tol, initial, budget)
}

/// [`evolve_certified`] for the propagator from `start` instead of 0.
pub fn evolve_certified_from(
    family: &FiberFamily,
    epsilon: f64,
    start: f64,
    targets: &[f64],
    tol: f64,
    initial: Option<&CMat>,
    budget: usize,
) -> Result<PropagationResult> {
    check_epsilon(epsilon)?;
    validate_targets(start, targets)?;
    let s_max = *targets.last().expect("nonempty");
    let h_max = step_cap(family, epsilon, s_max.max(f64::MIN_POSITIVE))?;
    let base = substeps(start, targets, h_max);
    let init = initial.cloned().unwrap_or_else(|| CMat::identity(family.dim(), family.dim()));
    let mut previous = run(family, epsilon, start, targets, &base, &init)?;
    let mut total: usize = base.iter().sum();
    for level in 1..=MAX_HALVINGS {
        let counts: Vec<usize> = base.iter().map(|&n| n << level).collect();
        let steps: usize = counts.iter().sum();
        total += steps;
        if total > budget {
            return Err(Error::Resource { steps: total, budget });
        }
        let current = run(family, epsilon, start, targets, &counts, &init)?;
        let change = max_difference(&previous, &current);
        if change < tol {
            return Ok(PropagationResult {
                epsilon,
                nodes: targets.to_vec(),
                states: current,
                initial: init,
                stats: StepStats {
                    requested: h_max,
                    h_max,
                    h_used: h_max / (1u64 << level) as f64,
                    capped: false,
                    steps,
                    halvings: level,
                    change: Some(change),
                },
            });
        }
        previous = current;
    }
    Err(Error::Accuracy {
        tolerance: tol,
        estimate: f64::NAN,
    })
}

pub fn max_difference(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| norm_unchecked(&(x - y))).fold(0.0, f64::max)
}

/// `max_i ‖(W B)†(W B) − B†B‖`, which is `max_i ‖W†W − I‖` for `B = I`.
pub fn unitarity_defect(r: &PropagationResult) -> f64 {
    let gram0 = r.initial.adjoint() * &r.initial;
    r.states
        .iter()
        .map(|w| norm_unchecked(&(w.adjoint() * w - &gram0)))
        .fold(0.0, f64::max)
}
