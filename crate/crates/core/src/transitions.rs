//! Interband transition amplitudes, the Duhamel bound and the growth
//! studies in the drive parameter `a`.

use std::sync::Arc;

use crate::bloch::BandModel;
use crate::chebyshev::SGrid;
use crate::drive::DrivingProfile;
use crate::error::{Error, Result};
use crate::expansion::ExpansionSequence;
use crate::fit::PolyFit;
use crate::linalg::{norm_unchecked, symmetrize, CMat, Contour, ContourNode, Eigh, C64};
use crate::propagator::PropagationResult;
use crate::superprojector::{ProjectorDefect, SuperProjectorFamily};

/// Orthonormal basis of the sum of the ranges of the given projectors at
/// `s = 0`; used as the initial block of a shared propagation. The block
/// may carry a few more columns than the rank of that sum.
pub fn transition_block(projectors: &[&SuperProjectorFamily]) -> Result<CMat> {
    let first = projectors
        .first()
        .ok_or_else(|| Error::Config("no projectors for the initial block".into()))?;
    let dim = first.samples[0].nrows();
    let bases: Vec<CMat> = projectors.iter().map(|p| p.range_basis(0)).collect();
    let cols: usize = bases.iter().map(|b| b.ncols()).sum();
    let mut stacked = CMat::zeros(dim, cols);
    let mut at = 0;
    for b in &bases {
        stacked.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    // Householder QR reproduces every stacked column to rounding even when
    // the ranges nearly coincide.
    Ok(stacked.qr().q())
}

/// `γₙ(s_i) = ‖(1 − P̃ₙ(s_i)) W(s_i) P̃ₙ(0)‖` at every node.
///
/// `w` may hold the full propagator or its action on a block whose span
/// contains the range of `P̃ₙ(0)`.
pub fn gamma_n(p: &SuperProjectorFamily, w: &PropagationResult) -> Result<Vec<f64>> {
    if p.samples.len() != w.states.len() {
        return Err(Error::Config(format!(
            "projector has {} nodes but propagation has {}",
            p.samples.len(),
            w.states.len()
        )));
    }
    if p.epsilon != w.epsilon {
        return Err(Error::Config(format!(
            "projector built for epsilon {} but propagated with {}",
            p.epsilon, w.epsilon
        )));
    }
    let u = p.range_basis(0);
    let coords = w.initial.adjoint() * &u;
    if norm_unchecked(&(&w.initial * &coords - &u)) > 1e-10 {
        return Err(Error::Config("initial block does not contain the range of the projector".into()));
    }
    let dim = u.nrows();
    let id = CMat::identity(dim, dim);
    Ok(p.samples
        .iter()
        .zip(&w.states)
        .map(|(pi, wi)| norm_unchecked(&((&id - pi) * wi * &coords)).min(1.0))
        .collect())
}

/// `(1/ε) ∫₀^{s_i} ‖iεP̃ₙ' − [H̃₀, P̃ₙ]‖ du` at every node, made
/// nondecreasing against quadrature ripple.
pub fn lemma1_bound(defect: &ProjectorDefect, grid: &SGrid, epsilon: f64) -> Vec<f64> {
    let cumulative = grid.cumulative_integral(&defect.lhs);
    let mut running = 0.0_f64;
    cumulative
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i > 0 {
                running = running.max(c / epsilon);
            }
            running
        })
        .collect()
}

/// Lab-frame parameters of a point of the rescaled problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabFrame {
    pub epsilon: f64,
    pub a: f64,
}

impl LabFrame {
    pub fn from_lab(epsilon: f64, omega: f64) -> Self {
        LabFrame { epsilon, a: omega / epsilon }
    }

    pub fn omega(&self) -> f64 {
        self.a * self.epsilon
    }

    pub fn time(&self, s: f64) -> f64 {
        s / self.epsilon
    }

    pub fn slow_time(&self, t: f64) -> f64 {
        self.epsilon * t
    }

    /// The field `E(t) = ε F(ωt)` felt by the electron.
    pub fn field(&self, drive: &DrivingProfile, t: f64) -> Result<f64> {
        Ok(self.epsilon * drive.value(self.omega() * t)?)
    }
}

fn resolvent_in_eigenbasis(values: &[f64], z: C64) -> Vec<C64> {
    values.iter().map(|&l| C64::new(1.0, 0.0) / (C64::new(l, 0.0) - z)).collect()
}

fn scale_rows(m: &CMat, d: &[C64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |r, c| d[r] * m[(r, c)])
}

fn scale_cols(m: &CMat, d: &[C64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * d[c])
}

/// `∂_κ^m r` for `m = 1, 2, 3` in the eigenbasis of `h(κ)`, where
/// `r = (h − z)⁻¹`, `hp = V†(∂_κh)V` and `∂_κ²h = 2c`.
fn kappa_derivatives(r: &[C64], hp: &CMat, c: f64) -> [CMat; 3] {
    let n = r.len();
    let rhp = scale_rows(hp, r);
    let d1 = -scale_cols(&rhp, r);
    let r2: Vec<C64> = r.iter().map(|x| x * x).collect();
    let d2 = scale_cols(&(&rhp * &rhp), r) * C64::new(2.0, 0.0)
        - CMat::from_fn(n, n, |i, j| if i == j { r2[i] * (2.0 * c) } else { C64::new(0.0, 0.0) });
    let rhp_r = scale_cols(&rhp, r);
    let d3 = -scale_cols(&(&rhp * &rhp * &rhp), r) * C64::new(6.0, 0.0)
        + (scale_rows(&rhp_r, r) + scale_cols(&rhp_r, r)) * C64::new(6.0 * c, 0.0);
    [d1, d2, d3]
}

/// `R̃₀^{(n)}` from the chain rule in `κ(s)`: coefficients of `∂_κ^m r`.
fn chain_coefficients(kd: [f64; 3], n: usize) -> [f64; 3] {
    match n {
        1 => [kd[0], 0.0, 0.0],
        2 => [kd[1], kd[0] * kd[0], 0.0],
        _ => [kd[2], 3.0 * kd[0] * kd[1], kd[0].powi(3)],
    }
}

/// Largest resolvent derivative order handled by [`resolvent_derivative_growth`].
pub const MAX_RESOLVENT_ORDER: usize = 3;

/// Sup-norms of `∂ₛⁿ (H̃₀(s, a) − z)⁻¹` over `a`, from the chain rule
/// through `κ(s)`, checked against spectral differentiation of samples.
#[derive(Clone, Debug)]
pub struct ResolventGrowth {
    pub a_values: Vec<f64>,
    /// `sup[n−1][ia]`, operator norm.
    pub sup: Vec<Vec<f64>>,
    /// `route_gap[n−1][ia]`: largest Frobenius distance between the routes.
    pub route_gap: Vec<Vec<f64>>,
    /// Degree `n − 1` fits of `sup[n−1]` in `a`.
    pub fits: Vec<PolyFit>,
}

impl ResolventGrowth {
    pub fn max_route_gap(&self, n: usize) -> f64 {
        self.route_gap[n - 1].iter().copied().fold(0.0, f64::max)
    }

    /// Route gap relative to the sup-norm, worst over `a`.
    pub fn relative_route_gap(&self, n: usize) -> f64 {
        self.route_gap[n - 1]
            .iter()
            .zip(&self.sup[n - 1])
            .map(|(g, s)| g / s.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

fn contour_subset(contour: &Contour, count: usize) -> Vec<ContourNode> {
    let nodes = contour.nodes();
    let stride = (nodes.len() / count.max(1)).max(1);
    nodes.into_iter().step_by(stride).collect()
}

/// `[0, s_max]` split into equal panels, each carrying its own Chebyshev
/// grid so that repeated differentiation amplifies rounding less.
#[derive(Clone, Debug)]
pub struct PanelGrid {
    panel: SGrid,
    panels: usize,
}

impl PanelGrid {
    pub fn new(s_max: f64, panels: usize, nodes_per_panel: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidGrid("at least one panel is required".into()));
        }
        Ok(PanelGrid {
            panel: SGrid::new(s_max / panels as f64, nodes_per_panel)?,
            panels,
        })
    }

    pub fn panel(&self) -> &SGrid {
        &self.panel
    }

    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.panels).map(|p| p as f64 * self.panel.s_max())
    }
}

/// Sweeps `a` and the fibers `ks`; `z` runs over `z_count` evenly spaced
/// nodes of `contour` and `s` over every panel node.
pub fn resolvent_derivative_growth(
    model: &BandModel,
    drive: Arc<DrivingProfile>,
    ks: &[f64],
    a_values: &[f64],
    panels: &PanelGrid,
    contour: &Contour,
    z_count: usize,
) -> Result<ResolventGrowth> {
    let orders = MAX_RESOLVENT_ORDER;
    if drive.max_derivative_order() + 1 < orders {
        return Err(Error::Capability {
            requested: orders - 1,
            supported: drive.max_derivative_order(),
        });
    }
    let zs = contour_subset(contour, z_count);
    let mut sup = vec![vec![0.0_f64; a_values.len()]; orders];
    let mut route_gap = vec![vec![0.0_f64; a_values.len()]; orders];
    for (ia, &a) in a_values.iter().enumerate() {
        for (&k, offset) in ks.iter().flat_map(|k| panels.offsets().map(move |o| (k, o))) {
            let grid = panels.panel();
            let fam = model.family(k, drive.clone(), a, orders)?;
            let c = fam.quadratic().scalar_c();
            let mut eigs = Vec::with_capacity(grid.len());
            let mut hps = Vec::with_capacity(grid.len());
            let mut kds = Vec::with_capacity(grid.len());
            for &u in grid.nodes() {
                let s = offset + u;
                let kappa = fam.kappa(s)?;
                let eig = Eigh::new(&symmetrize(&fam.matrix(s)?));
                hps.push(eig.to_eigenbasis(&fam.quadratic().d_kappa(kappa)));
                kds.push([
                    fam.kappa_derivative(s, 1)?,
                    fam.kappa_derivative(s, 2)?,
                    fam.kappa_derivative(s, 3)?,
                ]);
                eigs.push(eig);
            }
            for node in &zs {
                let mut samples: Vec<CMat> = eigs
                    .iter()
                    .map(|e| e.apply_diagonal(&resolvent_in_eigenbasis(&e.values, node.z)))
                    .collect();
                let mut numeric = Vec::with_capacity(orders);
                for _ in 0..orders {
                    samples = grid.differentiate(&samples);
                    numeric.push(samples.clone());
                }
                for i in 0..grid.len() {
                    let r = resolvent_in_eigenbasis(&eigs[i].values, node.z);
                    let dk = kappa_derivatives(&r, &hps[i], c);
                    for n in 1..=orders {
                        let w = chain_coefficients(kds[i], n);
                        let mut m = CMat::zeros(r.len(), r.len());
                        for (coef, d) in w.iter().zip(&dk) {
                            if *coef != 0.0 {
                                m += d * C64::new(*coef, 0.0);
                            }
                        }
                        let gap = (eigs[i].to_eigenbasis(&numeric[n - 1][i]) - &m).norm();
                        route_gap[n - 1][ia] = route_gap[n - 1][ia].max(gap);
                        sup[n - 1][ia] = sup[n - 1][ia].max(norm_unchecked(&m));
                    }
                }
            }
        }
    }
    let fits = (1..=orders)
        .map(|n| PolyFit::new(a_values, &sup[n - 1], n - 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResolventGrowth {
        a_values: a_values.to_vec(),
        sup,
        route_gap,
        fits,
    })
}

/// Sup-norms of `Ẽⱼ` and `Ẽⱼ'` over `s` and the fibers, per `a`.
#[derive(Clone, Debug)]
pub struct ExpansionGrowth {
    pub a_values: Vec<f64>,
    /// `terms[j−1][ia] = sup ‖Ẽⱼ‖`.
    pub terms: Vec<Vec<f64>>,
    /// `derivatives[j−1][ia] = sup ‖Ẽⱼ'‖`.
    pub derivatives: Vec<Vec<f64>>,
    /// Degree `j − 1` fits of `terms[j−1]`.
    pub term_fits: Vec<PolyFit>,
    /// Degree `j` fits of `derivatives[j−1]`.
    pub derivative_fits: Vec<PolyFit>,
}

pub fn expansion_norm_growth(
    model: &BandModel,
    drive: Arc<DrivingProfile>,
    ks: &[f64],
    a_values: &[f64],
    grid: &SGrid,
    contour: &Contour,
    max_j: usize,
) -> Result<ExpansionGrowth> {
    let window = model.window()?;
    let mut terms = vec![vec![0.0_f64; a_values.len()]; max_j];
    let mut derivatives = vec![vec![0.0_f64; a_values.len()]; max_j];
    for (ia, &a) in a_values.iter().enumerate() {
        for &k in ks {
            let fam = model.family(k, drive.clone(), a, 1)?;
            let seq = ExpansionSequence::build(&fam, grid, contour, &window, max_j)?;
            for j in 1..=max_j {
                terms[j - 1][ia] = terms[j - 1][ia].max(seq.term_sup_norm(j));
                derivatives[j - 1][ia] = derivatives[j - 1][ia].max(seq.derivative_sup_norm(j));
            }
        }
    }
    let term_fits = (1..=max_j)
        .map(|j| PolyFit::new(a_values, &terms[j - 1], j - 1))
        .collect::<Result<Vec<_>>>()?;
    let derivative_fits = (1..=max_j)
        .map(|j| PolyFit::new(a_values, &derivatives[j - 1], j))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionGrowth {
        a_values: a_values.to_vec(),
        terms,
        derivatives,
        term_fits,
        derivative_fits,
    })
}

/// One `(ε, a, k)` job of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub a: f64,
    pub k: f64,
}

/// `γₙ` and the Duhamel bound at one node of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub point: SweepPoint,
    pub s: f64,
    pub gamma: f64,
    pub bound: f64,
}

impl SweepRow {
    pub fn omega(&self) -> f64 {
        self.point.a * self.point.epsilon
    }

    pub fn t_phys(&self) -> f64 {
        self.s / self.point.epsilon
    }

    /// `1 − γ²`, a lower bound on the probability of staying in the band.
    pub fn staying_probability_bound(&self) -> f64 {
        1.0 - self.gamma * self.gamma
    }
}

/// Per-point diagnostics besides the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDiagnostics {
    pub unitarity: f64,
    pub steps: usize,
    pub halvings: usize,
    /// Largest `‖P̃ₙ² − P̃ₙ‖` over orders and nodes.
    pub idempotency: f64,
}

#[derive(Clone, Debug)]
pub struct PointOutcome {
    pub point: SweepPoint,
    /// Rows ordered by order and node, or the error that stopped the point.
    pub result: std::result::Result<(Vec<SweepRow>, PointDiagnostics), String>,
}

/// Sweep settings resolved from a configuration.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub n_max: usize,
    pub epsilons: Vec<f64>,
    pub a_values: Vec<f64>,
    pub ks: Vec<f64>,
    pub mode: crate::config::SweepMode,
    pub t: f64,
    pub s: f64,
    pub n_s: usize,
    pub contour_nodes: usize,
    pub tolerance: f64,
    pub step_budget: usize,
}

impl SweepPlan {
    pub fn from_config(cfg: &crate::config::RunConfig) -> Result<Self> {
        Ok(SweepPlan {
            n_max: cfg.sweep.n_max,
            epsilons: cfg.sweep.epsilons.clone(),
            a_values: cfg.sweep.a_values.clone(),
            ks: cfg.k_grid()?.points().to_vec(),
            mode: cfg.sweep.mode,
            t: cfg.sweep.t,
            s: cfg.sweep.s,
            n_s: cfg.sweep.n_s,
            contour_nodes: cfg.grids.contour_nodes,
            tolerance: cfg.tolerances.propagation,
            step_budget: crate::propagator::DEFAULT_STEP_BUDGET,
        })
    }

    pub fn s_end(&self, epsilon: f64) -> f64 {
        match self.mode {
            crate::config::SweepMode::FixedS => self.s,
            crate::config::SweepMode::FixedT => epsilon * self.t,
        }
    }

    /// Jobs in `(ε, a, k)` lexicographic order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::with_capacity(self.epsilons.len() * self.a_values.len() * self.ks.len());
        for &epsilon in &self.epsilons {
            for &a in &self.a_values {
                for &k in &self.ks {
                    out.push(SweepPoint { epsilon, a, k });
                }
            }
        }
        out
    }
}

/// Builds `P̃₀ … P̃ₙ` for one fiber, propagates their initial ranges and
/// evaluates `γₙ` against the Duhamel bound at every node.
pub fn run_point(model: &BandModel, drive: Arc<DrivingProfile>, plan: &SweepPlan, point: SweepPoint) -> Result<(Vec<SweepRow>, PointDiagnostics)> {
    use crate::superprojector::{build_pn, projector_defect, Construction};

    let fam = model.family(point.k, drive, point.a, 1)?;
    let grid = SGrid::new(plan.s_end(point.epsilon), plan.n_s)?;
    let contour = model.contour(plan.contour_nodes)?;
    let seq = ExpansionSequence::build(&fam, &grid, &contour, &model.window()?, plan.n_max)?;
    let mut projectors = Vec::with_capacity(plan.n_max + 1);
    let mut bounds = Vec::with_capacity(plan.n_max + 1);
    let mut idempotency = 0.0_f64;
    for n in 0..=plan.n_max {
        let t = seq.assemble_partial(point.epsilon, n);
        let p = build_pn(&t, Construction::Algebraic, grid.nodes())?;
        idempotency = idempotency.max(p.idempotency);
        let defect = projector_defect(&p, &t, &seq);
        bounds.push(lemma1_bound(&defect, &grid, point.epsilon));
        projectors.push(p);
    }
    let refs: Vec<&SuperProjectorFamily> = projectors.iter().collect();
    let block = transition_block(&refs)?;
    let prop = crate::propagator::evolve_certified(
        &fam,
        point.epsilon,
        grid.nodes(),
        plan.tolerance,
        Some(&block),
        plan.step_budget,
    )?;
    let mut rows = Vec::with_capacity((plan.n_max + 1) * grid.len());
    for (n, p) in projectors.iter().enumerate() {
        let gamma = gamma_n(p, &prop)?;
        for (i, &s) in grid.nodes().iter().enumerate() {
            rows.push(SweepRow {
                n,
                point,
                s,
                gamma: gamma[i],
                bound: bounds[n][i],
            });
        }
    }
    let diagnostics = PointDiagnostics {
        unitarity: crate::propagator::unitarity_defect(&prop),
        steps: prop.stats.steps,
        halvings: prop.stats.halvings,
        idempotency,
    };
    Ok((rows, diagnostics))
}

/// `sup_k γₙ` at the last node of every `(ε, a)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SupPoint {
    pub n: usize,
    pub epsilon: f64,
    pub a: f64,
    pub s_end: f64,
    pub gamma: f64,
    pub bound: f64,
    /// Number of fibers that contributed.
    pub fibers: usize,
}

/// Log-log fit of `sup_k γₙ` against `ε` at fixed `a`.
#[derive(Clone, Debug)]
pub struct EpsilonFit {
    pub n: usize,
    pub a: f64,
    pub fit: std::result::Result<crate::fit::ScalingFit, String>,
}

/// Degree-`n` fit of `sup_k γₙ` against `a` at fixed `ε`.
#[derive(Clone, Debug)]
pub struct AGrowthFit {
    pub n: usize,
    pub epsilon: f64,
    pub fit: std::result::Result<PolyFit, String>,
}

#[derive(Clone, Debug)]
pub struct TransitionReport {
    pub plan_mode: crate::config::SweepMode,
    pub outcomes: Vec<PointOutcome>,
    pub sups: Vec<SupPoint>,
    pub epsilon_fits: Vec<EpsilonFit>,
    pub a_growth: Vec<AGrowthFit>,
}

impl TransitionReport {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .flat_map(|(rows, _)| rows.iter())
    }

    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }

    pub fn success_fraction(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        1.0 - self.failed() as f64 / self.outcomes.len() as f64
    }

    /// Largest `γ − bound` over all rows.
    pub fn max_bound_excess(&self) -> f64 {
        self.rows().map(|r| r.gamma - r.bound).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .map(|(_, d)| d.unitarity)
            .fold(0.0, f64::max)
    }
}

/// Runs every `(ε, a, k)` point, then reduces in job order.
pub fn scaling_sweep(
    model: &BandModel,
    drive: Arc<DrivingProfile>,
    plan: &SweepPlan,
    exec: crate::exec::Execution,
) -> Result<TransitionReport> {
    let points = plan.points();
    let outcomes = exec.map(&points, |&point| PointOutcome {
        point,
        result: run_point(model, drive.clone(), plan, point).map_err(|e| e.to_string()),
    })?;
    let mut sups = Vec::new();
    for n in 0..=plan.n_max {
        for &epsilon in &plan.epsilons {
            for &a in &plan.a_values {
                let mut gamma = 0.0_f64;
                let mut bound = 0.0_f64;
                let mut fibers = 0;
                for o in outcomes.iter().filter(|o| o.point.epsilon == epsilon && o.point.a == a) {
                    if let Ok((rows, _)) = &o.result {
                        if let Some(last) = rows.iter().rev().find(|r| r.n == n) {
                            gamma = gamma.max(last.gamma);
                            bound = bound.max(last.bound);
                            fibers += 1;
                        }
                    }
                }
                if fibers > 0 {
                    sups.push(SupPoint {
                        n,
                        epsilon,
                        a,
                        s_end: plan.s_end(epsilon),
                        gamma,
                        bound,
                        fibers,
                    });
                }
            }
        }
    }
    let mut epsilon_fits = Vec::new();
    for n in 0..=plan.n_max {
        for &a in &plan.a_values {
            let pts: Vec<&SupPoint> = sups.iter().filter(|p| p.n == n && p.a == a).collect();
            let x: Vec<f64> = pts.iter().map(|p| p.epsilon).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.gamma).collect();
            epsilon_fits.push(EpsilonFit {
                n,
                a,
                fit: crate::fit::ScalingFit::new(&x, &y).map_err(|e| e.to_string()),
            });
        }
    }
    let mut a_growth = Vec::new();
    for n in 0..=plan.n_max {
        for &epsilon in &plan.epsilons {
            let pts: Vec<&SupPoint> = sups.iter().filter(|p| p.n == n && p.epsilon == epsilon).collect();
            let x: Vec<f64> = pts.iter().map(|p| p.a).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.gamma).collect();
            a_growth.push(AGrowthFit {
                n,
                epsilon,
                fit: PolyFit::new(&x, &y, n).map_err(|e| e.to_string()),
            });
        }
    }
    Ok(TransitionReport {
        plan_mode: plan.mode,
        outcomes,
        sups,
        epsilon_fits,
        a_growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{FiberQuadratic, PeriodicPotential, PlaneWaveTruncation};
    use crate::linalg::resolvent;

    fn quad() -> FiberQuadratic {
        let pot = PeriodicPotential::mathieu(2.0 * std::f64::consts::PI, 0.3).unwrap();
        FiberQuadratic::new(&pot, &PlaneWaveTruncation::new(3, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn kappa_derivatives_match_finite_differences() {
        let q = quad();
        let (kappa, z, h) = (0.2, C64::new(0.3, 0.4), 1e-3);
        let r = |k: f64| resolvent(&q.hamiltonian(k), z).unwrap();
        let eig = Eigh::new(&symmetrize(&q.matrix(kappa)));
        let hp = eig.to_eigenbasis(&q.d_kappa(kappa));
        let d = kappa_derivatives(&resolvent_in_eigenbasis(&eig.values, z), &hp, q.scalar_c());
        let (m2, m1, p0, p1, p2) = (r(kappa - 2.0 * h), r(kappa - h), r(kappa), r(kappa + h), r(kappa + h * 2.0));
        let fd1 = (&p1 - &m1) / C64::new(2.0 * h, 0.0);
        let fd2 = (&p1 - &p0 * C64::new(2.0, 0.0) + &m1) / C64::new(h * h, 0.0);
        let fd3 = (&p2 - &p1 * C64::new(2.0, 0.0) + &m1 * C64::new(2.0, 0.0) - &m2) / C64::new(2.0 * h * h * h, 0.0);
        for (exact, fd) in d.iter().zip([fd1, fd2, fd3]) {
            let err = norm_unchecked(&(eig.from_eigenbasis(exact) - &fd));
            assert!(err < 1e-4 * norm_unchecked(&fd), "{err}");
        }
    }

    #[test]
    fn chain_rule_coefficients() {
        assert_eq!(chain_coefficients([2.0, 3.0, 5.0], 1), [2.0, 0.0, 0.0]);
        assert_eq!(chain_coefficients([2.0, 3.0, 5.0], 2), [3.0, 4.0, 0.0]);
        assert_eq!(chain_coefficients([2.0, 3.0, 5.0], 3), [5.0, 18.0, 8.0]);
    }

    #[test]
    fn lab_frame_round_trip() {
        let f = LabFrame::from_lab(0.05, 0.2);
        assert!((f.a - 4.0).abs() < 1e-15);
        assert!((f.omega() - 0.2).abs() < 1e-15);
        assert!((f.slow_time(f.time(0.7)) - 0.7).abs() < 1e-15);
        let cosine = DrivingProfile::cosine(1.0, 0.0);
        assert!((f.field(&cosine, 0.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn panel_offsets_tile_the_interval() {
        let g = PanelGrid::new(1.0, 4, 17).unwrap();
        let offsets: Vec<f64> = g.offsets().collect();
        assert_eq!(offsets, vec![0.0, 0.25, 0.5, 0.75]);
        assert!((g.panel().s_max() - 0.25).abs() < 1e-15);
        assert!(PanelGrid::new(1.0, 0, 17).is_err());
    }

    #[test]
    fn sweep_points_are_ordered() {
        let cfg = crate::config::RunConfig::reference();
        let plan = SweepPlan::from_config(&cfg).unwrap();
        let pts = plan.points();
        assert_eq!(pts.len(), plan.epsilons.len() * plan.a_values.len() * plan.ks.len());
        assert_eq!(pts[0], SweepPoint { epsilon: plan.epsilons[0], a: plan.a_values[0], k: plan.ks[0] });
        assert_eq!(pts[1].k, plan.ks[1]);
        assert!((plan.s_end(0.0625) - 0.25).abs() < 1e-15);
    }
}
