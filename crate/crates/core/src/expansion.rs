//! The recurrence `Ẽ₀ → Ẽ₁ → … → Ẽₙ` on a Chebyshev grid in `s`,
//! its identity checks and the truncated sums `Tₙ = Σ εʲ Ẽⱼ`.

use std::f64::consts::PI;

use crate::bloch::FiberFamily;
use crate::chebyshev::SGrid;
use crate::error::{Error, Result};
use crate::linalg::{
    check_contour_clearance, commutator, hermiticity_residual, norm_unchecked, symmetrize, CMat, Contour, Eigh,
    SpectralQuadrature, SpectralWindow, C64, I,
};

/// Hermiticity drift tolerated silently before symmetrization.
pub const TOL_EXP: f64 = 1e-8;
/// Drift beyond which the recurrence is considered unstable.
pub const TOL_INSTABILITY: f64 = 1e-6;

/// Spectral data of `H̃₀(s_i)` shared by every order.
#[derive(Clone, Debug)]
pub struct NodeSpectrum {
    pub eig: Eigh,
    pub quad: SpectralQuadrature,
}

#[derive(Clone, Debug)]
pub struct ExpansionSequence {
    order: usize,
    grid: SGrid,
    family: FiberFamily,
    contour: Contour,
    rank: usize,
    hamiltonians: Vec<CMat>,
    spectra: Vec<NodeSpectrum>,
    terms: Vec<Vec<CMat>>,
    derivatives: Vec<Vec<CMat>>,
    drift: Vec<f64>,
}

impl ExpansionSequence {
    /// Builds `Ẽ₀, …, Ẽₙ` and their spectral `s`-derivatives on `grid`.
    pub fn build(family: &FiberFamily, grid: &SGrid, contour: &Contour, window: &SpectralWindow, order: usize) -> Result<Self> {
        let mut hamiltonians = Vec::with_capacity(grid.len());
        let mut spectra = Vec::with_capacity(grid.len());
        let mut e0 = Vec::with_capacity(grid.len());
        let expected = window.band_count();
        for &s in grid.nodes() {
            let h = symmetrize(&family.matrix(s)?);
            let eig = Eigh::new(&h);
            check_contour_clearance(&eig.values, contour, window.gap_margin())?;
            let quad = SpectralQuadrature::adaptive(&eig.values, contour)?;
            let found = quad.rank();
            if found != expected {
                return Err(Error::BandTracking { expected, found, s });
            }
            let diag: Vec<C64> = quad.riesz.iter().map(|&p| C64::new(p, 0.0)).collect();
            e0.push(symmetrize(&eig.apply_diagonal(&diag)));
            hamiltonians.push(h);
            spectra.push(NodeSpectrum { eig, quad });
        }
        let mut seq = ExpansionSequence {
            order,
            grid: grid.clone(),
            family: family.clone(),
            contour: contour.clone(),
            rank: expected,
            hamiltonians,
            spectra,
            terms: vec![e0],
            derivatives: Vec::new(),
            drift: vec![0.0],
        };
        for j in 1..=order {
            seq.extend(j)?;
        }
        let last = seq.grid.differentiate(&seq.terms[order]);
        seq.derivatives.push(last);
        Ok(seq)
    }

    fn extend(&mut self, j: usize) -> Result<()> {
        let dprev = self.grid.differentiate(&self.terms[j - 1]);
        let dim = self.family.dim();
        let identity = CMat::identity(dim, dim);
        let mut next = Vec::with_capacity(self.grid.len());
        let mut worst = 0.0_f64;
        for (i, &s) in self.grid.nodes().iter().enumerate() {
            let p = &self.terms[0][i];
            let q = &identity - p;
            let mut sj = CMat::zeros(dim, dim);
            for m in 1..j {
                sj += &self.terms[m][i] * &self.terms[j - m][i];
            }
            let x = &q * &dprev[i] * p - p * &dprev[i] * &q;
            let c = self.contour_term(i, &x);
            let e = c + &sj - p * &sj * p * C64::new(2.0, 0.0);
            let scale = 1.0_f64.max(e.iter().map(|z| z.norm()).fold(0.0, f64::max));
            let residual = hermiticity_residual(&e) / scale;
            if residual > TOL_INSTABILITY {
                return Err(Error::Instability { order: j, residual, s });
            }
            worst = worst.max(residual);
            next.push(symmetrize(&e));
        }
        self.drift.push(worst);
        self.derivatives.push(dprev);
        self.terms.push(next);
        Ok(())
    }

    /// `-(1/2π) ∮ R(z) X R(z) dz` at node `i`, evaluated in the eigenbasis.
    fn contour_term(&self, i: usize, x: &CMat) -> CMat {
        let spec = &self.spectra[i];
        let mut xh = spec.eig.to_eigenbasis(x);
        for (z, c) in xh.iter_mut().zip(spec.quad.pairs.iter()) {
            *z *= c * (-1.0 / (2.0 * PI));
        }
        spec.eig.from_eigenbasis(&xh)
    }

    /// `Ẽ₀' = -(i/2π) ∮ R H̃₀' R dz` from the analytic derivative of the family.
    pub fn analytic_projector_derivative(&self, i: usize) -> Result<CMat> {
        let dh = self.family.derivative(self.grid.nodes()[i], 1)?;
        let spec = &self.spectra[i];
        let mut m = spec.eig.to_eigenbasis(&dh);
        for (z, c) in m.iter_mut().zip(spec.quad.pairs.iter()) {
            *z *= c * (-I / (2.0 * PI));
        }
        Ok(spec.eig.from_eigenbasis(&m))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    pub fn family(&self) -> &FiberFamily {
        &self.family
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn hamiltonians(&self) -> &[CMat] {
        &self.hamiltonians
    }

    pub fn spectra(&self) -> &[NodeSpectrum] {
        &self.spectra
    }

    /// `Ẽⱼ(s_i)` for every node.
    pub fn term(&self, j: usize) -> &[CMat] {
        &self.terms[j]
    }

    /// `Ẽⱼ'(s_i)` for every node (spectral derivative).
    pub fn derivative(&self, j: usize) -> &[CMat] {
        &self.derivatives[j]
    }

    /// Largest relative hermiticity residual of `Ẽⱼ` before symmetrization.
    pub fn hermiticity_drift(&self, j: usize) -> f64 {
        self.drift[j]
    }

    pub fn term_sup_norm(&self, j: usize) -> f64 {
        self.terms[j].iter().map(norm_unchecked).fold(0.0, f64::max)
    }

    pub fn derivative_sup_norm(&self, j: usize) -> f64 {
        self.derivatives[j].iter().map(norm_unchecked).fold(0.0, f64::max)
    }

    pub fn verify_identities(&self) -> IdentityReport {
        let nodes = self.grid.len();
        let mut idempotency = Vec::with_capacity(self.order + 1);
        let mut intertwining = Vec::with_capacity(self.order + 1);
        for j in 0..=self.order {
            let mut e1 = Vec::with_capacity(nodes);
            let mut e2 = Vec::with_capacity(nodes);
            for i in 0..nodes {
                let mut sum = CMat::zeros(self.family.dim(), self.family.dim());
                for m in 0..=j {
                    sum += &self.terms[m][i] * &self.terms[j - m][i];
                }
                e1.push(norm_unchecked(&(&self.terms[j][i] - sum)));
                if j >= 1 {
                    let lhs = &self.derivatives[j - 1][i] * I - commutator(&self.hamiltonians[i], &self.terms[j][i]);
                    e2.push(norm_unchecked(&lhs));
                }
            }
            idempotency.push(e1);
            intertwining.push(e2);
        }
        IdentityReport {
            idempotency,
            intertwining,
        }
    }

    pub fn assemble_tn(&self, epsilon: f64) -> TnFamily {
        self.assemble_partial(epsilon, self.order)
    }

    /// `Tₘ` for `m ≤ order`.
    pub fn assemble_partial(&self, epsilon: f64, order: usize) -> TnFamily {
        assert!(order <= self.order, "order {order} exceeds the built order {}", self.order);
        let samples = (0..self.grid.len())
            .map(|i| {
                let mut t = self.terms[0][i].clone();
                let mut w = 1.0;
                for j in 1..=order {
                    w *= epsilon;
                    t += &self.terms[j][i] * C64::new(w, 0.0);
                }
                t
            })
            .collect();
        TnFamily {
            order,
            epsilon,
            samples,
        }
    }

    /// `(sup_s ‖Tₙ² − Tₙ‖, sup_s ‖iεTₙ' − [H̃₀, Tₙ] − iεⁿ⁺¹Ẽₙ'‖)`.
    pub fn tn_defects(&self, t: &TnFamily) -> (f64, f64) {
        let eps = t.epsilon;
        let mut idem = 0.0_f64;
        let mut flow = 0.0_f64;
        for i in 0..self.grid.len() {
            let ti = &t.samples[i];
            idem = idem.max(norm_unchecked(&(ti * ti - ti)));
            let mut dt = self.derivatives[0][i].clone();
            let mut w = 1.0;
            for j in 1..=t.order {
                w *= eps;
                dt += &self.derivatives[j][i] * C64::new(w, 0.0);
            }
            let top = &self.derivatives[t.order][i] * (I * eps.powi(t.order as i32 + 1));
            let r = dt * (I * eps) - commutator(&self.hamiltonians[i], ti) - top;
            flow = flow.max(norm_unchecked(&r));
        }
        (idem, flow)
    }
}

/// Per-order, per-node residuals of the two recurrence identities.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    /// `‖Ẽⱼ − Σ_{m=0}^{j} Ẽ_m Ẽ_{j−m}‖`, indexed `[j][node]`.
    pub idempotency: Vec<Vec<f64>>,
    /// `‖iẼ_{j−1}' − [H̃₀, Ẽⱼ]‖`, indexed `[j][node]`; empty for `j = 0`.
    pub intertwining: Vec<Vec<f64>>,
}

impl IdentityReport {
    pub fn idempotency_max(&self, j: usize) -> f64 {
        self.idempotency[j].iter().copied().fold(0.0, f64::max)
    }

    pub fn intertwining_max(&self, j: usize) -> f64 {
        self.intertwining[j].iter().copied().fold(0.0, f64::max)
    }
}

/// `Tₙ(s_i) = Σ_{j≤n} εʲ Ẽⱼ(s_i)`.
#[derive(Clone, Debug)]
pub struct TnFamily {
    pub order: usize,
    pub epsilon: f64,
    pub samples: Vec<CMat>,
}
