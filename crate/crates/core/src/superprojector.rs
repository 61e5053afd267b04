//! The exact projectors `P̃ₙ` built from `Tₙ` and the defect of their
//! invariance under the rescaled dynamics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expansion::{ExpansionSequence, TnFamily};
use crate::linalg::{
    commutator, hermiticity_residual, inv_sqrt_spd, norm_unchecked, pair_weight, symmetrize, CMat, Contour, Eigh,
    Hermitian, C64, I,
};

/// Quadrature nodes on `|z − 1| = 1/2`.
pub const CIRCLE_NODES: usize = 64;
/// Eigenvalues of `Tₙ` must lie within this distance of 0 or 1, which
/// keeps them at least as far from the circle `|z − 1| = 1/2`.
pub const SPLIT_MARGIN: f64 = 0.25;
pub const TOL_IDEMPOTENT: f64 = 1e-9;
pub const TOL_HERMITIAN: f64 = 1e-10;
pub const TOL_METHODS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Riesz,
    Algebraic,
}

#[derive(Clone, Debug)]
pub struct SuperProjectorFamily {
    pub order: usize,
    pub epsilon: f64,
    pub method: Construction,
    pub samples: Vec<CMat>,
    pub rank: usize,
    /// `max_i ‖P̃² − P̃‖` over nodes.
    pub idempotency: f64,
    /// `max_i ‖P̃ − P̃†‖` over nodes.
    pub hermiticity: f64,
    /// Largest disagreement between the two constructions at the audit nodes.
    pub method_gap: f64,
}

fn circle() -> Contour {
    Contour::circle(C64::new(1.0, 0.0), 0.5, CIRCLE_NODES).expect("valid circle")
}

fn check_splitting(eig: &Eigh, node: usize, s: f64) -> Result<()> {
    for &l in &eig.values {
        if l.abs() > SPLIT_MARGIN && (l - 1.0).abs() > SPLIT_MARGIN {
            return Err(Error::EpsilonTooLarge { node, s, eigenvalue: l });
        }
    }
    Ok(())
}

/// `Tₙ + (Tₙ − ½)([1 + 4(Tₙ² − Tₙ)]^{−1/2} − 1)`.
pub fn algebraic_projector(t: &CMat) -> Result<CMat> {
    let n = t.nrows();
    let id = CMat::identity(n, n);
    let m = &id + (t * t - t) * C64::new(4.0, 0.0);
    let root = inv_sqrt_spd(&Hermitian::symmetrized(&m))?;
    let half = t - &id * C64::new(0.5, 0.0);
    Ok(t + half * (root.matrix() - id))
}

/// `(i/2π) ∮_{|z−1|=1/2} (Tₙ − z)⁻¹ dz` with one LU solve per node.
pub fn riesz_circle_projector(t: &CMat) -> Result<CMat> {
    let n = t.nrows();
    let mut acc = CMat::zeros(n, n);
    for node in circle().nodes() {
        let mut shifted = t.clone();
        for i in 0..n {
            shifted[(i, i)] -= node.z;
        }
        let inv = shifted.lu().try_inverse().ok_or(Error::Singular { distance: 0.0 })?;
        acc += inv * node.w;
    }
    Ok(acc * (I / (2.0 * PI)))
}

/// Deterministic audit nodes: first, last and a scrambled interior index.
fn audit_nodes(count: usize) -> [usize; 3] {
    let interior = if count > 2 { 1 + (count * 7919 + 13) % (count - 2) } else { 0 };
    [0, interior, count - 1]
}

/// Builds `P̃ₙ` at every node with the requested construction and
/// cross-checks it against the other one at three audit nodes.
pub fn build_pn(t: &TnFamily, method: Construction, nodes: &[f64]) -> Result<SuperProjectorFamily> {
    let mut samples = Vec::with_capacity(t.samples.len());
    let mut idempotency = 0.0_f64;
    let mut hermiticity = 0.0_f64;
    let mut rank = None;
    for (i, ti) in t.samples.iter().enumerate() {
        let eig = Eigh::new(&symmetrize(ti));
        check_splitting(&eig, i, nodes[i])?;
        let p = match method {
            Construction::Algebraic => algebraic_projector(ti)?,
            Construction::Riesz => riesz_circle_projector(ti)?,
        };
        hermiticity = hermiticity.max(hermiticity_residual(&p));
        idempotency = idempotency.max(norm_unchecked(&(&p * &p - &p)));
        let r = p.trace().re.round() as usize;
        match rank {
            None => rank = Some(r),
            Some(r0) if r0 != r => {
                return Err(Error::BandTracking {
                    expected: r0,
                    found: r,
                    s: nodes[i],
                })
            }
            _ => {}
        }
        samples.push(p);
    }
    let mut method_gap = 0.0_f64;
    for i in audit_nodes(samples.len()) {
        let other = match method {
            Construction::Algebraic => riesz_circle_projector(&t.samples[i])?,
            Construction::Riesz => algebraic_projector(&t.samples[i])?,
        };
        method_gap = method_gap.max(norm_unchecked(&(other - &samples[i])));
    }
    if method_gap > TOL_METHODS {
        return Err(Error::Invariant(format!(
            "projector constructions disagree by {method_gap:.3e}"
        )));
    }
    Ok(SuperProjectorFamily {
        order: t.order,
        epsilon: t.epsilon,
        method,
        samples,
        rank: rank.unwrap_or(0),
        idempotency,
        hermiticity,
        method_gap,
    })
}

impl SuperProjectorFamily {
    pub fn is_exact(&self) -> bool {
        self.idempotency < TOL_IDEMPOTENT && self.hermiticity < TOL_HERMITIAN
    }

    /// Orthonormal basis of the range of `P̃ₙ(s_i)`.
    pub fn range_basis(&self, i: usize) -> CMat {
        let eig = Eigh::new(&symmetrize(&self.samples[i]));
        let n = eig.dim();
        let cols: Vec<usize> = (0..n).filter(|&j| eig.values[j] > 0.5).collect();
        CMat::from_fn(n, cols.len(), |r, c| eig.vectors[(r, cols[c])])
    }

    /// `sup_i ‖P̃ₙ(s_i) − other(s_i)‖`.
    pub fn distance(&self, other: &[CMat]) -> f64 {
        self.samples
            .iter()
            .zip(other)
            .map(|(a, b)| norm_unchecked(&(a - b)))
            .fold(0.0, f64::max)
    }
}

/// Node-wise diagnostics of `iεP̃ₙ' − [H̃₀, P̃ₙ]` against its contour form.
#[derive(Clone, Debug)]
pub struct ProjectorDefect {
    /// `‖iεP̃ₙ' − [H̃₀, P̃ₙ]‖` per node.
    pub lhs: Vec<f64>,
    /// `‖(εⁿ⁺¹/2π) ∮ (Tₙ − z)⁻¹ Ẽₙ' (Tₙ − z)⁻¹ dz‖` per node.
    pub rhs: Vec<f64>,
    /// Norm of the difference of the two matrices per node.
    pub mismatch: Vec<f64>,
}

impl ProjectorDefect {
    pub fn lhs_sup(&self) -> f64 {
        self.lhs.iter().copied().fold(0.0, f64::max)
    }

    pub fn rhs_sup(&self) -> f64 {
        self.rhs.iter().copied().fold(0.0, f64::max)
    }

    pub fn mismatch_sup(&self) -> f64 {
        self.mismatch.iter().copied().fold(0.0, f64::max)
    }
}

pub fn projector_defect(p: &SuperProjectorFamily, t: &TnFamily, seq: &ExpansionSequence) -> ProjectorDefect {
    let eps = p.epsilon;
    let dp = seq.grid().differentiate(&p.samples);
    let nodes = circle().nodes();
    let scale = eps.powi(p.order as i32 + 1) / (2.0 * PI);
    let mut out = ProjectorDefect {
        lhs: Vec::with_capacity(dp.len()),
        rhs: Vec::with_capacity(dp.len()),
        mismatch: Vec::with_capacity(dp.len()),
    };
    for i in 0..dp.len() {
        let lhs = &dp[i] * (I * eps) - commutator(&seq.hamiltonians()[i], &p.samples[i]);
        let eig = Eigh::new(&symmetrize(&t.samples[i]));
        let mut m = eig.to_eigenbasis(&seq.derivative(p.order)[i]);
        let n = eig.dim();
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] *= pair_weight(&nodes, eig.values[r], eig.values[c]) * scale;
            }
        }
        let rhs = eig.from_eigenbasis(&m);
        out.mismatch.push(norm_unchecked(&(&lhs - &rhs)));
        out.lhs.push(norm_unchecked(&lhs));
        out.rhs.push(norm_unchecked(&rhs));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bloch::{BandModel, PeriodicPotential, PlaneWaveTruncation};
    use crate::chebyshev::SGrid;
    use crate::drive::DrivingProfile;

    fn seq(drive: DrivingProfile, order: usize) -> ExpansionSequence {
        let pot = PeriodicPotential::mathieu(2.0 * PI, 0.3).unwrap();
        let tr = PlaneWaveTruncation::new(6, 1.0).unwrap();
        let model = BandModel::new(&pot, &tr, 0, 0, 32).unwrap();
        let fam = model.family(-0.1, Arc::new(drive), 1.0, order + 1).unwrap();
        let grid = SGrid::new(1.0, 33).unwrap();
        ExpansionSequence::build(&fam, &grid, &model.contour(32).unwrap(), &model.window().unwrap(), order).unwrap()
    }

    #[test]
    fn order_zero_returns_the_spectral_projector() {
        let s = seq(DrivingProfile::cosine(1.0, 0.0), 0);
        let t = s.assemble_tn(0.1);
        let p = build_pn(&t, Construction::Algebraic, s.grid().nodes()).unwrap();
        assert!(p.distance(s.term(0)) < 1e-12);
        assert_eq!(p.rank, 1);
    }

    #[test]
    fn constructions_agree_and_are_exact() {
        let s = seq(DrivingProfile::cosine(1.0, 0.0), 2);
        let t = s.assemble_tn(1.0 / 32.0);
        let a = build_pn(&t, Construction::Algebraic, s.grid().nodes()).unwrap();
        let r = build_pn(&t, Construction::Riesz, s.grid().nodes()).unwrap();
        assert!(a.distance(&r.samples) < 1e-9);
        assert!(a.is_exact() && r.is_exact());
        let t0 = s.assemble_tn(0.0);
        let p0 = build_pn(&t0, Construction::Algebraic, s.grid().nodes()).unwrap();
        assert!(p0.distance(s.term(0)) < 1e-12);
    }

    #[test]
    fn defect_identity_holds() {
        for order in 1..=2 {
            let s = seq(DrivingProfile::cosine(1.0, 0.0), order);
            let t = s.assemble_tn(1.0 / 32.0);
            let p = build_pn(&t, Construction::Algebraic, s.grid().nodes()).unwrap();
            let d = projector_defect(&p, &t, &s);
            assert!(d.mismatch_sup() < 1e-6, "order {order}: {}", d.mismatch_sup());
            assert!(d.lhs_sup() > 0.0);
        }
    }

    #[test]
    fn static_family_has_no_defect() {
        let s = seq(DrivingProfile::constant(0.0), 1);
        let t = s.assemble_tn(0.1);
        let p = build_pn(&t, Construction::Riesz, s.grid().nodes()).unwrap();
        let d = projector_defect(&p, &t, &s);
        assert!(d.lhs_sup() < 1e-12 && d.rhs_sup() < 1e-12);
    }

    #[test]
    fn large_epsilon_is_rejected() {
        let s = seq(DrivingProfile::cosine(1.0, 0.0), 2);
        let t = s.assemble_tn(2.0);
        assert!(matches!(
            build_pn(&t, Construction::Algebraic, s.grid().nodes()),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }
}
