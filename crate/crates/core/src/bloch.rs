//! One-dimensional Bloch model: periodic potential, plane-wave fibers
//! `h(κ) = A + κB + κ²C`, the gap certificate and the rescaled-frame
//! families `H̃₀(s, a) = h(k + G(s, a))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::drive::DrivingProfile;
use crate::error::{Error, Result};
use crate::linalg::{CMat, Contour, Eigh, Hermitian, SpectralWindow, C64};

/// Bands closer than this are treated as touching.
pub const D_MIN_TOL: f64 = 1e-6;

/// `V(x) = Σ_m v_m e^{2πi m x / ℓ}` with `v_{-m} = conj(v_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPotential {
    period: f64,
    coeffs: BTreeMap<i64, C64>,
}

impl PeriodicPotential {
    /// Builds the potential from the coefficients with `m ≥ 0`; negative
    /// harmonics are filled in by conjugation. Listing a negative index is
    /// accepted only if it matches the conjugate of its partner.
    pub fn new(period: f64, coeffs: impl IntoIterator<Item = (i64, C64)>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidPotential(format!("period {period} must be positive")));
        }
        let given: BTreeMap<i64, C64> = coeffs.into_iter().collect();
        let mut full = BTreeMap::new();
        for (&m, &v) in &given {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidPotential(format!("coefficient v_{m} is not finite")));
            }
            if m == 0 && v.im != 0.0 {
                return Err(Error::InvalidPotential("v_0 must be real".into()));
            }
            if let Some(&partner) = given.get(&-m) {
                if (partner - v.conj()).norm() > 1e-14 * (1.0 + v.norm()) {
                    return Err(Error::InvalidPotential(format!(
                        "v_{} must equal conj(v_{m}) for a real potential",
                        -m
                    )));
                }
            }
            if v != C64::new(0.0, 0.0) {
                full.insert(m, v);
                full.insert(-m, v.conj());
            }
        }
        Ok(PeriodicPotential {
            period,
            coeffs: full,
        })
    }

    /// `V(x) = 2 v₁ cos(2πx/ℓ)`, i.e. `v_{±1} = v₁`.
    pub fn mathieu(period: f64, v1: f64) -> Result<Self> {
        Self::new(period, [(1, C64::new(v1, 0.0))])
    }

    pub fn free(period: f64) -> Result<Self> {
        Self::new(period, std::iter::empty())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficient(&self, m: i64) -> C64 {
        self.coeffs.get(&m).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn max_harmonic(&self) -> i64 {
        self.coeffs.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `V(x)`; real by construction.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&m, v)| (v * C64::from_polar(1.0, 2.0 * PI * m as f64 * x / self.period)).re)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWaveTruncation {
    pub cutoff: usize,
    #[serde(default = "unit_mass")]
    pub mass: f64,
}

fn unit_mass() -> f64 {
    1.0
}

impl PlaneWaveTruncation {
    pub fn new(cutoff: usize, mass: f64) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::Config("plane-wave cutoff must be positive".into()));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Config(format!("mass {mass} must be positive")));
        }
        Ok(PlaneWaveTruncation { cutoff, mass })
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }
}

/// The coefficients of `h(κ) = A + κB + κ²C` with `C = c·I`.
#[derive(Clone, Debug)]
pub struct FiberQuadratic {
    a: CMat,
    a_real: Option<DMatrix<f64>>,
    b_diag: Vec<f64>,
    c: f64,
    period: f64,
}

impl FiberQuadratic {
    pub fn new(pot: &PeriodicPotential, tr: &PlaneWaveTruncation) -> Result<Self> {
        let cutoff = tr.cutoff;
        let max = pot.max_harmonic();
        if max > 2 * cutoff as i64 {
            return Err(Error::Truncation {
                harmonic: max,
                cutoff,
            });
        }
        let dim = tr.dim();
        let g = |i: usize| 2.0 * PI * (i as f64 - cutoff as f64) / pot.period();
        let a = CMat::from_fn(dim, dim, |i, j| {
            let v = pot.coefficient(i as i64 - j as i64);
            if i == j {
                v + C64::new(g(i) * g(i) / (2.0 * tr.mass), 0.0)
            } else {
                v
            }
        });
        let b_diag = (0..dim).map(|i| g(i) / tr.mass).collect();
        let a_real = a.iter().all(|z| z.im == 0.0).then(|| a.map(|z| z.re));
        Ok(FiberQuadratic {
            a,
            a_real,
            b_diag,
            c: 0.5 / tr.mass,
            period: pot.period(),
        })
    }

    pub fn dim(&self) -> usize {
        self.b_diag.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Half-width `π/ℓ` of the Brillouin zone.
    pub fn zone_edge(&self) -> f64 {
        PI / self.period
    }

    pub fn matrix_a(&self) -> &CMat {
        &self.a
    }

    pub fn matrix_b(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.b_diag.iter().map(|&b| C64::new(b, 0.0)),
        ))
    }

    pub fn scalar_c(&self) -> f64 {
        self.c
    }

    pub fn matrix(&self, kappa: f64) -> CMat {
        let mut h = self.a.clone();
        let shift = kappa * kappa * self.c;
        for i in 0..self.dim() {
            h[(i, i)] += C64::new(kappa * self.b_diag[i] + shift, 0.0);
        }
        h
    }

    /// `h(κ)` as a real symmetric matrix when every potential coefficient is real.
    pub fn real_matrix(&self, kappa: f64) -> Option<DMatrix<f64>> {
        let mut h = self.a_real.clone()?;
        let shift = kappa * kappa * self.c;
        for i in 0..self.dim() {
            h[(i, i)] += kappa * self.b_diag[i] + shift;
        }
        Some(h)
    }

    pub fn hamiltonian(&self, kappa: f64) -> Hermitian {
        Hermitian::symmetrized(&self.matrix(kappa))
    }

    /// `∂_κ h = B + 2κC`.
    pub fn d_kappa(&self, kappa: f64) -> CMat {
        self.diag(|b| b + 2.0 * kappa * self.c)
    }

    /// `∂²_κ h = 2C`.
    pub fn d2_kappa(&self) -> CMat {
        self.diag(|_| 2.0 * self.c)
    }

    fn diag(&self, f: impl Fn(f64) -> f64) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.b_diag.iter().map(|&b| C64::new(f(b), 0.0)),
        ))
    }

    pub fn eigenvalues(&self, kappa: f64) -> Vec<f64> {
        Eigh::new(&self.matrix(kappa)).values
    }
}

/// `h(κ)` as a checked Hermitian matrix.
pub fn fiber_hamiltonian(pot: &PeriodicPotential, tr: &PlaneWaveTruncation, kappa: f64) -> Result<Hermitian> {
    let q = FiberQuadratic::new(pot, tr)?;
    Hermitian::new(q.matrix(kappa))
}

/// Quasimomentum grids over the Brillouin zone `[-π/ℓ, π/ℓ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    points: Vec<f64>,
}

impl KGrid {
    /// Cell midpoints `-π/ℓ + (j + ½)·2π/(ℓn)`; symmetric about 0.
    pub fn symmetric(period: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("k-grid needs at least one point".into()));
        }
        let width = 2.0 * PI / period;
        let points = (0..n)
            .map(|j| -0.5 * width + (j as f64 + 0.5) * width / n as f64)
            .collect();
        Ok(KGrid { points })
    }

    /// `n + 1` points including both zone edges (and 0 for even `n`).
    pub fn closed(period: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("closed k-grid needs at least two intervals".into()));
        }
        let width = 2.0 * PI / period;
        let points = (0..=n)
            .map(|j| {
                if 2 * j == n {
                    0.0
                } else {
                    -0.5 * width + j as f64 * width / n as f64
                }
            })
            .collect();
        Ok(KGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapCertificate {
    /// Extent of the selected bands.
    pub band_lo: f64,
    pub band_hi: f64,
    /// Top of the spectrum below the window, if any.
    pub rest_below: Option<f64>,
    /// Bottom of the spectrum above the window, if any.
    pub rest_above: Option<f64>,
    pub gap: f64,
}

impl GapCertificate {
    pub fn window(&self, first: usize, last: usize) -> Result<SpectralWindow> {
        SpectralWindow::new(first, last, self.gap)
    }

    pub fn contour(&self, node_count: usize) -> Result<Contour> {
        Contour::enclosing_band(self.band_lo, self.band_hi, self.gap, node_count)
    }
}

/// Distance between the selected bands `first..=last` and the rest of the
/// spectrum of `h(κ)`, taken between band intervals over the grid. Grid
/// extrema are polished by golden-section search so the result does not
/// depend on whether the grid happens to hit a band edge.
pub fn gap_certificate(q: &FiberQuadratic, first: usize, last: usize, kappas: &[f64]) -> Result<GapCertificate> {
    let dim = q.dim();
    if last < first || last >= dim {
        return Err(Error::InvalidWindow(format!(
            "bands {first}..={last} outside 0..{dim}"
        )));
    }
    if kappas.is_empty() {
        return Err(Error::InvalidGrid("empty k-grid".into()));
    }
    let table: Vec<Vec<f64>> = kappas.iter().map(|&k| q.eigenvalues(k)).collect();
    let band_lo = polished_extremum(q, kappas, &table, first, false);
    let band_hi = polished_extremum(q, kappas, &table, last, true);
    let rest_below = (first > 0).then(|| polished_extremum(q, kappas, &table, first - 1, true));
    let rest_above = (last + 1 < dim).then(|| polished_extremum(q, kappas, &table, last + 1, false));
    let below = rest_below.map(|r| (band_lo - r, first - 1, first));
    let above = rest_above.map(|r| (r - band_hi, last, last + 1));
    let (gap, lower, upper) = match (below, above) {
        (Some(b), Some(a)) => {
            if b.0 <= a.0 {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => {
            return Err(Error::InvalidWindow("window covers the whole spectrum".into()));
        }
    };
    if gap <= D_MIN_TOL {
        return Err(Error::NoGap { lower, upper, gap });
    }
    Ok(GapCertificate {
        band_lo,
        band_hi,
        rest_below,
        rest_above,
        gap,
    })
}

fn polished_extremum(q: &FiberQuadratic, kappas: &[f64], table: &[Vec<f64>], band: usize, maximum: bool) -> f64 {
    let sign = if maximum { -1.0 } else { 1.0 };
    let f = |k: f64| sign * q.eigenvalues(k)[band];
    let (best, _) = table
        .iter()
        .enumerate()
        .map(|(i, row)| (i, sign * row[band]))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let mut value = sign * table[best][band];
    if kappas.len() >= 3 {
        let lo = kappas[best.saturating_sub(1)];
        let hi = kappas[(best + 1).min(kappas.len() - 1)];
        if hi > lo {
            value = value.min(golden_min(f, lo, hi));
        }
    }
    sign * value
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.min(fd);
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best.min(f(a)).min(f(b))
}

/// The rescaled-frame family `s ↦ H̃₀(s, a) = h(k + G(s, a))` of one fiber.
#[derive(Clone, Debug)]
pub struct FiberFamily {
    quad: Arc<FiberQuadratic>,
    k: f64,
    drive: Arc<DrivingProfile>,
    a: f64,
    order: usize,
}

impl FiberFamily {
    pub fn new(quad: Arc<FiberQuadratic>, k: f64, drive: Arc<DrivingProfile>, a: f64, order: usize) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Config(format!("ratio a = {a} must be nonnegative")));
        }
        if !k.is_finite() {
            return Err(Error::Config("quasimomentum must be finite".into()));
        }
        let supported = drive.max_derivative_order() + 1;
        if order > supported {
            return Err(Error::Capability {
                requested: order,
                supported,
            });
        }
        Ok(FiberFamily {
            quad,
            k,
            drive,
            a,
            order,
        })
    }

    pub fn quadratic(&self) -> &FiberQuadratic {
        &self.quad
    }

    pub fn shared_quadratic(&self) -> Arc<FiberQuadratic> {
        Arc::clone(&self.quad)
    }

    pub fn drive(&self) -> &DrivingProfile {
        &self.drive
    }

    pub fn shared_drive(&self) -> Arc<DrivingProfile> {
        Arc::clone(&self.drive)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn derivative_order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    /// `κ(s) = k + G(s, a)`.
    pub fn kappa(&self, s: f64) -> Result<f64> {
        Ok(self.k + self.drive.primitive(s, self.a)?)
    }

    /// `κ^{(j)}(s)`.
    pub fn kappa_derivative(&self, s: f64, j: usize) -> Result<f64> {
        if j == 0 {
            self.kappa(s)
        } else {
            self.drive.primitive_derivative(s, self.a, j)
        }
    }

    pub fn matrix(&self, s: f64) -> Result<CMat> {
        Ok(self.quad.matrix(self.kappa(s)?))
    }

    pub fn hamiltonian(&self, s: f64) -> Result<Hermitian> {
        Ok(Hermitian::symmetrized(&self.matrix(s)?))
    }

    /// `H̃₀^{(n)}(s) = κ^{(n)} B + (κ²)^{(n)} C` for `1 ≤ n ≤ order`.
    pub fn derivative(&self, s: f64, n: usize) -> Result<CMat> {
        if n == 0 {
            return self.matrix(s);
        }
        if n > self.order {
            return Err(Error::Capability {
                requested: n,
                supported: self.order,
            });
        }
        let kd: Vec<f64> = (0..=n).map(|j| self.kappa_derivative(s, j)).collect::<Result<_>>()?;
        let mut sq = 0.0;
        let mut binom = 1.0;
        for i in 0..=n {
            sq += binom * kd[i] * kd[n - i];
            binom = binom * (n - i) as f64 / (i + 1) as f64;
        }
        let c = self.quad.scalar_c();
        Ok(self.quad.diag(|b| kd[n] * b + sq * c))
    }
}

/// `tilde_family(pot, tr, k, drive, a, n)`.
pub fn tilde_family(
    pot: &PeriodicPotential,
    tr: &PlaneWaveTruncation,
    k: f64,
    drive: &DrivingProfile,
    a: f64,
    order: usize,
) -> Result<FiberFamily> {
    drive.validate()?;
    FiberFamily::new(
        Arc::new(FiberQuadratic::new(pot, tr)?),
        k,
        Arc::new(drive.clone()),
        a,
        order,
    )
}

/// Band energies over a k-grid plus the gap certificate of a window.
#[derive(Clone, Debug)]
pub struct BandModel {
    pub quad: Arc<FiberQuadratic>,
    pub first: usize,
    pub last: usize,
    pub certificate: GapCertificate,
}

impl BandModel {
    pub fn new(pot: &PeriodicPotential, tr: &PlaneWaveTruncation, first: usize, last: usize, k_intervals: usize) -> Result<Self> {
        let quad = Arc::new(FiberQuadratic::new(pot, tr)?);
        let grid = KGrid::closed(pot.period(), k_intervals.max(2))?;
        let certificate = gap_certificate(&quad, first, last, grid.points())?;
        Ok(BandModel {
            quad,
            first,
            last,
            certificate,
        })
    }

    pub fn window(&self) -> Result<SpectralWindow> {
        self.certificate.window(self.first, self.last)
    }

    pub fn contour(&self, node_count: usize) -> Result<Contour> {
        self.certificate.contour(node_count)
    }

    pub fn family(&self, k: f64, drive: Arc<DrivingProfile>, a: f64, order: usize) -> Result<FiberFamily> {
        FiberFamily::new(Arc::clone(&self.quad), k, drive, a, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mathieu_quad(cutoff: usize) -> FiberQuadratic {
        let pot = PeriodicPotential::mathieu(2.0 * PI, 0.3).unwrap();
        FiberQuadratic::new(&pot, &PlaneWaveTruncation::new(cutoff, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn free_fiber_is_kinetic_diagonal() {
        let pot = PeriodicPotential::free(2.0 * PI).unwrap();
        let tr = PlaneWaveTruncation::new(1, 1.0).unwrap();
        let h = fiber_hamiltonian(&pot, &tr, 0.0).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| h.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![0.5, 0.0, 0.5]);
        let q = FiberQuadratic::new(&pot, &tr).unwrap();
        let kappa = 0.37;
        let mut expected: Vec<f64> = (-1..=1).map(|m| (m as f64 + kappa).powi(2) / 2.0).collect();
        expected.sort_by(f64::total_cmp);
        for (e, x) in q.eigenvalues(kappa).iter().zip(&expected) {
            assert!((e - x).abs() < 1e-14);
        }
    }

    #[test]
    fn potential_symmetry_is_enforced() {
        assert!(PeriodicPotential::new(1.0, [(0, C64::new(0.1, 0.2))]).is_err());
        assert!(PeriodicPotential::new(1.0, [(1, C64::new(0.1, 0.2)), (-1, C64::new(0.1, 0.2))]).is_err());
        let p = PeriodicPotential::new(1.0, [(2, C64::new(0.1, 0.2))]).unwrap();
        assert_eq!(p.coefficient(-2), C64::new(0.1, -0.2));
        assert!(p.evaluate(0.3).is_finite());
        assert!(PeriodicPotential::mathieu(0.0, 0.3).is_err());
    }

    #[test]
    fn unrepresentable_harmonics_are_rejected() {
        let pot = PeriodicPotential::new(2.0 * PI, [(5, C64::new(0.1, 0.0))]).unwrap();
        let tr = PlaneWaveTruncation::new(2, 1.0).unwrap();
        assert!(matches!(
            FiberQuadratic::new(&pot, &tr),
            Err(Error::Truncation { harmonic: 5, cutoff: 2 })
        ));
    }

    #[test]
    fn periodicity_in_quasimomentum() {
        let q = mathieu_quad(16);
        let a = q.eigenvalues(0.2);
        let b = q.eigenvalues(1.2);
        for i in 0..6 {
            assert!((a[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn grids_have_expected_points() {
        let g = KGrid::symmetric(2.0 * PI, 4).unwrap();
        assert_eq!(g.points(), &[-0.375, -0.125, 0.125, 0.375]);
        let c = KGrid::closed(2.0 * PI, 4).unwrap();
        assert_eq!(c.points(), &[-0.5, -0.25, 0.0, 0.25, 0.5]);
    }

    #[test]
    fn free_bands_have_no_gap() {
        let pot = PeriodicPotential::free(2.0 * PI).unwrap();
        let q = FiberQuadratic::new(&pot, &PlaneWaveTruncation::new(4, 1.0).unwrap()).unwrap();
        let grid = KGrid::closed(2.0 * PI, 32).unwrap();
        match gap_certificate(&q, 0, 0, grid.points()) {
            Err(Error::NoGap { lower: 0, upper: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mathieu_gap_is_grid_independent() {
        let q = mathieu_quad(12);
        let d32 = gap_certificate(&q, 0, 0, KGrid::closed(2.0 * PI, 32).unwrap().points()).unwrap();
        let d64 = gap_certificate(&q, 0, 0, KGrid::closed(2.0 * PI, 64).unwrap().points()).unwrap();
        assert!((d32.gap - d64.gap).abs() < 1e-6);
        assert!(d32.gap > 0.5 && d32.gap < 0.7);
        let contour = d32.contour(64).unwrap();
        assert!(contour.encloses_real(0.5 * (d32.band_lo + d32.band_hi)));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fam = FiberFamily::new(
            Arc::new(mathieu_quad(6)),
            0.21,
            Arc::new(DrivingProfile::cosine(0.9, 0.3)),
            1.7,
            3,
        )
        .unwrap();
        let s = 0.63;
        let h = 1e-3;
        for n in 1..=3 {
            let f = |x: f64| fam.derivative(x, n - 1).unwrap();
            // Richardson-extrapolated central difference
            let d1 = (f(s + h) - f(s - h)) / C64::new(2.0 * h, 0.0);
            let d2 = (f(s + h / 2.0) - f(s - h / 2.0)) / C64::new(h, 0.0);
            let fd = (d2 * C64::new(4.0, 0.0) - d1) / C64::new(3.0, 0.0);
            let exact = fam.derivative(s, n).unwrap();
            let err = (fd - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "order {n}: {err}");
        }
        assert!(fam.derivative(s, 4).is_err());
    }

    #[test]
    fn constant_field_family_is_a_shift() {
        let q = Arc::new(mathieu_quad(3));
        let fam = FiberFamily::new(Arc::clone(&q), 0.1, Arc::new(DrivingProfile::constant(1.0)), 2.0, 2).unwrap();
        let s = 0.4;
        assert!((fam.matrix(s).unwrap() - q.matrix(0.5)).iter().all(|z| z.norm() < 1e-14));
        let expected = q.matrix_b() + CMat::identity(7, 7) * C64::new(2.0 * 0.5 * q.scalar_c(), 0.0);
        assert!((fam.derivative(s, 1).unwrap() - expected).iter().all(|z| z.norm() < 1e-14));
        let tabulated = DrivingProfile::Tabulated {
            start: 0.0,
            step: 0.1,
            values: vec![1.0; 10],
        };
        assert!(matches!(
            FiberFamily::new(q, 0.0, Arc::new(tabulated), 1.0, 5),
            Err(Error::Capability { .. })
        ));
    }
}
