//! Run configuration: TOML in, validated structures out.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bloch::{BandModel, KGrid, PeriodicPotential, PlaneWaveTruncation};
use crate::chebyshev::SGrid;
use crate::drive::DrivingProfile;
use crate::error::{Error, Result};
use crate::linalg::C64;

pub const MAX_ORDER: usize = 4;

const REFERENCE: &str = include_str!("../config/reference.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub band: BandConfig,
    pub drive: DrivingProfile,
    pub grids: GridConfig,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
    pub growth: GrowthConfig,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub period: f64,
    #[serde(default = "unit")]
    pub mass: f64,
    pub cutoff: usize,
    /// Coefficients `v_m`; the conjugate partners are implied.
    #[serde(default)]
    pub potential: Vec<Harmonic>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub first: usize,
    pub last: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Chebyshev nodes in `s`.
    pub n_s: usize,
    pub s_max: f64,
    pub k_points: usize,
    pub contour_nodes: usize,
    /// Intervals of the closed k-grid used for the gap certificate.
    pub gap_k_intervals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub n_max: usize,
    pub epsilons: Vec<f64>,
    pub a_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    FixedS,
    FixedT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_max: usize,
    pub epsilons: Vec<f64>,
    pub a_values: Vec<f64>,
    pub mode: SweepMode,
    /// Physical time for `fixed_t`.
    pub t: f64,
    /// Slow time for `fixed_s`.
    pub s: f64,
    /// Chebyshev nodes on `[0, s_end]` of each sweep point.
    pub n_s: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub enabled: bool,
    pub a_values: Vec<f64>,
    pub s_max: f64,
    pub k_points: usize,
    /// Grid for the expansion-norm study.
    pub n_s: usize,
    /// Panels and nodes per panel for the resolvent study.
    pub panels: usize,
    pub panel_nodes: usize,
    pub z_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Step-halving tolerance of the certified propagation.
    pub propagation: f64,
    /// Recurrence identity residuals.
    pub identity: f64,
    /// Agreement of the two sides of the projector defect identity.
    pub defect_match: f64,
    /// Allowed excess of `γ` over the Duhamel bound.
    pub gamma_slack: f64,
    /// Relative agreement of the two resolvent-derivative routes.
    pub route_agreement: f64,
    /// Fraction of sweep points that must succeed.
    pub min_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            workers: 1,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn check_epsilons(list: &[f64], what: &str) -> Result<()> {
    check(!list.is_empty(), || format!("{what}.epsilons is empty"))?;
    for &e in list {
        check(e > 0.0 && e < 1.0, || format!("{what}.epsilons: {e} is outside (0, 1)"))?;
    }
    Ok(())
}

fn check_a(list: &[f64], what: &str) -> Result<()> {
    check(!list.is_empty(), || format!("{what}.a_values is empty"))?;
    for &a in list {
        check(a.is_finite() && a >= 0.0, || format!("{what}.a_values: {a} must be finite and nonnegative"))?;
    }
    Ok(())
}

impl RunConfig {
    /// The bundled driven Mathieu configuration.
    pub fn reference() -> Self {
        Self::parse(REFERENCE).expect("bundled reference config is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization. The output section is left
    /// out so that the directory and worker count do not change the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let text = c.to_toml().expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        check(m.period > 0.0 && m.period.is_finite(), || "model.period must be positive".into())?;
        check(m.mass > 0.0 && m.mass.is_finite(), || "model.mass must be positive".into())?;
        check(m.cutoff > 0, || "model.cutoff must be positive".into())?;
        check(self.band.first <= self.band.last, || "band.first exceeds band.last".into())?;
        check(self.band.last < 2 * m.cutoff, || "band window exceeds the truncation".into())?;
        self.drive.validate()?;
        let g = &self.grids;
        check(g.s_max > 0.0 && g.s_max.is_finite(), || "grids.s_max must be positive".into())?;
        check(g.n_s >= crate::chebyshev::MIN_NODES, || {
            format!("grids.n_s must be at least {}", crate::chebyshev::MIN_NODES)
        })?;
        check(g.k_points > 0, || "grids.k_points must be positive".into())?;
        check(g.contour_nodes >= 8, || "grids.contour_nodes must be at least 8".into())?;
        check(g.gap_k_intervals >= 2, || "grids.gap_k_intervals must be at least 2".into())?;
        let v = &self.verify;
        check(v.n_max >= 1 && v.n_max <= MAX_ORDER, || format!("verify.n_max must lie in 1..={MAX_ORDER}"))?;
        check_epsilons(&v.epsilons, "verify")?;
        check_a(&v.a_values, "verify")?;
        let s = &self.sweep;
        check(s.n_max <= MAX_ORDER, || format!("sweep.n_max must not exceed {MAX_ORDER}"))?;
        check_epsilons(&s.epsilons, "sweep")?;
        check_a(&s.a_values, "sweep")?;
        check(s.t > 0.0 && s.t.is_finite(), || "sweep.t must be positive".into())?;
        check(s.s > 0.0 && s.s.is_finite(), || "sweep.s must be positive".into())?;
        check(s.n_s >= crate::chebyshev::MIN_NODES, || {
            format!("sweep.n_s must be at least {}", crate::chebyshev::MIN_NODES)
        })?;
        let w = &self.growth;
        check_a(&w.a_values, "growth")?;
        check(w.s_max > 0.0 && w.s_max.is_finite(), || "growth.s_max must be positive".into())?;
        check(w.k_points > 0 && w.panels > 0 && w.z_nodes > 0, || {
            "growth.k_points, growth.panels and growth.z_nodes must be positive".into()
        })?;
        check(w.n_s >= crate::chebyshev::MIN_NODES && w.panel_nodes >= crate::chebyshev::MIN_NODES, || {
            format!("growth grids need at least {} nodes", crate::chebyshev::MIN_NODES)
        })?;
        let t = &self.tolerances;
        for (name, value) in [
            ("propagation", t.propagation),
            ("identity", t.identity),
            ("defect_match", t.defect_match),
            ("gamma_slack", t.gamma_slack),
            ("route_agreement", t.route_agreement),
            ("min_success", t.min_success),
        ] {
            check(value > 0.0 && value.is_finite(), || format!("tolerances.{name} must be positive"))?;
        }
        check(t.min_success <= 1.0, || "tolerances.min_success must not exceed 1".into())?;
        check(self.output.workers > 0, || "output.workers must be positive".into())?;
        Ok(())
    }

    /// Doubles every grid: Chebyshev grids go to `2(N−1)+1` nodes.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        let cheb = |n: usize| 2 * (n - 1) + 1;
        c.grids.n_s = cheb(c.grids.n_s);
        c.grids.k_points *= 2;
        c.grids.contour_nodes *= 2;
        c.grids.gap_k_intervals *= 2;
        c.sweep.n_s = cheb(c.sweep.n_s);
        c.growth.n_s = cheb(c.growth.n_s);
        c.growth.panel_nodes = cheb(c.growth.panel_nodes);
        c.growth.k_points *= 2;
        c
    }

    pub fn potential(&self) -> Result<PeriodicPotential> {
        PeriodicPotential::new(
            self.model.period,
            self.model.potential.iter().map(|h| (h.m, C64::new(h.re, h.im))),
        )
    }

    pub fn truncation(&self) -> Result<PlaneWaveTruncation> {
        PlaneWaveTruncation::new(self.model.cutoff, self.model.mass)
    }

    /// The band model with its gap certificate; fails with `NoGap`.
    pub fn band_model(&self) -> Result<BandModel> {
        BandModel::new(
            &self.potential()?,
            &self.truncation()?,
            self.band.first,
            self.band.last,
            self.grids.gap_k_intervals,
        )
    }

    pub fn k_grid(&self) -> Result<KGrid> {
        KGrid::symmetric(self.model.period, self.grids.k_points)
    }

    pub fn verify_grid(&self) -> Result<SGrid> {
        SGrid::new(self.grids.s_max, self.grids.n_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips() {
        let cfg = RunConfig::reference();
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = RunConfig::reference();
        let mut c = base.clone();
        c.sweep.epsilons.push(1.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.verify.n_max = 5;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.tolerances.identity = 0.0;
        assert!(c.validate().is_err());
        let text = base.to_toml().unwrap().replace("mode = \"fixed_t\"", "mode = \"both\"");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn refinement_doubles_grids() {
        let c = RunConfig::reference();
        let r = c.refined();
        assert_eq!(r.grids.n_s, 2 * c.grids.n_s - 1);
        assert_eq!(r.grids.k_points, 2 * c.grids.k_points);
        assert_ne!(r.hash(), c.hash());
    }
}
