//! The three CLI operations as pure functions: each returns the files to
//! write, summary lines and an exit status, and never touches the disk.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::audit::{run_verify, VerifyReport};
use crate::bloch::KGrid;
use crate::config::{RunConfig, SweepMode};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::transitions::{
    expansion_norm_growth, resolvent_derivative_growth, scaling_sweep, ExpansionGrowth, PanelGrid, ResolventGrowth,
    SweepPlan, TransitionReport,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest expansion order covered by the growth study.
pub const GROWTH_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Usage = 1,
    NoGap = 2,
    Invariant = 3,
    Degraded = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Status for an error that aborted a command.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::NoGap { .. } => ExitStatus::NoGap,
            Error::Config(_) | Error::Io(_) | Error::InvalidGrid(_) | Error::InvalidWindow(_) => ExitStatus::Usage,
            Error::InvalidPotential(_) | Error::Truncation { .. } | Error::InvalidContour(_) => ExitStatus::Usage,
            _ => ExitStatus::Invariant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    pub summary: Vec<String>,
    /// Failed checks, each naming the parameter point.
    pub problems: Vec<String>,
    pub status: ExitStatus,
}

impl CommandOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for f in &self.files {
            std::fs::write(dir.join(&f.name), &f.contents)?;
        }
        Ok(())
    }
}

struct Table {
    text: String,
}

impl Table {
    fn new(schema: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        let mut text = format!("# schema=superband/{schema}/v{SCHEMA_VERSION} config={}\n", cfg.hash());
        text.push_str(&columns.join(","));
        text.push('\n');
        Table { text }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    fn finish(self, name: &str) -> OutputFile {
        OutputFile {
            name: name.into(),
            contents: self.text,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

/// Band energies over the k-grid and the gap certificate of the window.
pub fn cmd_bands(cfg: &RunConfig) -> Result<CommandOutput> {
    let model = cfg.band_model()?;
    let q = &model.quad;
    let lo = model.first.saturating_sub(1);
    let hi = (model.last + 1).min(q.dim() - 1);
    let ks = cfg.k_grid()?;
    let mut bands = Table::new("bands", cfg, &["k", "band", "energy", "in_window"]);
    for &k in ks.points() {
        let e = q.eigenvalues(k);
        for b in lo..=hi {
            let inside = (model.first..=model.last).contains(&b);
            bands.row(&[num(k), b.to_string(), num(e[b]), inside.to_string()]);
        }
    }
    let c = &model.certificate;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut gap = Table::new("gap", cfg, &["first", "last", "band_lo", "band_hi", "rest_below", "rest_above", "gap"]);
    gap.row(&[
        model.first.to_string(),
        model.last.to_string(),
        num(c.band_lo),
        num(c.band_hi),
        opt(c.rest_below),
        opt(c.rest_above),
        num(c.gap),
    ]);
    Ok(CommandOutput {
        files: vec![bands.finish("bands.csv"), gap.finish("gap.csv")],
        summary: vec![format!(
            "bands {}..={}: [{:.10}, {:.10}], gap d = {:.10}",
            model.first, model.last, c.band_lo, c.band_hi, c.gap
        )],
        problems: Vec::new(),
        status: ExitStatus::Ok,
    })
}

/// Recurrence identities, projector exactness and the defect identity over
/// the verify grid, plus the growth study in `a` when enabled.
pub fn cmd_verify(cfg: &RunConfig, exec: Execution) -> Result<CommandOutput> {
    let report = run_verify(cfg, exec)?;
    let mut files = verify_tables(cfg, &report);
    let mut summary = Vec::new();
    for j in 1..=cfg.verify.n_max {
        let (e1, e2) = report.identity_sup(j);
        summary.push(format!("identities j={j}: {e1:.3e} {e2:.3e}"));
    }
    for f in &report.fits {
        match &f.fit {
            Ok(fit) => summary.push(format!("defect n={} a={}: slope {:.3}", f.n, f.a, fit.slope)),
            Err(e) => summary.push(format!("defect n={} a={}: no fit ({e})", f.n, f.a)),
        }
    }
    if cfg.growth.enabled {
        let (resolvent, expansion) = growth_study(cfg)?;
        files.extend(growth_tables(cfg, &resolvent, &expansion));
        for (n, fit) in resolvent.fits.iter().enumerate() {
            summary.push(format!(
                "resolvent order {}: degree {} residual {:.4}, route gap {:.3e} (relative {:.3e})",
                n + 1,
                fit.degree,
                fit.relative_residual,
                resolvent.max_route_gap(n + 1),
                resolvent.relative_route_gap(n + 1)
            ));
        }
    }
    let problems = report.violations(cfg);
    let status = if problems.is_empty() {
        ExitStatus::Ok
    } else {
        ExitStatus::Invariant
    };
    Ok(CommandOutput {
        files,
        summary,
        problems,
        status,
    })
}

fn verify_tables(cfg: &RunConfig, report: &VerifyReport) -> Vec<OutputFile> {
    let mut defects = Table::new(
        "verify",
        cfg,
        &[
            "n",
            "epsilon",
            "a",
            "k",
            "idempotency",
            "hermiticity",
            "rank",
            "method_gap",
            "tn_idempotency",
            "tn_flow",
            "defect_lhs",
            "defect_rhs",
            "mismatch",
            "error",
        ],
    );
    for r in &report.defects {
        let mut fields = vec![r.n.to_string(), num(r.epsilon), num(r.a), num(r.k)];
        match &r.result {
            Ok(v) => {
                fields.extend([
                    num(v.idempotency),
                    num(v.hermiticity),
                    v.rank.to_string(),
                    num(v.method_gap),
                    num(v.tn_idempotency),
                    num(v.tn_flow),
                    num(v.lhs),
                    num(v.rhs),
                    num(v.mismatch),
                    String::new(),
                ]);
            }
            Err(e) => {
                fields.extend(std::iter::repeat_n(String::new(), 9));
                fields.push(quote(e));
            }
        }
        defects.row(&fields);
    }
    for (a, k, e) in &report.fiber_errors {
        let mut fields = vec![String::new(), String::new(), num(*a), num(*k)];
        fields.extend(std::iter::repeat_n(String::new(), 9));
        fields.push(quote(e));
        defects.row(&fields);
    }
    let mut identities = Table::new("identities", cfg, &["j", "a", "k", "e1", "e2"]);
    for r in &report.identities {
        identities.row(&[r.j.to_string(), num(r.a), num(r.k), num(r.e1), num(r.e2)]);
    }
    let mut fits = Table::new("verify_fits", cfg, &["n", "a", "slope", "intercept", "residual", "error"]);
    for f in &report.fits {
        match &f.fit {
            Ok(fit) => fits.row(&[
                f.n.to_string(),
                num(f.a),
                num(fit.slope),
                num(fit.intercept),
                num(fit.residual),
                String::new(),
            ]),
            Err(e) => fits.row(&[
                f.n.to_string(),
                num(f.a),
                String::new(),
                String::new(),
                String::new(),
                quote(e),
            ]),
        }
    }
    vec![
        defects.finish("verify.csv"),
        identities.finish("identities.csv"),
        fits.finish("verify_fits.csv"),
    ]
}

/// Resolvent-derivative and expansion-term growth in `a` on the growth grids.
pub fn growth_study(cfg: &RunConfig) -> Result<(ResolventGrowth, ExpansionGrowth)> {
    let g = &cfg.growth;
    let model = cfg.band_model()?;
    let drive = Arc::new(cfg.drive.clone());
    let ks = KGrid::symmetric(cfg.model.period, g.k_points)?;
    let contour = model.contour(cfg.grids.contour_nodes)?;
    let panels = PanelGrid::new(g.s_max, g.panels, g.panel_nodes)?;
    let resolvent =
        resolvent_derivative_growth(&model, drive.clone(), ks.points(), &g.a_values, &panels, &contour, g.z_nodes)?;
    let grid = crate::chebyshev::SGrid::new(g.s_max, g.n_s)?;
    let expansion = expansion_norm_growth(&model, drive, ks.points(), &g.a_values, &grid, &contour, GROWTH_ORDER)?;
    Ok((resolvent, expansion))
}

fn growth_tables(cfg: &RunConfig, r: &ResolventGrowth, e: &ExpansionGrowth) -> Vec<OutputFile> {
    let mut lemma2 = Table::new("resolvent_growth", cfg, &["n", "a", "sup_norm", "route_gap"]);
    for n in 0..r.sup.len() {
        for (ia, &a) in r.a_values.iter().enumerate() {
            lemma2.row(&[(n + 1).to_string(), num(a), num(r.sup[n][ia]), num(r.route_gap[n][ia])]);
        }
    }
    let mut lemma3 = Table::new("expansion_growth", cfg, &["j", "a", "term_sup", "derivative_sup"]);
    for j in 0..e.terms.len() {
        for (ia, &a) in e.a_values.iter().enumerate() {
            lemma3.row(&[(j + 1).to_string(), num(a), num(e.terms[j][ia]), num(e.derivatives[j][ia])]);
        }
    }
    let mut fits = Table::new("growth_fits", cfg, &["quantity", "order", "degree", "relative_residual", "coefficients"]);
    let coeffs = |c: &[f64]| c.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
    for (n, f) in r.fits.iter().enumerate() {
        fits.row(&[
            "resolvent_derivative".into(),
            (n + 1).to_string(),
            f.degree.to_string(),
            num(f.relative_residual),
            coeffs(&f.coeffs),
        ]);
    }
    for (label, list) in [("expansion_term", &e.term_fits), ("expansion_derivative", &e.derivative_fits)] {
        for (j, f) in list.iter().enumerate() {
            fits.row(&[
                label.into(),
                (j + 1).to_string(),
                f.degree.to_string(),
                num(f.relative_residual),
                coeffs(&f.coeffs),
            ]);
        }
    }
    vec![
        lemma2.finish("resolvent_growth.csv"),
        lemma3.finish("expansion_growth.csv"),
        fits.finish("growth_fits.csv"),
    ]
}

/// The transition sweep over `(ε, a, k)`.
pub fn cmd_sweep(cfg: &RunConfig, exec: Execution) -> Result<CommandOutput> {
    let model = cfg.band_model()?;
    let plan = SweepPlan::from_config(cfg)?;
    let report = scaling_sweep(&model, Arc::new(cfg.drive.clone()), &plan, exec)?;
    Ok(sweep_output(cfg, &report))
}

/// Tables, summary and status of a finished sweep.
pub fn sweep_output(cfg: &RunConfig, report: &TransitionReport) -> CommandOutput {
    let slack = cfg.tolerances.gamma_slack;
    let mut sweep = Table::new(
        "sweep",
        cfg,
        &[
            "n",
            "epsilon",
            "a",
            "omega",
            "t_phys",
            "s",
            "k",
            "gamma",
            "lemma1_bound",
            "staying_prob_lb",
            "error",
        ],
    );
    let mut problems = Vec::new();
    for o in &report.outcomes {
        let p = o.point;
        match &o.result {
            Ok((rows, _)) => {
                for r in rows {
                    sweep.row(&[
                        r.n.to_string(),
                        num(p.epsilon),
                        num(p.a),
                        num(r.omega()),
                        num(r.t_phys()),
                        num(r.s),
                        num(p.k),
                        num(r.gamma),
                        num(r.bound),
                        num(r.staying_probability_bound()),
                        String::new(),
                    ]);
                    if !(r.gamma <= r.bound + slack) || !(0.0..=1.0).contains(&r.gamma) {
                        problems.push(format!(
                            "n={} epsilon={} a={} k={} s={}: gamma {:.6e} exceeds bound {:.6e}",
                            r.n, p.epsilon, p.a, p.k, r.s, r.gamma, r.bound
                        ));
                    }
                }
            }
            Err(e) => {
                let mut fields = vec![String::new(), num(p.epsilon), num(p.a), num(p.a * p.epsilon)];
                fields.extend([String::new(), String::new(), num(p.k)]);
                fields.extend(std::iter::repeat_n(String::new(), 3));
                fields.push(quote(e));
                sweep.row(&fields);
            }
        }
    }
    let mut fits = Table::new("fits", cfg, &["n", "a", "slope", "intercept", "residual"]);
    let mut summary = Vec::new();
    for f in &report.epsilon_fits {
        match &f.fit {
            Ok(fit) => {
                fits.row(&[f.n.to_string(), num(f.a), num(fit.slope), num(fit.intercept), num(fit.residual)]);
                summary.push(format!("gamma n={} a={}: slope {:.3} in epsilon", f.n, f.a, fit.slope));
            }
            Err(e) => {
                fits.row(&[f.n.to_string(), num(f.a), num(f64::NAN), num(f64::NAN), num(f64::NAN)]);
                summary.push(format!("gamma n={} a={}: no fit ({e})", f.n, f.a));
            }
        }
    }
    let mut growth = Table::new("a_growth", cfg, &["n", "epsilon", "degree", "relative_residual", "coefficients"]);
    for f in &report.a_growth {
        match &f.fit {
            Ok(fit) => {
                let mut coeffs = String::new();
                for (i, c) in fit.coeffs.iter().enumerate() {
                    if i > 0 {
                        coeffs.push(' ');
                    }
                    let _ = write!(coeffs, "{}", num(*c));
                }
                growth.row(&[f.n.to_string(), num(f.epsilon), fit.degree.to_string(), num(fit.relative_residual), coeffs]);
            }
            Err(_) => growth.row(&[f.n.to_string(), num(f.epsilon), f.n.to_string(), num(f64::NAN), String::new()]),
        }
    }
    let mut sups = Table::new("sweep_sup", cfg, &["n", "epsilon", "a", "s", "gamma_sup", "bound_sup", "fibers"]);
    for p in &report.sups {
        sups.row(&[
            p.n.to_string(),
            num(p.epsilon),
            num(p.a),
            num(p.s_end),
            num(p.gamma),
            num(p.bound),
            p.fibers.to_string(),
        ]);
    }
    let success = report.success_fraction();
    summary.push(format!(
        "{} of {} points succeeded; mode {}; worst unitarity defect {:.3e}",
        report.outcomes.len() - report.failed(),
        report.outcomes.len(),
        match report.plan_mode {
            SweepMode::FixedS => "fixed_s",
            SweepMode::FixedT => "fixed_t",
        },
        report.max_unitarity_defect()
    ));
    let status = if !problems.is_empty() {
        ExitStatus::Invariant
    } else if success < cfg.tolerances.min_success {
        problems.push(format!(
            "only {:.1}% of sweep points succeeded, {:.1}% required",
            100.0 * success,
            100.0 * cfg.tolerances.min_success
        ));
        ExitStatus::Degraded
    } else {
        ExitStatus::Ok
    };
    CommandOutput {
        files: vec![
            sweep.finish("sweep.csv"),
            fits.finish("fits.csv"),
            growth.finish("a_growth.csv"),
            sups.finish("sweep_sup.csv"),
        ],
        summary,
        problems,
        status,
    }
}
