//! Convergence studies: time and space refinement sweeps, log-log rate fits
//! and their CSV reports.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{error_norms, restrict, sample, Grid, ScalarField};
use crate::problems::{by_name, ProblemSpec};
use crate::schemes::{check_supported, ExplicitPolicy, SchemeKind};
use crate::splitting::{integrate_with, IntegrateOptions, SplittingConfig};

/// Least-squares line through `(log resolution, log error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Convergence order.
    pub slope: f64,
    /// `C` in `error = C * resolution^slope`.
    pub constant: f64,
    /// Points that entered the fit.
    pub used: usize,
}

/// Fits `error = C * resolution^m`. Exact zeros are skipped with a warning;
/// at least two positive points must remain.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut logs = Vec::with_capacity(points.len());
    for &(r, e) in points {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Domain(format!(
                "resolution must be positive, got {r}"
            )));
        }
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::Domain(format!(
                "error must be non-negative, got {e}"
            )));
        }
        if e == 0.0 {
            log::warn!("dropping exact-zero error at resolution {r} from the rate fit");
            continue;
        }
        logs.push((r.ln(), e.ln()));
    }
    if logs.len() < 2 {
        return Err(Error::Domain(format!(
            "rate fit needs at least two positive points, got {}",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain(
            "rate fit needs at least two distinct resolutions".into(),
        ));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        constant: (my - slope * mx).exp(),
        used: logs.len(),
    })
}

/// Rates between successive points.
pub fn pairwise_rates(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}

/// What the errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// A computed reference solution (finer step or finer grid).
    #[default]
    Reference,
    /// The problem's closed-form solution at the final time.
    Exact,
}

/// Final times used by the built-in problems.
pub const DEFAULT_TF: f64 = 0.1;
/// Time-study divisors `k` in `dt = tf / k`.
pub const DEFAULT_DT_DIVISORS: [u32; 7] = [30, 40, 50, 60, 70, 80, 90];
pub const DEFAULT_DT_REF_DIVISOR: u32 = 100;
pub const DEFAULT_H_SWEEP: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const DEFAULT_H_REF: f64 = 0.00625;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStudyConfig {
    pub problem: String,
    pub schemes: Vec<SchemeKind>,
    pub theta: f64,
    pub sigma: f64,
    pub h: f64,
    pub dts: Vec<f64>,
    pub dt_ref: f64,
    pub tf: f64,
    pub error_mode: ErrorMode,
    pub policy: ExplicitPolicy,
}

impl TimeStudyConfig {
    /// `dt = tf/k` for `k` in 30..=90 by 10, reference `tf/100`, `theta = 1/2`.
    pub fn with_defaults(problem: &str, schemes: &[SchemeKind], h: f64) -> Self {
        let tf = DEFAULT_TF;
        TimeStudyConfig {
            problem: problem.to_string(),
            schemes: schemes.to_vec(),
            theta: 0.5,
            sigma: 0.5,
            h,
            dts: DEFAULT_DT_DIVISORS.iter().map(|&k| tf / k as f64).collect(),
            dt_ref: tf / DEFAULT_DT_REF_DIVISOR as f64,
            tf,
            error_mode: ErrorMode::Reference,
            policy: ExplicitPolicy::FivePoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.dts.len() < 2 {
            return Err(Error::Config(
                "time study needs at least two time steps".into(),
            ));
        }
        let problem = by_name(&self.problem)?;
        problem.grid_with_spacing(self.h)?;
        for &k in &self.schemes {
            check_supported(k, problem.bc, self.policy)?;
        }
        if self.error_mode == ErrorMode::Exact && problem.exact.is_none() {
            return Err(Error::Config(format!(
                "problem {} has no exact solution for exact-error mode",
                self.problem
            )));
        }
        let min_dt = self.dts.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.error_mode == ErrorMode::Reference
            && self.dt_ref.partial_cmp(&min_dt) != Some(Ordering::Less)
        {
            return Err(Error::Config(format!(
                "reference step {} must be smaller than every study step (min {min_dt})",
                self.dt_ref
            )));
        }
        for &dt in self.dts.iter().chain([&self.dt_ref]) {
            SplittingConfig {
                theta: self.theta,
                sigma: self.sigma,
                dt,
                t0: 0.0,
                tf: self.tf,
            }
            .steps()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceStudyConfig {
    pub problem: String,
    pub schemes: Vec<SchemeKind>,
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
    pub hs: Vec<f64>,
    pub h_ref: f64,
    pub tf: f64,
    pub error_mode: ErrorMode,
    pub policy: ExplicitPolicy,
}

impl SpaceStudyConfig {
    /// `h` in {0.1, 0.05, 0.025, 0.0125}, reference `h = 0.00625`, `theta = 1/2`.
    pub fn with_defaults(problem: &str, schemes: &[SchemeKind], mu: f64) -> Self {
        SpaceStudyConfig {
            problem: problem.to_string(),
            schemes: schemes.to_vec(),
            theta: 0.5,
            sigma: 0.5,
            mu,
            hs: DEFAULT_H_SWEEP.to_vec(),
            h_ref: DEFAULT_H_REF,
            tf: DEFAULT_TF,
            error_mode: ErrorMode::Reference,
            policy: ExplicitPolicy::FivePoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Config(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.hs.len() < 2 {
            return Err(Error::Config(
                "space study needs at least two mesh widths".into(),
            ));
        }
        let problem = by_name(&self.problem)?;
        for &k in &self.schemes {
            check_supported(k, problem.bc, self.policy)?;
        }
        let mut all = self.hs.clone();
        if self.error_mode == ErrorMode::Reference {
            all.push(self.h_ref);
        }
        for &h in &all {
            problem.grid_with_spacing(h)?;
            let dt = self.mu * h * h;
            SplittingConfig {
                theta: self.theta,
                sigma: self.sigma,
                dt,
                t0: 0.0,
                tf: self.tf,
            }
            .steps()?;
        }
        if self.error_mode == ErrorMode::Reference {
            let ref_grid = problem.grid_with_spacing(self.h_ref)?;
            for &h in &self.hs {
                let coarse = problem.grid_with_spacing(h)?;
                restrict(&ScalarField::zeros(ref_grid), &coarse)?;
                if h.partial_cmp(&self.h_ref) != Some(Ordering::Greater) {
                    return Err(Error::Config(format!(
                        "study width {h} must be coarser than the reference width {}",
                        self.h_ref
                    )));
                }
            }
        }
        if self.error_mode == ErrorMode::Exact && problem.exact.is_none() {
            return Err(Error::Config(format!(
                "problem {} has no exact solution for exact-error mode",
                self.problem
            )));
        }
        Ok(())
    }
}

/// Runs one integration; swapped out by tests to check the harness itself.
pub trait Integrator {
    fn run(
        &self,
        problem: &ProblemSpec,
        kind: SchemeKind,
        cfg: &SplittingConfig,
        grid: &Grid,
    ) -> Result<(ScalarField, usize, f64)>;
}

/// The real solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct HvIntegrator {
    pub policy: ExplicitPolicy,
}

impl Integrator for HvIntegrator {
    fn run(
        &self,
        problem: &ProblemSpec,
        kind: SchemeKind,
        cfg: &SplittingConfig,
        grid: &Grid,
    ) -> Result<(ScalarField, usize, f64)> {
        let opts = IntegrateOptions {
            policy: self.policy,
            trace_last_step: false,
        };
        let r = integrate_with(problem, kind, cfg, grid, opts)?;
        Ok((r.solution, r.steps, r.dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Dt,
    H,
}

impl Resolution {
    pub fn name(self) -> &'static str {
        match self {
            Resolution::Dt => "dt",
            Resolution::H => "h",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: SchemeKind,
    pub bc: crate::grid::BoundaryKind,
    pub theta: f64,
    pub mu: f64,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRates {
    pub scheme: SchemeKind,
    pub l2: RateFit,
    pub linf: RateFit,
    pub pairwise_l2: Vec<f64>,
    pub pairwise_linf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub parameter: Resolution,
    pub rows: Vec<ReportRow>,
    pub rates: Vec<SchemeRates>,
}

impl ConvergenceReport {
    fn resolution(&self, row: &ReportRow) -> f64 {
        match self.parameter {
            Resolution::Dt => row.dt,
            Resolution::H => row.h,
        }
    }

    pub fn rows_for(&self, scheme: SchemeKind) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn rates_for(&self, scheme: SchemeKind) -> Option<&SchemeRates> {
        self.rates.iter().find(|r| r.scheme == scheme)
    }

    /// Errors shrink strictly along the sweep in both norms.
    pub fn is_monotone(&self, scheme: SchemeKind) -> bool {
        let rows: Vec<_> = self.rows_for(scheme).collect();
        rows.windows(2)
            .all(|w| w[1].l2 < w[0].l2 && w[1].linf < w[0].linf)
    }

    fn build(parameter: Resolution, rows: Vec<ReportRow>, schemes: &[SchemeKind]) -> Result<Self> {
        let mut report = ConvergenceReport {
            parameter,
            rows,
            rates: Vec::new(),
        };
        for &s in schemes {
            let l2: Vec<(f64, f64)> = report
                .rows_for(s)
                .map(|r| (report.resolution(r), r.l2))
                .collect();
            let linf: Vec<(f64, f64)> = report
                .rows_for(s)
                .map(|r| (report.resolution(r), r.linf))
                .collect();
            let rates = SchemeRates {
                scheme: s,
                l2: fit_rate(&l2)?,
                linf: fit_rate(&linf)?,
                pairwise_l2: pairwise_rates(&l2),
                pairwise_linf: pairwise_rates(&linf),
            };
            report.rates.push(rates);
        }
        Ok(report)
    }

    /// `scheme,bc,theta,mu,h,dt,steps,l2_error,linf_error`
    pub fn report_csv(&self) -> String {
        let mut s = String::from("scheme,bc,theta,mu,h,dt,steps,l2_error,linf_error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:e},{:e}",
                r.scheme, r.bc, r.theta, r.mu, r.h, r.dt, r.steps, r.l2, r.linf
            );
        }
        s
    }

    /// `scheme,norm,parameter,rate,constant`
    pub fn rates_csv(&self) -> String {
        let mut s = String::from("scheme,norm,parameter,rate,constant\n");
        for r in &self.rates {
            for (norm, fit) in [("l2", r.l2), ("linf", r.linf)] {
                let _ = writeln!(
                    s,
                    "{},{norm},{},{},{:e}",
                    r.scheme,
                    self.parameter.name(),
                    fit.slope,
                    fit.constant
                );
            }
        }
        s
    }

    /// `log10_resolution,log10_l2,log10_linf`, one `# scheme=` block per scheme.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("log10_resolution,log10_l2,log10_linf\n");
        for r in &self.rates {
            let _ = writeln!(s, "# scheme={}", r.scheme);
            for row in self.rows_for(r.scheme) {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    self.resolution(row).log10(),
                    row.l2.log10(),
                    row.linf.log10()
                );
            }
        }
        s
    }
}

/// Nodal dump: `# key=value` metadata lines, then `x,y,u` with x varying fastest.
pub fn field_csv(u: &ScalarField, metadata: &[(&str, String)]) -> String {
    let g = u.grid();
    let mut s = String::new();
    for (k, v) in metadata {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.push_str("x,y,u\n");
    for j in 0..g.n_y() {
        for i in 0..g.n_x() {
            let _ = writeln!(s, "{},{},{}", g.x(i), g.y(j), u.get(i, j));
        }
    }
    s
}

fn exact_at(problem: &ProblemSpec, grid: &Grid, t: f64) -> Result<ScalarField> {
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| Error::Config(format!("problem {} has no exact solution", problem.name)))?;
    sample(grid, |x, y| exact(x, y, t))
}

pub fn time_convergence_study(cfg: &TimeStudyConfig) -> Result<ConvergenceReport> {
    time_convergence_study_with(cfg, &HvIntegrator { policy: cfg.policy })
}

/// For each scheme, integrates on the fixed grid with every `dt` and compares
/// against the same-grid run with `dt_ref` (or the exact solution).
pub fn time_convergence_study_with(
    cfg: &TimeStudyConfig,
    integrator: &dyn Integrator,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let problem = by_name(&cfg.problem)?;
    let grid = problem.grid_with_spacing(cfg.h)?;
    let split = |dt: f64| SplittingConfig {
        theta: cfg.theta,
        sigma: cfg.sigma,
        dt,
        t0: 0.0,
        tf: cfg.tf,
    };
    let mut dts = cfg.dts.clone();
    dts.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let target = match cfg.error_mode {
            ErrorMode::Reference => {
                integrator
                    .run(&problem, scheme, &split(cfg.dt_ref), &grid)?
                    .0
            }
            ErrorMode::Exact => exact_at(&problem, &grid, cfg.tf)?,
        };
        for &dt in &dts {
            let (u, steps, used_dt) = integrator.run(&problem, scheme, &split(dt), &grid)?;
            let n = error_norms(&u, &target)?;
            log::info!(
                "{scheme} h={} dt={used_dt}: l2={:e} linf={:e}",
                cfg.h,
                n.l2,
                n.linf
            );
            rows.push(ReportRow {
                scheme,
                bc: grid.bc(),
                theta: cfg.theta,
                mu: used_dt / (cfg.h * cfg.h),
                h: cfg.h,
                dt: used_dt,
                steps,
                l2: n.l2,
                linf: n.linf,
            });
        }
    }
    ConvergenceReport::build(Resolution::Dt, rows, &cfg.schemes)
}

pub fn space_convergence_study(cfg: &SpaceStudyConfig) -> Result<ConvergenceReport> {
    space_convergence_study_with(cfg, &HvIntegrator { policy: cfg.policy })
}

/// For each scheme, integrates with `dt = mu h^2` on every grid and compares
/// against the reference run at `h_ref` injected onto the coarse grid (or
/// against the exact solution).
pub fn space_convergence_study_with(
    cfg: &SpaceStudyConfig,
    integrator: &dyn Integrator,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let problem = by_name(&cfg.problem)?;
    let split = |h: f64| SplittingConfig {
        theta: cfg.theta,
        sigma: cfg.sigma,
        dt: cfg.mu * h * h,
        t0: 0.0,
        tf: cfg.tf,
    };
    let mut hs = cfg.hs.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let reference = match cfg.error_mode {
            ErrorMode::Reference => {
                let g = problem.grid_with_spacing(cfg.h_ref)?;
                Some(integrator.run(&problem, scheme, &split(cfg.h_ref), &g)?.0)
            }
            ErrorMode::Exact => None,
        };
        for &h in &hs {
            let grid = problem.grid_with_spacing(h)?;
            let (u, steps, dt) = integrator.run(&problem, scheme, &split(h), &grid)?;
            let target = match &reference {
                Some(r) => restrict(r, &grid)?,
                None => exact_at(&problem, &grid, cfg.tf)?,
            };
            let n = error_norms(&u, &target)?;
            log::info!(
                "{scheme} mu={} h={h}: l2={:e} linf={:e}",
                cfg.mu,
                n.l2,
                n.linf
            );
            rows.push(ReportRow {
                scheme,
                bc: grid.bc(),
                theta: cfg.theta,
                mu: cfg.mu,
                h,
                dt,
                steps,
                l2: n.l2,
                linf: n.linf,
            });
        }
    }
    ConvergenceReport::build(Resolution::H, rows, &cfg.schemes)
}
