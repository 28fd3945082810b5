//! The six-stage Hundsdorfer-Verwer ADI step and the time loop around it.
//!
//! One step from `U` at `t` to `t + dt`:
//!
//! ```text
//! Y0  = U  + dt (F(U) + S(t))
//! Y1  = Y0 + theta dt (F1(Y1) - F1(U))
//! Y2  = Y1 + theta dt (F2(Y2) - F2(U))
//! Yt0 = Y0 + sigma dt (F(Y2) + S(t + dt) - F(U) - S(t))
//! Yt1 = Yt0 + theta dt (F1(Yt1) - F1(Y2))
//! Yt2 = Yt1 + theta dt (F2(Yt2) - F2(Y2))
//! ```
//!
//! and the new value is `Yt2`. The mixed term only enters through the two
//! explicit full evaluations. On Dirichlet grids every stage carries the
//! boundary data at `t + dt`.

use crate::error::{Error, Result};
use crate::grid::{sample, BoundaryKind, Grid, ScalarField};
use crate::problems::ProblemSpec;
use crate::schemes::{build_scheme_context_with, ExplicitPolicy, SchemeContext, SchemeKind};
use crate::stencils::Axis;

/// `theta = 1/2 + sqrt(3)/6`, the strongly damped alternative.
pub const THETA_DAMPED: f64 = 0.788_675_134_594_812_9;

const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingConfig {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    pub t0: f64,
    pub tf: f64,
}

impl SplittingConfig {
    /// `theta = sigma = 1/2` from `t0 = 0`.
    pub fn new(dt: f64, tf: f64) -> Self {
        SplittingConfig {
            theta: 0.5,
            sigma: 0.5,
            dt,
            t0: 0.0,
            tf,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Number of steps covering `[t0, tf]`; the step must divide the interval.
    pub fn steps(&self) -> Result<usize> {
        let all = [self.theta, self.sigma, self.dt, self.t0, self.tf];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("splitting parameters must be finite".into()));
        }
        if self.theta <= 0.0 {
            return Err(Error::Config(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.tf < self.t0 {
            return Err(Error::Config(format!(
                "final time {} precedes start time {}",
                self.tf, self.t0
            )));
        }
        let ratio = (self.tf - self.t0) / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > STEP_COUNT_TOL * n.max(1.0) {
            return Err(Error::Config(format!(
                "dt = {} does not divide [{}, {}] into whole steps ({ratio} steps)",
                self.dt, self.t0, self.tf
            )));
        }
        Ok(n as usize)
    }
}

/// Intermediate stage values of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub y0: ScalarField,
    pub y1: ScalarField,
    pub y2: ScalarField,
    pub yt0: ScalarField,
    pub yt1: ScalarField,
    pub yt2: ScalarField,
}

fn sample_source(problem: &ProblemSpec, grid: &Grid, t: f64) -> Result<Option<ScalarField>> {
    problem
        .source
        .as_ref()
        .map(|s| sample(grid, |x, y| s(x, y, t)))
        .transpose()
}

/// Field whose boundary nodes carry the Dirichlet data at `t`. Interior
/// entries are zero and unused.
fn boundary_field(problem: &ProblemSpec, grid: &Grid, t: f64) -> Result<Option<ScalarField>> {
    if grid.bc() == BoundaryKind::Periodic {
        return Ok(None);
    }
    let g = problem.boundary.as_ref().ok_or_else(|| {
        Error::Config(format!("problem {} has no boundary function", problem.name))
    })?;
    let mut f = ScalarField::zeros(*grid);
    for j in 0..grid.n_y() {
        for i in 0..grid.n_x() {
            if grid.is_boundary(i, j) {
                let v = g(grid.x(i), grid.y(j), t);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "boundary value at node ({i}, {j}), t = {t}"
                    )));
                }
                f.set(i, j, v);
            }
        }
    }
    Ok(Some(f))
}

fn impose(field: &mut ScalarField, boundary: Option<&ScalarField>) {
    if let Some(b) = boundary {
        let g = *field.grid();
        for j in 0..g.n_y() {
            for i in 0..g.n_x() {
                if g.is_boundary(i, j) {
                    field.set(i, j, b.get(i, j));
                }
            }
        }
    }
}

/// Inputs a step needs beyond the current field, so the time loop can reuse
/// the source sampled at the end of the previous step.
struct StepData<'a> {
    s_prev: Option<&'a ScalarField>,
    s_next: Option<&'a ScalarField>,
    boundary: Option<&'a ScalarField>,
}

fn step_impl(
    ctx: &SchemeContext,
    u: &ScalarField,
    dt: f64,
    sigma: f64,
    data: &StepData<'_>,
    trace: bool,
) -> Result<(ScalarField, Option<StageTrace>)> {
    let fu = ctx.eval_f(u)?;

    let mut y0 = u.clone();
    y0.axpy(dt, &fu)?;
    if let Some(s) = data.s_prev {
        y0.axpy(dt, s)?;
    }
    impose(&mut y0, data.boundary);

    let y1 = ctx.implicit_stage_solve(Axis::X, &y0, u, data.boundary)?;
    let y2 = ctx.implicit_stage_solve(Axis::Y, &y1, u, data.boundary)?;

    let fy2 = ctx.eval_f(&y2)?;
    let mut yt0 = y0.clone();
    yt0.axpy(sigma * dt, &fy2)?;
    yt0.axpy(-sigma * dt, &fu)?;
    if let (Some(sn), Some(sp)) = (data.s_next, data.s_prev) {
        yt0.axpy(sigma * dt, sn)?;
        yt0.axpy(-sigma * dt, sp)?;
    }
    impose(&mut yt0, data.boundary);

    let yt1 = ctx.implicit_stage_solve(Axis::X, &yt0, &y2, data.boundary)?;
    let yt2 = ctx.implicit_stage_solve(Axis::Y, &yt1, &y2, data.boundary)?;

    if trace {
        let t = StageTrace {
            y0,
            y1,
            y2,
            yt0,
            yt1,
            yt2: yt2.clone(),
        };
        Ok((yt2, Some(t)))
    } else {
        Ok((yt2, None))
    }
}

fn check_context(
    ctx: &SchemeContext,
    u: &ScalarField,
    dt: f64,
    cfg: &SplittingConfig,
) -> Result<()> {
    if !u.grid().matches(ctx.grid()) {
        return Err(Error::IncompatibleFields(format!(
            "field on {} but scheme built for {}",
            u.grid(),
            ctx.grid()
        )));
    }
    let want = cfg.theta * dt;
    if (ctx.theta_dt() - want).abs() > 1e-12 * want.abs().max(1e-300) {
        return Err(Error::Config(format!(
            "scheme context was built for theta*dt = {}, step needs {want}",
            ctx.theta_dt()
        )));
    }
    Ok(())
}

/// Advances `u` from `t_prev` to `t_prev + dt`.
pub fn hv_step(
    ctx: &SchemeContext,
    problem: &ProblemSpec,
    u: &ScalarField,
    t_prev: f64,
    dt: f64,
    cfg: &SplittingConfig,
) -> Result<ScalarField> {
    hv_step_traced(ctx, problem, u, t_prev, dt, cfg).map(|(u, _)| u)
}

/// [`hv_step`] that also returns the six stage values.
pub fn hv_step_traced(
    ctx: &SchemeContext,
    problem: &ProblemSpec,
    u: &ScalarField,
    t_prev: f64,
    dt: f64,
    cfg: &SplittingConfig,
) -> Result<(ScalarField, StageTrace)> {
    check_context(ctx, u, dt, cfg)?;
    let grid = ctx.grid();
    let t_next = t_prev + dt;
    let s_prev = sample_source(problem, grid, t_prev)?;
    let s_next = sample_source(problem, grid, t_next)?;
    let boundary = boundary_field(problem, grid, t_next)?;
    let data = StepData {
        s_prev: s_prev.as_ref(),
        s_next: s_next.as_ref(),
        boundary: boundary.as_ref(),
    };
    let (out, trace) = step_impl(ctx, u, dt, cfg.sigma, &data, true)?;
    Ok((out, trace.expect("trace requested")))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrateOptions {
    pub policy: ExplicitPolicy,
    /// Keep the stage values of the final step.
    pub trace_last_step: bool,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub solution: ScalarField,
    pub steps: usize,
    pub dt: f64,
    pub trace: Option<StageTrace>,
}

/// Integrates `problem` with `kind` on `grid` from `cfg.t0` to `cfg.tf`.
pub fn integrate(
    problem: &ProblemSpec,
    kind: SchemeKind,
    cfg: &SplittingConfig,
    grid: &Grid,
) -> Result<ScalarField> {
    integrate_with(problem, kind, cfg, grid, IntegrateOptions::default()).map(|r| r.solution)
}

pub fn integrate_with(
    problem: &ProblemSpec,
    kind: SchemeKind,
    cfg: &SplittingConfig,
    grid: &Grid,
    options: IntegrateOptions,
) -> Result<Integration> {
    problem.validate()?;
    if grid.bc() != problem.bc {
        return Err(Error::IncompatibleGrids(format!(
            "problem {} has {} boundaries but the grid is {}",
            problem.name,
            problem.bc,
            grid.bc()
        )));
    }
    let steps = cfg.steps()?;
    let initial = problem.initial.clone();
    let mut u = sample(grid, |x, y| initial(x, y))?;
    if steps == 0 {
        return Ok(Integration {
            solution: u,
            steps,
            dt: cfg.dt,
            trace: None,
        });
    }
    // the step that divides the interval exactly
    let dt = (cfg.tf - cfg.t0) / steps as f64;
    let ctx = build_scheme_context_with(
        kind,
        grid,
        &problem.coefficients,
        cfg.theta * dt,
        options.policy,
    )?;
    log::debug!(
        "integrating {} with {kind} on {grid}: {steps} steps of {dt}",
        problem.name
    );

    let time = |k: usize| cfg.t0 + k as f64 * dt;
    let mut s_prev = sample_source(problem, grid, time(0))?;
    let mut trace = None;
    for k in 0..steps {
        let s_next = sample_source(problem, grid, time(k + 1))?;
        let boundary = boundary_field(problem, grid, time(k + 1))?;
        let data = StepData {
            s_prev: s_prev.as_ref(),
            s_next: s_next.as_ref(),
            boundary: boundary.as_ref(),
        };
        let want_trace = options.trace_last_step && k + 1 == steps;
        let (next, t) = step_impl(&ctx, &u, dt, cfg.sigma, &data, want_trace)?;
        if let Some((i, j)) = next.first_non_finite() {
            return Err(Error::NonFinite(format!(
                "solution blew up at node ({i}, {j}) in step {} of {steps}",
                k + 1
            )));
        }
        u = next;
        trace = t;
        s_prev = s_next;
    }
    Ok(Integration {
        solution: u,
        steps,
        dt,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{error_norms, Domain};
    use crate::problems::{builtin_dirichlet_manufactured, builtin_periodic};
    use crate::schemes::build_scheme_context;

    #[test]
    fn step_count_validation() {
        assert_eq!(SplittingConfig::new(0.1 / 30.0, 0.1).steps().unwrap(), 30);
        assert_eq!(
            SplittingConfig::new(0.4 * 0.1 * 0.1, 0.1).steps().unwrap(),
            25
        );
        assert!(matches!(
            SplittingConfig::new(0.03, 0.1).steps(),
            Err(Error::Config(_))
        ));
        assert!(SplittingConfig::new(-0.01, 0.1).steps().is_err());
        assert!(SplittingConfig::new(0.01, 0.1)
            .with_theta(0.0)
            .steps()
            .is_err());
        let mut c = SplittingConfig::new(0.01, 0.0);
        assert_eq!(c.steps().unwrap(), 0);
        c.tf = -1.0;
        assert!(c.steps().is_err());
    }

    #[test]
    fn zero_steps_returns_initial_condition() {
        let p = builtin_periodic();
        let g = p.grid_with_spacing(0.1).unwrap();
        let u = integrate(&p, SchemeKind::Hoc, &SplittingConfig::new(0.01, 0.0), &g).unwrap();
        assert_eq!(u, sample(&g, |x, y| (p.initial)(x, y)).unwrap());
    }

    #[test]
    fn constant_state_is_stationary() {
        let mut p = builtin_periodic();
        p.initial = std::sync::Arc::new(|_, _| 2.0);
        let g = p.grid_with_spacing(0.1).unwrap();
        for kind in SchemeKind::ALL {
            let cfg = SplittingConfig::new(0.01, 0.05);
            let u = integrate(&p, kind, &cfg, &g).unwrap();
            assert!(
                u.values().iter().all(|&v| (v - 2.0).abs() < 1e-14),
                "{kind}"
            );
        }
    }

    #[test]
    fn context_mismatch_is_rejected() {
        let p = builtin_periodic();
        let g = p.grid_with_spacing(0.1).unwrap();
        let cfg = SplittingConfig::new(0.01, 0.1);
        let ctx = build_scheme_context(SchemeKind::Cds, &g, &p.coefficients, 0.5 * 0.02).unwrap();
        let u = ScalarField::zeros(g);
        assert!(hv_step(&ctx, &p, &u, 0.0, 0.01, &cfg).is_err());
        let other = Grid::new(Domain::unit_square(), 12, 12, BoundaryKind::Periodic).unwrap();
        let ctx = build_scheme_context(SchemeKind::Cds, &other, &p.coefficients, 0.005).unwrap();
        assert!(hv_step(&ctx, &p, &u, 0.0, 0.01, &cfg).is_err());
    }

    #[test]
    fn ho5_dirichlet_is_rejected() {
        let p = builtin_dirichlet_manufactured();
        let g = p.grid_with_spacing(0.1).unwrap();
        let err =
            integrate(&p, SchemeKind::Ho5, &SplittingConfig::new(0.004, 0.1), &g).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCombination(_)));
    }

    #[test]
    fn trace_ends_at_the_returned_solution() {
        let p = builtin_dirichlet_manufactured();
        let g = p.grid_with_spacing(0.1).unwrap();
        let cfg = SplittingConfig::new(0.004, 0.008);
        let opts = IntegrateOptions {
            trace_last_step: true,
            ..Default::default()
        };
        let run = integrate_with(&p, SchemeKind::Hoc, &cfg, &g, opts).unwrap();
        let trace = run.trace.unwrap();
        assert_eq!(trace.yt2, run.solution);
        // every stage carries the boundary data at the new time
        for f in [&trace.y0, &trace.y1, &trace.y2, &trace.yt0, &trace.yt1] {
            for k in g.boundary_indices() {
                assert!(f.values()[k].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dirichlet_hoc_tracks_the_exact_solution() {
        let p = builtin_dirichlet_manufactured();
        let exact = p.exact.clone().unwrap();
        let mut errs = vec![];
        for h in [0.1, 0.05] {
            let g = p.grid_with_spacing(h).unwrap();
            let cfg = SplittingConfig::new(0.4 * h * h, 0.1);
            let u = integrate(&p, SchemeKind::Hoc, &cfg, &g).unwrap();
            let e = sample(&g, |x, y| exact(x, y, 0.1)).unwrap();
            errs.push(error_norms(&u, &e).unwrap().linf);
        }
        assert!(errs[0] / errs[1] > 10.0, "{errs:?}");
    }
}
