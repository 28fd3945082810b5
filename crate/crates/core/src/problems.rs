//! Problem definitions and the two built-in test cases.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Domain, Grid};
use crate::schemes::DiffusionTensor;

pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub const PERIODIC_HW: &str = "periodic-hw";
pub const DIRICHLET_MANUFACTURED: &str = "dirichlet-manufactured";

/// Constant convection and diffusion coefficients of
/// `u_t = div(D grad u) + c . grad u (+ S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub c1: f64,
    pub c2: f64,
    pub diffusion: DiffusionTensor,
}

/// A constant-coefficient convection-diffusion problem on a rectangle.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub coefficients: Coefficients,
    pub bc: BoundaryKind,
    pub initial: SpaceFn,
    /// Required iff `bc` is Dirichlet.
    pub boundary: Option<SpaceTimeFn>,
    pub source: Option<SpaceTimeFn>,
    pub exact: Option<SpaceTimeFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("coefficients", &self.coefficients)
            .field("bc", &self.bc)
            .field("boundary", &self.boundary.is_some())
            .field("source", &self.source.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Checks the structural invariants: Dirichlet problems carry boundary
    /// data, and boundary data agrees with a known exact solution.
    pub fn validate(&self) -> Result<()> {
        if self.bc == BoundaryKind::Dirichlet && self.boundary.is_none() {
            return Err(Error::Config(format!(
                "problem {} has Dirichlet boundaries but no boundary function",
                self.name
            )));
        }
        if let (Some(exact), Some(boundary)) = (&self.exact, &self.boundary) {
            let d = self.domain;
            for k in 0..=16 {
                let s = k as f64 / 16.0;
                let x = d.x_min + s * (d.x_max - d.x_min);
                let y = d.y_min + s * (d.y_max - d.y_min);
                for t in [0.0, 0.05, 0.1] {
                    for (px, py) in [(x, d.y_min), (x, d.y_max), (d.x_min, y), (d.x_max, y)] {
                        let (a, b) = (exact(px, py, t), boundary(px, py, t));
                        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                            return Err(Error::Config(format!(
                                "boundary data of {} disagrees with the exact solution at ({px}, {py}, {t})",
                                self.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn grid_with_spacing(&self, h: f64) -> Result<Grid> {
        Grid::with_spacing(self.domain, h, self.bc)
    }

    pub fn source_at(&self, x: f64, y: f64, t: f64) -> f64 {
        self.source.as_ref().map_or(0.0, |s| s(x, y, t))
    }
}

fn paper_coefficients() -> Coefficients {
    Coefficients {
        c1: -2.0,
        c2: -3.0,
        diffusion: DiffusionTensor::new(0.025, 0.05, 0.05, 0.1),
    }
}

/// Periodic problem on the unit square with `c = -(2, 3)`,
/// `D = 0.025 [[1, 2], [2, 4]]` and initial data
/// `exp(-4 (sin^2(pi x) + cos^2(pi y)))`.
pub fn builtin_periodic() -> ProblemSpec {
    ProblemSpec {
        name: PERIODIC_HW.to_string(),
        domain: Domain::unit_square(),
        coefficients: paper_coefficients(),
        bc: BoundaryKind::Periodic,
        initial: Arc::new(|x, y| {
            let (sx, cy) = ((PI * x).sin(), (PI * y).cos());
            (-4.0 * (sx * sx + cy * cy)).exp()
        }),
        boundary: None,
        source: None,
        exact: None,
    }
}

/// Manufactured solution `u = -sin(pi x) sin(pi y) / (t + 1)`.
pub fn manufactured_exact(x: f64, y: f64, t: f64) -> f64 {
    -(PI * x).sin() * (PI * y).sin() / (t + 1.0)
}

/// Source making [`manufactured_exact`] solve the problem with coefficients
/// `k`: `S = u_t - div(D grad u) - c . grad u`.
pub fn manufactured_source(k: &Coefficients, x: f64, y: f64, t: f64) -> f64 {
    let d = &k.diffusion;
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    let tp = t + 1.0;
    let u_t = sx * sy / (tp * tp);
    let u_x = -PI * cx * sy / tp;
    let u_y = -PI * sx * cy / tp;
    let u_xx = PI * PI * sx * sy / tp;
    let u_yy = u_xx;
    let u_xy = -PI * PI * cx * cy / tp;
    u_t - (d.d11 * u_xx + d.mixed() * u_xy + d.d22 * u_yy) - k.c1 * u_x - k.c2 * u_y
}

/// Dirichlet problem with the same coefficients as [`builtin_periodic`],
/// a manufactured exact solution and the matching source term. Initial and
/// boundary data are taken from the exact solution.
pub fn builtin_dirichlet_manufactured() -> ProblemSpec {
    let k = paper_coefficients();
    ProblemSpec {
        name: DIRICHLET_MANUFACTURED.to_string(),
        domain: Domain::unit_square(),
        coefficients: k,
        bc: BoundaryKind::Dirichlet,
        initial: Arc::new(|x, y| manufactured_exact(x, y, 0.0)),
        boundary: Some(Arc::new(manufactured_exact)),
        source: Some(Arc::new(move |x, y, t| manufactured_source(&k, x, y, t))),
        exact: Some(Arc::new(manufactured_exact)),
    }
}

pub fn builtin_names() -> [&'static str; 2] {
    [PERIODIC_HW, DIRICHLET_MANUFACTURED]
}

pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        PERIODIC_HW => Ok(builtin_periodic()),
        DIRICHLET_MANUFACTURED => Ok(builtin_dirichlet_manufactured()),
        other => Err(Error::Config(format!(
            "unknown problem '{other}', expected one of: {}",
            builtin_names().join(", ")
        ))),
    }
}
