//! Spatial discretizations of the split operators.
//!
//! The right-hand side is split as `F = F0 + F1 + F2` with
//! `F0 = (d12 + d21) u_xy`, `F1 = c1 u_x + d11 u_xx` and
//! `F2 = c2 u_y + d22 u_yy`. A [`SchemeContext`] holds the explicit stencils
//! for all three parts and the factorized line systems for the implicit
//! `F1`/`F2` stages.
//!
//! Every implicit stage solves `Y = y_in + theta*dt * (F_axis(Y) - F_axis(u_ref))`.
//! For CDS and HO5 the discrete operator is a plain banded matrix `F_h`, so the
//! stage system is `(I - theta*dt F_h) Y = y_in - theta*dt F_h u_ref`. The
//! compact scheme writes `F_axis(u) = g` as `A u = B g` with
//!
//! ```text
//! A = (d + h^2 c^2 / (12 d)) delta^2 + c delta_0
//! B = I + (h^2 / 12) ((c / d) delta_0 + delta^2)
//! ```
//!
//! which turns the stage into `(B - theta*dt A) Y = B y_in - theta*dt A u_ref`,
//! still tridiagonal.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid, ScalarField};
use crate::linsolve::{factorize, BandKind, BandedLineMatrix, LineFactorization};
use crate::problems::Coefficients;
use crate::stencils::{
    d1_central2_stencil, d2_central2_stencil, dxy_central2_stencil, dxy_five_stencil, eval_range,
    extend_ghosts, Axis, Stencil, D1_FIVE, D2_FIVE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Cds,
    Ho5,
    Hoc,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Cds, SchemeKind::Ho5, SchemeKind::Hoc];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Cds => "CDS",
            SchemeKind::Ho5 => "HO5",
            SchemeKind::Hoc => "HOC",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cds" => Ok(SchemeKind::Cds),
            "ho5" => Ok(SchemeKind::Ho5),
            "hoc" => Ok(SchemeKind::Hoc),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}', expected one of: cds, ho5, hoc"
            ))),
        }
    }
}

/// Constant diffusion matrix `[[d11, d12], [d21, d22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTensor {
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
}

impl DiffusionTensor {
    pub const fn new(d11: f64, d12: f64, d21: f64, d22: f64) -> Self {
        DiffusionTensor { d11, d12, d21, d22 }
    }

    /// Coefficient of `u_xy` in `div(D grad u)`.
    pub fn mixed(&self) -> f64 {
        self.d12 + self.d21
    }

    /// Positive diagonal and a non-negative definite symmetric part.
    pub fn validate(&self) -> Result<()> {
        let all = [self.d11, self.d12, self.d21, self.d22];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficients(
                "diffusion entries must be finite".into(),
            ));
        }
        if self.d11 <= 0.0 || self.d22 <= 0.0 {
            return Err(Error::InvalidCoefficients(format!(
                "d11 and d22 must be positive, got d11={}, d22={}",
                self.d11, self.d22
            )));
        }
        let half = 0.5 * self.mixed();
        let det = self.d11 * self.d22 - half * half;
        if det < -1e-12 * self.d11 * self.d22 {
            return Err(Error::InvalidCoefficients(format!(
                "symmetric part of the diffusion matrix is indefinite (determinant {det:e})"
            )));
        }
        Ok(())
    }
}

/// How the compact scheme evaluates `F1`, `F2` in the explicit stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExplicitPolicy {
    /// The fourth-order five-point formulas, as for HO5.
    #[default]
    FivePoint,
    /// `B^{-1} A u` along each line (periodic grids only).
    CompactInverse,
}

impl FromStr for ExplicitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "five-point" => Ok(ExplicitPolicy::FivePoint),
            "compact-inverse" => Ok(ExplicitPolicy::CompactInverse),
            _ => Err(Error::Config(format!(
                "unknown explicit policy '{s}', expected five-point or compact-inverse"
            ))),
        }
    }
}

/// One-dimensional weights of the implicit operator along an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LineOperator {
    /// Weights of `A` (HOC) or `F_h` (CDS/HO5) at offsets `-w..=w`.
    pub a: Vec<f64>,
    /// Weights of `B` (HOC) or the identity at offsets `-w..=w`.
    pub b: Vec<f64>,
}

fn cds_weights(c: f64, d: f64, h: f64) -> Vec<f64> {
    let (adv, dif) = (0.5 * c / h, d / (h * h));
    vec![dif - adv, -2.0 * dif, dif + adv]
}

fn five_point_weights(c: f64, d: f64, h: f64) -> Vec<f64> {
    (0..5)
        .map(|k| c * D1_FIVE[k] / (12.0 * h) + d * D2_FIVE[k] / (12.0 * h * h))
        .collect()
}

fn hoc_weights(c: f64, d: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let a = cds_weights(c, d + h * h * c * c / (12.0 * d), h);
    let r = c * h / (2.0 * d);
    let b = vec![(1.0 - r) / 12.0, 10.0 / 12.0, (1.0 + r) / 12.0];
    (a, b)
}

impl LineOperator {
    fn new(kind: SchemeKind, c: f64, d: f64, h: f64) -> Self {
        match kind {
            SchemeKind::Cds => LineOperator {
                a: cds_weights(c, d, h),
                b: vec![0.0, 1.0, 0.0],
            },
            SchemeKind::Ho5 => LineOperator {
                a: five_point_weights(c, d, h),
                b: vec![0.0, 0.0, 1.0, 0.0, 0.0],
            },
            SchemeKind::Hoc => {
                let (a, b) = hoc_weights(c, d, h);
                LineOperator { a, b }
            }
        }
    }

    /// Weights of `B - theta_dt * A`.
    pub fn stage_weights(&self, theta_dt: f64) -> Vec<f64> {
        self.b
            .iter()
            .zip(&self.a)
            .map(|(b, a)| b - theta_dt * a)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct StageSystem {
    op: LineOperator,
    matrix: BandedLineMatrix,
    factors: LineFactorization,
    rhs_input: Stencil,
    rhs_ref: Stencil,
}

impl StageSystem {
    fn build(grid: &Grid, axis: Axis, op: LineOperator, theta_dt: f64) -> Result<Self> {
        let n = match axis {
            Axis::X => grid.n_x(),
            Axis::Y => grid.n_y(),
        };
        let penta = op.a.len() == 5;
        let kind = match (grid.bc(), penta) {
            (BoundaryKind::Periodic, false) => BandKind::CyclicTri,
            (BoundaryKind::Periodic, true) => BandKind::CyclicPenta,
            (BoundaryKind::Dirichlet, false) => BandKind::Tri,
            (BoundaryKind::Dirichlet, true) => BandKind::Penta,
        };
        let mut matrix = BandedLineMatrix::toeplitz(kind, n, &op.stage_weights(theta_dt))?;
        if grid.bc() == BoundaryKind::Dirichlet {
            matrix.set_identity_row(0);
            matrix.set_identity_row(n - 1);
        }
        let factors = factorize(&matrix)?;
        let mut rhs_input = Stencil::new();
        rhs_input.add_line(axis, &op.b, 1.0);
        let mut rhs_ref = Stencil::new();
        rhs_ref.add_line(axis, &op.a, -theta_dt);
        Ok(StageSystem {
            op,
            matrix,
            factors,
            rhs_input,
            rhs_ref,
        })
    }
}

/// Assembled operators of one scheme on one grid for one `theta * dt`.
#[derive(Debug, Clone)]
pub struct SchemeContext {
    kind: SchemeKind,
    grid: Grid,
    coefficients: Coefficients,
    theta_dt: f64,
    policy: ExplicitPolicy,
    f0: Stencil,
    f1: Stencil,
    f2: Stencil,
    f_full: Stencil,
    x_stage: StageSystem,
    y_stage: StageSystem,
    /// Factorized `B_x`, `B_y` for [`ExplicitPolicy::CompactInverse`].
    b_inverse: Option<(LineFactorization, Stencil, LineFactorization, Stencil)>,
}

/// Assembles and factorizes the stage systems of `kind` on `grid`.
pub fn build_scheme_context(
    kind: SchemeKind,
    grid: &Grid,
    coefficients: &Coefficients,
    theta_dt: f64,
) -> Result<SchemeContext> {
    build_scheme_context_with(
        kind,
        grid,
        coefficients,
        theta_dt,
        ExplicitPolicy::FivePoint,
    )
}

/// Rejects scheme, boundary and policy combinations that have no implementation.
pub fn check_supported(kind: SchemeKind, bc: BoundaryKind, policy: ExplicitPolicy) -> Result<()> {
    if kind == SchemeKind::Ho5 && bc == BoundaryKind::Dirichlet {
        return Err(Error::UnsupportedCombination(
            "HO5 is only available with periodic boundaries; its implicit five-point \
             stages have no closure at Dirichlet edges (use HOC or CDS)"
                .into(),
        ));
    }
    if kind == SchemeKind::Hoc
        && policy == ExplicitPolicy::CompactInverse
        && bc == BoundaryKind::Dirichlet
    {
        return Err(Error::UnsupportedCombination(
            "the compact-inverse explicit policy needs periodic boundaries".into(),
        ));
    }
    Ok(())
}

pub fn build_scheme_context_with(
    kind: SchemeKind,
    grid: &Grid,
    coefficients: &Coefficients,
    theta_dt: f64,
    policy: ExplicitPolicy,
) -> Result<SchemeContext> {
    let k = coefficients;
    k.diffusion.validate()?;
    if !(k.c1.is_finite() && k.c2.is_finite()) {
        return Err(Error::InvalidCoefficients(
            "convection must be finite".into(),
        ));
    }
    if !(theta_dt.is_finite() && theta_dt >= 0.0) {
        return Err(Error::Config(format!(
            "theta*dt must be non-negative, got {theta_dt}"
        )));
    }
    check_supported(kind, grid.bc(), policy)?;
    let policy = if kind == SchemeKind::Hoc {
        policy
    } else {
        ExplicitPolicy::FivePoint
    };
    let d = &k.diffusion;

    let mut f0 = Stencil::new();
    let mut f1 = Stencil::new();
    let mut f2 = Stencil::new();
    match kind {
        SchemeKind::Cds => {
            f0.add_scaled(&dxy_central2_stencil(grid), d.mixed());
            f1.add_scaled(&d1_central2_stencil(grid, Axis::X), k.c1);
            f1.add_scaled(&d2_central2_stencil(grid, Axis::X), d.d11);
            f2.add_scaled(&d1_central2_stencil(grid, Axis::Y), k.c2);
            f2.add_scaled(&d2_central2_stencil(grid, Axis::Y), d.d22);
        }
        SchemeKind::Ho5 | SchemeKind::Hoc => {
            f0.add_scaled(&dxy_five_stencil(grid), d.mixed());
            f1.add_line(Axis::X, &five_point_weights(k.c1, d.d11, grid.dx()), 1.0);
            f2.add_line(Axis::Y, &five_point_weights(k.c2, d.d22, grid.dy()), 1.0);
        }
    }
    let mut f_full = f0.clone();
    f_full.add_scaled(&f1, 1.0);
    f_full.add_scaled(&f2, 1.0);

    let x_op = LineOperator::new(kind, k.c1, d.d11, grid.dx());
    let y_op = LineOperator::new(kind, k.c2, d.d22, grid.dy());

    let b_inverse = if policy == ExplicitPolicy::CompactInverse {
        let line =
            |op: &LineOperator, axis: Axis, n: usize| -> Result<(LineFactorization, Stencil)> {
                let b = BandedLineMatrix::toeplitz(BandKind::CyclicTri, n, &op.b)?;
                let mut a = Stencil::new();
                a.add_line(axis, &op.a, 1.0);
                Ok((factorize(&b)?, a))
            };
        let (bx, ax) = line(&x_op, Axis::X, grid.n_x())?;
        let (by, ay) = line(&y_op, Axis::Y, grid.n_y())?;
        Some((bx, ax, by, ay))
    } else {
        None
    };

    Ok(SchemeContext {
        kind,
        grid: *grid,
        coefficients: *k,
        theta_dt,
        policy,
        f0,
        f1,
        f2,
        f_full,
        x_stage: StageSystem::build(grid, Axis::X, x_op, theta_dt)?,
        y_stage: StageSystem::build(grid, Axis::Y, y_op, theta_dt)?,
        b_inverse,
    })
}

impl SchemeContext {
    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn theta_dt(&self) -> f64 {
        self.theta_dt
    }

    pub fn policy(&self) -> ExplicitPolicy {
        self.policy
    }

    fn stage(&self, axis: Axis) -> &StageSystem {
        match axis {
            Axis::X => &self.x_stage,
            Axis::Y => &self.y_stage,
        }
    }

    /// The implicit line operator (`A`/`F_h` and `B`/identity weights).
    pub fn line_operator(&self, axis: Axis) -> &LineOperator {
        &self.stage(axis).op
    }

    /// The stage matrix `B - theta*dt A`, with identity rows at Dirichlet ends.
    pub fn stage_matrix(&self, axis: Axis) -> &BandedLineMatrix {
        &self.stage(axis).matrix
    }

    fn check_grid(&self, u: &ScalarField) -> Result<()> {
        if !u.grid().matches(&self.grid) {
            return Err(Error::IncompatibleFields(format!(
                "field on {} but scheme built for {}",
                u.grid(),
                self.grid
            )));
        }
        Ok(())
    }

    fn apply(&self, stencil: &Stencil, u: &ScalarField) -> Result<ScalarField> {
        self.check_grid(u)?;
        Ok(stencil.apply(&extend_ghosts(u)))
    }

    fn compact_inverse(&self, axis: Axis, u: &ScalarField) -> Result<ScalarField> {
        let (bx, ax, by, ay) = self.b_inverse.as_ref().expect("compact-inverse policy");
        let (b, a) = match axis {
            Axis::X => (bx, ax),
            Axis::Y => (by, ay),
        };
        let mut g = a.apply(&extend_ghosts(u)).into_values();
        let count = match axis {
            Axis::X => self.grid.n_y(),
            Axis::Y => self.grid.n_x(),
        };
        b.solve_lines(&mut g, self.grid.n_x(), axis, 0..count);
        Ok(ScalarField::from_raw(self.grid, g))
    }

    /// Mixed-derivative part `F0(u)`.
    pub fn eval_f0(&self, u: &ScalarField) -> Result<ScalarField> {
        self.apply(&self.f0, u)
    }

    /// `F1(u)` as used by the explicit stages.
    pub fn eval_f1_explicit(&self, u: &ScalarField) -> Result<ScalarField> {
        match self.policy {
            ExplicitPolicy::FivePoint => self.apply(&self.f1, u),
            ExplicitPolicy::CompactInverse => {
                self.check_grid(u)?;
                self.compact_inverse(Axis::X, u)
            }
        }
    }

    /// `F2(u)` as used by the explicit stages.
    pub fn eval_f2_explicit(&self, u: &ScalarField) -> Result<ScalarField> {
        match self.policy {
            ExplicitPolicy::FivePoint => self.apply(&self.f2, u),
            ExplicitPolicy::CompactInverse => {
                self.check_grid(u)?;
                self.compact_inverse(Axis::Y, u)
            }
        }
    }

    /// `F(u) = F0(u) + F1(u) + F2(u)` from a single ghost extension.
    pub fn eval_f(&self, u: &ScalarField) -> Result<ScalarField> {
        match self.policy {
            ExplicitPolicy::FivePoint => self.apply(&self.f_full, u),
            ExplicitPolicy::CompactInverse => {
                let mut f = self.eval_f0(u)?;
                f.axpy(1.0, &self.compact_inverse(Axis::X, u)?)?;
                f.axpy(1.0, &self.compact_inverse(Axis::Y, u)?)?;
                Ok(f)
            }
        }
    }

    /// Solves `Y = y_in + theta*dt (F_axis(Y) - F_axis(u_ref))` line by line.
    ///
    /// On Dirichlet grids `boundary` supplies the values imposed on every
    /// boundary node of the result (its interior entries are ignored).
    pub fn implicit_stage_solve(
        &self,
        axis: Axis,
        y_in: &ScalarField,
        u_ref: &ScalarField,
        boundary: Option<&ScalarField>,
    ) -> Result<ScalarField> {
        self.check_grid(y_in)?;
        self.check_grid(u_ref)?;
        let stage = self.stage(axis);
        let g = self.grid;
        let mut rhs = vec![0.0; g.len()];
        stage.rhs_input.apply_into(&extend_ghosts(y_in), &mut rhs);
        if self.theta_dt != 0.0 {
            stage.rhs_ref.apply_into(&extend_ghosts(u_ref), &mut rhs);
        }
        let lines = match g.bc() {
            BoundaryKind::Periodic => match axis {
                Axis::X => 0..g.n_y(),
                Axis::Y => 0..g.n_x(),
            },
            BoundaryKind::Dirichlet => {
                let bnd = boundary.ok_or_else(|| {
                    Error::BoundaryClosure("Dirichlet stage solve needs boundary values".into())
                })?;
                self.check_grid(bnd)?;
                let (i0, i1, j0, j1) = eval_range(&g);
                let bv = bnd.values();
                for j in 0..g.n_y() {
                    for i in 0..g.n_x() {
                        if !(i0..i1).contains(&i) || !(j0..j1).contains(&j) {
                            let k = g.index(i, j);
                            rhs[k] = bv[k];
                        }
                    }
                }
                match axis {
                    Axis::X => 1..g.n_y() - 1,
                    Axis::Y => 1..g.n_x() - 1,
                }
            }
        };
        stage.factors.solve_lines(&mut rhs, g.n_x(), axis, lines);
        Ok(ScalarField::from_raw(g, rhs))
    }
}
