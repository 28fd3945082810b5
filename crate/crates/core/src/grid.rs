//! Uniform rectangular grids, nodal fields and discrete error norms.
//!
//! Fields are stored row-major with the x-index varying fastest, so node
//! `(i, j)` lives at `j * n_x + i`.

use std::fmt;

use crate::error::{Error, Result};

/// Minimum node count per direction: the five-point stencils need it.
pub const MIN_NODES: usize = 5;

const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Dirichlet => "dirichlet",
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Domain {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub const fn unit_square() -> Self {
        Domain::new(0.0, 1.0, 0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::InvalidGrid(format!(
                "domain bounds must be finite and ordered, got [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }
}

/// Uniform tensor-product mesh.
///
/// Dirichlet grids include both endpoints in each direction. Periodic grids
/// drop the right/top endpoint, which is identified with the left/bottom one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    domain: Domain,
    n_x: usize,
    n_y: usize,
    bc: BoundaryKind,
    dx: f64,
    dy: f64,
}

impl Grid {
    pub fn new(domain: Domain, n_x: usize, n_y: usize, bc: BoundaryKind) -> Result<Self> {
        domain.validate()?;
        if n_x < MIN_NODES || n_y < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per direction, got {n_x} x {n_y}"
            )));
        }
        let cells = |n: usize| match bc {
            BoundaryKind::Periodic => n as f64,
            BoundaryKind::Dirichlet => (n - 1) as f64,
        };
        Ok(Grid {
            domain,
            n_x,
            n_y,
            bc,
            dx: (domain.x_max - domain.x_min) / cells(n_x),
            dy: (domain.y_max - domain.y_min) / cells(n_y),
        })
    }

    /// Grid whose mesh width is `h` in both directions. The domain extents
    /// must be whole multiples of `h`.
    pub fn with_spacing(domain: Domain, h: f64, bc: BoundaryKind) -> Result<Self> {
        domain.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "mesh width must be positive, got {h}"
            )));
        }
        let cells = |len: f64| -> Result<usize> {
            let c = len / h;
            let r = c.round();
            if r < 1.0 || (c - r).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "mesh width {h} does not divide domain extent {len}"
                )));
            }
            Ok(r as usize)
        };
        let cx = cells(domain.x_max - domain.x_min)?;
        let cy = cells(domain.y_max - domain.y_min)?;
        let nodes = |c: usize| match bc {
            BoundaryKind::Periodic => c,
            BoundaryKind::Dirichlet => c + 1,
        };
        Grid::new(domain, nodes(cx), nodes(cy), bc)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.domain.x_min + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.domain.y_min + j as f64 * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_x + i
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == BoundaryKind::Periodic
    }

    /// True for nodes on the Dirichlet boundary. Periodic grids have none.
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.bc == BoundaryKind::Dirichlet
            && (i == 0 || j == 0 || i + 1 == self.n_x || j + 1 == self.n_y)
    }

    /// Flat indices of all Dirichlet boundary nodes, in storage order.
    pub fn boundary_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if self.bc == BoundaryKind::Periodic {
            return out;
        }
        for j in 0..self.n_y {
            for i in 0..self.n_x {
                if self.is_boundary(i, j) {
                    out.push(self.index(i, j));
                }
            }
        }
        out
    }

    /// Geometric equality up to roundoff in the bounds.
    pub fn matches(&self, other: &Grid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= GEOM_TOL * (1.0 + a.abs().max(b.abs()));
        self.n_x == other.n_x
            && self.n_y == other.n_y
            && self.bc == other.bc
            && close(self.domain.x_min, other.domain.x_min)
            && close(self.domain.x_max, other.domain.x_max)
            && close(self.domain.y_min, other.domain.y_min)
            && close(self.domain.y_max, other.domain.y_max)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.domain;
        write!(
            f,
            "{}x{} {} grid on [{}, {}] x [{}, {}], dx={}, dy={}",
            self.n_x, self.n_y, self.bc, d.x_min, d.x_max, d.y_min, d.y_max, self.dx, self.dy
        )
    }
}

/// Nodal values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps `values`; the length must match the grid and every value must be
    /// finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "value {} at node ({}, {})",
                values[k],
                k % grid.n_x(),
                k / grid.n_x()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First non-finite node, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k % self.grid.n_x(), k / self.grid.n_x()))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            None => Ok(()),
            Some((i, j)) => Err(Error::NonFinite(format!(
                "solution value {} at node ({i}, {j})",
                self.get(i, j)
            ))),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) -> Result<()> {
        ensure_same_grid(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }
}

/// Samples `f` at every node.
pub fn sample<F>(grid: &Grid, f: F) -> Result<ScalarField>
where
    F: Fn(f64, f64) -> f64,
{
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.n_y() {
        let y = grid.y(j);
        for i in 0..grid.n_x() {
            let x = grid.x(i);
            let value = f(x, y);
            if !value.is_finite() {
                return Err(Error::Sampling { i, j, x, y, value });
            }
            values.push(value);
        }
    }
    Ok(ScalarField::from_raw(*grid, values))
}

/// Discrete l2 (root-mean-square) and maximum norms of a difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
}

fn ensure_same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if !a.grid.matches(&b.grid) {
        return Err(Error::IncompatibleFields(format!(
            "{} vs {}",
            a.grid, b.grid
        )));
    }
    Ok(())
}

/// RMS and max norms of `a - b`.
pub fn error_norms(a: &ScalarField, b: &ScalarField) -> Result<ErrorNorms> {
    ensure_same_grid(a, b)?;
    let mut sum_sq = 0.0;
    let mut linf: f64 = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = (x - y).abs();
        sum_sq += d * d;
        linf = linf.max(d);
    }
    Ok(ErrorNorms {
        l2: (sum_sq / a.values.len() as f64).sqrt(),
        linf,
    })
}

fn nesting_ratio(
    fine_h: f64,
    coarse_h: f64,
    fine_n: usize,
    coarse_n: usize,
    bc: BoundaryKind,
) -> Option<usize> {
    let ratio = coarse_h / fine_h;
    let r = ratio.round();
    if r < 1.0 || (ratio - r).abs() > 1e-9 * r {
        return None;
    }
    let r = r as usize;
    let ok = match bc {
        BoundaryKind::Periodic => coarse_n * r == fine_n,
        BoundaryKind::Dirichlet => (coarse_n - 1) * r == fine_n - 1,
    };
    ok.then_some(r)
}

/// Injects a fine-grid field onto a nested coarse grid.
pub fn restrict(fine: &ScalarField, coarse: &Grid) -> Result<ScalarField> {
    let fg = fine.grid();
    let mismatch =
        |why: &str| Error::IncompatibleGrids(format!("{why}: fine {fg}, coarse {coarse}"));
    if fg.bc() != coarse.bc() {
        return Err(mismatch("boundary kinds differ"));
    }
    let same_domain = Grid::new(coarse.domain(), fg.n_x(), fg.n_y(), fg.bc())
        .map(|g| g.matches(fg))
        .unwrap_or(false);
    if !same_domain {
        return Err(mismatch("domains differ"));
    }
    let rx = nesting_ratio(fg.dx(), coarse.dx(), fg.n_x(), coarse.n_x(), fg.bc())
        .ok_or_else(|| mismatch("x mesh ratio is not a whole number"))?;
    let ry = nesting_ratio(fg.dy(), coarse.dy(), fg.n_y(), coarse.n_y(), fg.bc())
        .ok_or_else(|| mismatch("y mesh ratio is not a whole number"))?;
    let mut values = Vec::with_capacity(coarse.len());
    for j in 0..coarse.n_y() {
        for i in 0..coarse.n_x() {
            values.push(fine.get(i * rx, j * ry));
        }
    }
    Ok(ScalarField::from_raw(*coarse, values))
}
