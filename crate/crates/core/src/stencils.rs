//! Finite-difference operators on uniform grids.
//!
//! Second-order central differences, the fourth-order five-point formulas
//! (first, second and mixed derivatives) and the ghost-point closure used
//! near Dirichlet edges. Every operator is evaluated on the nodes it can
//! reach: all nodes of a periodic grid (indices wrap) or the interior nodes of
//! a Dirichlet grid. Dirichlet boundary nodes are left at zero because their
//! values are prescribed, never computed.

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

/// How the wide stencils reach past a Dirichlet edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ghosts {
    /// No closure available; wide stencils on Dirichlet grids fail.
    None,
    /// One ring of ghosts by quintic extrapolation (see [`extend_ghosts`]).
    Extrapolate,
}

/// Extrapolation weights for the first ghost, applied to the five nodes
/// nearest the edge, edge node first.
pub const GHOST_WEIGHTS: [f64; 5] = [5.0, -10.0, 10.0, -5.0, 1.0];

/// Five-point first derivative weights at offsets -2..=2, times `12h`.
pub const D1_FIVE: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
/// Five-point second derivative weights at offsets -2..=2, times `12h^2`.
pub const D2_FIVE: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

const PAD: usize = 2;

/// A field padded with two layers on every side.
///
/// Periodic grids fill the padding by wraparound. Dirichlet grids fill the
/// first layer with extrapolated ghosts and leave the second as NaN, which no
/// interior stencil reaches.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    grid: Grid,
    stride: usize,
    data: Vec<f64>,
}

impl ExtendedField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    fn offset(&self, i: isize, j: isize) -> usize {
        (j + PAD as isize) as usize * self.stride + (i + PAD as isize) as usize
    }

    /// Value at node `(i, j)`, where `-1` and `n` address ghost layers.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, j)]
    }

    /// Copy of the unpadded nodal values.
    pub fn interior(&self) -> ScalarField {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.len());
        for j in 0..g.n_y() as isize {
            let start = self.offset(0, j);
            out.extend_from_slice(&self.data[start..start + g.n_x()]);
        }
        ScalarField::from_raw(g, out)
    }
}

/// Builds the padded field used by the wide stencils.
///
/// On Dirichlet grids each edge gets one ghost layer from
/// `u[-1] = 5u[0] - 10u[1] + 10u[2] - 5u[3] + u[4]`, taken along the edge
/// normal. The bottom and top ghost rows are filled first; the left and right
/// ghost columns are then extrapolated over every row including those ghost
/// rows, which produces the corners. Periodic grids simply wrap.
pub fn extend_ghosts(u: &ScalarField) -> ExtendedField {
    let g = *u.grid();
    let (nx, ny) = (g.n_x(), g.n_y());
    let stride = nx + 2 * PAD;
    let mut ext = ExtendedField {
        grid: g,
        stride,
        data: vec![f64::NAN; stride * (ny + 2 * PAD)],
    };
    for j in 0..ny {
        let dst = ext.offset(0, j as isize);
        ext.data[dst..dst + nx].copy_from_slice(&u.values()[j * nx..(j + 1) * nx]);
    }
    match g.bc() {
        BoundaryKind::Periodic => {
            let (nxi, nyi) = (nx as isize, ny as isize);
            for j in -(PAD as isize)..nyi + PAD as isize {
                for i in -(PAD as isize)..nxi + PAD as isize {
                    if (0..nxi).contains(&i) && (0..nyi).contains(&j) {
                        continue;
                    }
                    let v = u.get(i.rem_euclid(nxi) as usize, j.rem_euclid(nyi) as usize);
                    let k = ext.offset(i, j);
                    ext.data[k] = v;
                }
            }
        }
        BoundaryKind::Dirichlet => {
            let (nxi, nyi) = (nx as isize, ny as isize);
            let extrap = |vals: [f64; 5]| -> f64 {
                GHOST_WEIGHTS.iter().zip(vals).map(|(w, v)| w * v).sum()
            };
            for i in 0..nxi {
                let lo = extrap([0, 1, 2, 3, 4].map(|j| ext.get(i, j)));
                let hi = extrap([1, 2, 3, 4, 5].map(|d| ext.get(i, nyi - d)));
                let (a, b) = (ext.offset(i, -1), ext.offset(i, nyi));
                ext.data[a] = lo;
                ext.data[b] = hi;
            }
            for j in -1..=nyi {
                let lo = extrap([0, 1, 2, 3, 4].map(|i| ext.get(i, j)));
                let hi = extrap([1, 2, 3, 4, 5].map(|d| ext.get(nxi - d, j)));
                let (a, b) = (ext.offset(-1, j), ext.offset(nxi, j));
                ext.data[a] = lo;
                ext.data[b] = hi;
            }
        }
    }
    ext
}

/// A constant-coefficient 2D stencil: `(di, dj, weight)` entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stencil {
    entries: Vec<(isize, isize, f64)>,
}

impl Stencil {
    pub fn new() -> Self {
        Stencil::default()
    }

    /// Adds `weight` at offset `(di, dj)`, merging with an existing entry.
    pub fn add(&mut self, di: isize, dj: isize, weight: f64) {
        if weight == 0.0 {
            return;
        }
        match self.entries.iter_mut().find(|e| e.0 == di && e.1 == dj) {
            Some(e) => e.2 += weight,
            None => self.entries.push((di, dj, weight)),
        }
    }

    /// Adds a 1D stencil with weights at offsets `-w..=w` along `axis`.
    pub fn add_line(&mut self, axis: Axis, weights: &[f64], scale: f64) {
        let w = (weights.len() / 2) as isize;
        for (k, &c) in weights.iter().enumerate() {
            let off = k as isize - w;
            match axis {
                Axis::X => self.add(off, 0, scale * c),
                Axis::Y => self.add(0, off, scale * c),
            }
        }
    }

    /// Adds `other * scale`.
    pub fn add_scaled(&mut self, other: &Stencil, scale: f64) {
        for &(di, dj, w) in &other.entries {
            self.add(di, dj, scale * w);
        }
    }

    pub fn entries(&self) -> &[(isize, isize, f64)] {
        &self.entries
    }

    /// Largest offset magnitude in either direction.
    pub fn reach(&self) -> usize {
        self.entries
            .iter()
            .map(|&(di, dj, _)| di.unsigned_abs().max(dj.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// Applies the stencil on the evaluation nodes of the grid (all nodes when
    /// periodic, interior nodes when Dirichlet), adding into `out`.
    pub fn apply_into(&self, ext: &ExtendedField, out: &mut [f64]) {
        let g = ext.grid;
        debug_assert_eq!(out.len(), g.len());
        let (i0, i1, j0, j1) = eval_range(&g);
        let nx = g.n_x();
        let len = i1 - i0;
        // Derivative stencils (weights summing to zero) are applied as
        // sum w (u_k - u_centre) so constants map to exactly zero.
        let sum: f64 = self.entries.iter().map(|e| e.2).sum();
        let mag: f64 = self.entries.iter().map(|e| e.2.abs()).sum();
        let differenced = sum.abs() <= 1e-12 * mag;
        for &(di, dj, w) in &self.entries {
            if differenced && di == 0 && dj == 0 {
                continue;
            }
            for j in j0..j1 {
                let src = ext.offset(i0 as isize + di, j as isize + dj);
                let row = &ext.data[src..src + len];
                let dst = &mut out[j * nx + i0..j * nx + i1];
                if differenced {
                    let c = ext.offset(i0 as isize, j as isize);
                    let centre = &ext.data[c..c + len];
                    for ((o, v), u) in dst.iter_mut().zip(row).zip(centre) {
                        *o += w * (v - u);
                    }
                } else {
                    for (o, v) in dst.iter_mut().zip(row) {
                        *o += w * v;
                    }
                }
            }
        }
    }

    pub fn apply(&self, ext: &ExtendedField) -> ScalarField {
        let mut out = vec![0.0; ext.grid.len()];
        self.apply_into(ext, &mut out);
        ScalarField::from_raw(ext.grid, out)
    }
}

/// Index ranges `(i_start, i_end, j_start, j_end)` of the nodes operators
/// are evaluated on.
pub fn eval_range(g: &Grid) -> (usize, usize, usize, usize) {
    match g.bc() {
        BoundaryKind::Periodic => (0, g.n_x(), 0, g.n_y()),
        BoundaryKind::Dirichlet => (1, g.n_x() - 1, 1, g.n_y() - 1),
    }
}

fn spacing(g: &Grid, axis: Axis) -> f64 {
    match axis {
        Axis::X => g.dx(),
        Axis::Y => g.dy(),
    }
}

/// `delta_0`: `(u[i+1] - u[i-1]) / 2h`.
pub fn d1_central2_stencil(g: &Grid, axis: Axis) -> Stencil {
    let mut s = Stencil::new();
    s.add_line(axis, &[-1.0, 0.0, 1.0], 0.5 / spacing(g, axis));
    s
}

/// `delta^2`: `(u[i+1] - 2u[i] + u[i-1]) / h^2`.
pub fn d2_central2_stencil(g: &Grid, axis: Axis) -> Stencil {
    let h = spacing(g, axis);
    let mut s = Stencil::new();
    s.add_line(axis, &[1.0, -2.0, 1.0], 1.0 / (h * h));
    s
}

pub fn d1_five_stencil(g: &Grid, axis: Axis) -> Stencil {
    let mut s = Stencil::new();
    s.add_line(axis, &D1_FIVE, 1.0 / (12.0 * spacing(g, axis)));
    s
}

pub fn d2_five_stencil(g: &Grid, axis: Axis) -> Stencil {
    let h = spacing(g, axis);
    let mut s = Stencil::new();
    s.add_line(axis, &D2_FIVE, 1.0 / (12.0 * h * h));
    s
}

/// `delta_x0 delta_y0`, the compact second-order mixed derivative.
pub fn dxy_central2_stencil(g: &Grid) -> Stencil {
    let w = 1.0 / (4.0 * g.dx() * g.dy());
    let mut s = Stencil::new();
    s.add(1, 1, w);
    s.add(-1, -1, w);
    s.add(1, -1, -w);
    s.add(-1, 1, -w);
    s
}

/// The fourth-order five-point mixed derivative, weights 64/8/1 over
/// `144 dx dy`.
pub fn dxy_five_stencil(g: &Grid) -> Stencil {
    let w = 1.0 / (144.0 * g.dx() * g.dy());
    let mut s = Stencil::new();
    for (di, dj, c) in [
        (1, 1, 64.0),
        (-1, 1, -64.0),
        (-1, -1, 64.0),
        (1, -1, -64.0),
        (2, 1, -8.0),
        (1, 2, -8.0),
        (-1, 2, 8.0),
        (-2, 1, 8.0),
        (-2, -1, -8.0),
        (-1, -2, -8.0),
        (1, -2, 8.0),
        (2, -1, 8.0),
        (2, 2, 1.0),
        (-2, 2, -1.0),
        (-2, -2, 1.0),
        (2, -2, -1.0),
    ] {
        s.add(di, dj, w * c);
    }
    s
}

fn with_closure(u: &ScalarField, ghosts: Ghosts, what: &str) -> Result<ExtendedField> {
    if u.grid().bc() == BoundaryKind::Dirichlet && ghosts == Ghosts::None {
        return Err(Error::BoundaryClosure(format!(
            "{what} on a Dirichlet grid reaches one node past the edge; ghost extrapolation is required"
        )));
    }
    Ok(extend_ghosts(u))
}

pub fn d1_central2(u: &ScalarField, axis: Axis) -> ScalarField {
    d1_central2_stencil(u.grid(), axis).apply(&extend_ghosts(u))
}

pub fn d2_central2(u: &ScalarField, axis: Axis) -> ScalarField {
    d2_central2_stencil(u.grid(), axis).apply(&extend_ghosts(u))
}

pub fn dxy_central2(u: &ScalarField) -> ScalarField {
    dxy_central2_stencil(u.grid()).apply(&extend_ghosts(u))
}

pub fn d1_five(u: &ScalarField, axis: Axis, ghosts: Ghosts) -> Result<ScalarField> {
    let ext = with_closure(u, ghosts, "five-point first derivative")?;
    Ok(d1_five_stencil(u.grid(), axis).apply(&ext))
}

pub fn d2_five(u: &ScalarField, axis: Axis, ghosts: Ghosts) -> Result<ScalarField> {
    let ext = with_closure(u, ghosts, "five-point second derivative")?;
    Ok(d2_five_stencil(u.grid(), axis).apply(&ext))
}

pub fn dxy_five(u: &ScalarField, ghosts: Ghosts) -> Result<ScalarField> {
    let ext = with_closure(u, ghosts, "five-point mixed derivative")?;
    Ok(dxy_five_stencil(u.grid()).apply(&ext))
}
