//! Direct solvers for tri- and pentadiagonal line systems and their cyclic
//! variants.
//!
//! Factorizations are computed once and reused for every grid line and every
//! time step. The open-band systems use an unpivoted banded LU (the Thomas
//! recurrence when the half-bandwidth is one). Cyclic systems are split into
//! an open-band part plus a rank-`w` corner correction, solved with the
//! Sherman-Morrison-Woodbury identity, where `w` is the half-bandwidth.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::stencils::Axis;

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandKind {
    Tri,
    Penta,
    CyclicTri,
    CyclicPenta,
}

impl BandKind {
    pub fn half_width(self) -> usize {
        match self {
            BandKind::Tri | BandKind::CyclicTri => 1,
            BandKind::Penta | BandKind::CyclicPenta => 2,
        }
    }

    pub fn is_cyclic(self) -> bool {
        matches!(self, BandKind::CyclicTri | BandKind::CyclicPenta)
    }

    fn open(self) -> BandKind {
        match self {
            BandKind::Tri | BandKind::CyclicTri => BandKind::Tri,
            BandKind::Penta | BandKind::CyclicPenta => BandKind::Penta,
        }
    }
}

/// Square banded matrix stored by rows: entry `(i, k)` of the band array is
/// `A[i][i + k - w]`, with the column index taken modulo `n` for cyclic
/// kinds. Entries that fall outside the matrix in open kinds are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLineMatrix {
    kind: BandKind,
    n: usize,
    bands: Vec<f64>,
}

impl BandedLineMatrix {
    pub fn zeros(kind: BandKind, n: usize) -> Result<Self> {
        let w = kind.half_width();
        if n < 2 * w + 1 || n < 5 {
            return Err(Error::Shape {
                expected: 5.max(2 * w + 1),
                got: n,
            });
        }
        Ok(BandedLineMatrix {
            kind,
            n,
            bands: vec![0.0; n * (2 * w + 1)],
        })
    }

    /// Constant-diagonal matrix from weights at offsets `-w'..=w'`, `w' <= w`.
    pub fn toeplitz(kind: BandKind, n: usize, weights: &[f64]) -> Result<Self> {
        let mut m = BandedLineMatrix::zeros(kind, n)?;
        let w = kind.half_width();
        if weights.len().is_multiple_of(2) || weights.len() > 2 * w + 1 {
            return Err(Error::Shape {
                expected: 2 * w + 1,
                got: weights.len(),
            });
        }
        let wh = (weights.len() / 2) as isize;
        for i in 0..n {
            for (k, &c) in weights.iter().enumerate() {
                let col = i as isize + k as isize - wh;
                if kind.is_cyclic() || (0..n as isize).contains(&col) {
                    m.set(i, col.rem_euclid(n as isize) as usize, c)?;
                }
            }
        }
        Ok(m)
    }

    pub fn identity(kind: BandKind, n: usize) -> Result<Self> {
        BandedLineMatrix::toeplitz(kind, n, &[1.0])
    }

    pub fn kind(&self) -> BandKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Band slot for `(row, col)`, if the entry is representable.
    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let w = self.kind.half_width() as isize;
        let n = self.n as isize;
        let mut off = col as isize - row as isize;
        if self.kind.is_cyclic() {
            if off > w {
                off -= n;
            } else if off < -w {
                off += n;
            }
        }
        (-w..=w)
            .contains(&off)
            .then(|| row * (2 * w as usize + 1) + (off + w) as usize)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |s| self.bands[s])
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.n || col >= self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: row.max(col),
            });
        }
        match self.slot(row, col) {
            Some(s) => {
                self.bands[s] = value;
                Ok(())
            }
            None => Err(Error::Shape {
                expected: self.kind.half_width(),
                got: row.abs_diff(col),
            }),
        }
    }

    /// Replaces row `i` with the corresponding identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        let width = 2 * self.kind.half_width() + 1;
        let row = &mut self.bands[i * width..(i + 1) * width];
        row.fill(0.0);
        row[width / 2] = 1.0;
    }

    /// Columns touched by row `i`, with their values.
    fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = self.kind.half_width() as isize;
        let n = self.n as isize;
        let cyclic = self.kind.is_cyclic();
        let width = 2 * w as usize + 1;
        self.bands[i * width..(i + 1) * width]
            .iter()
            .enumerate()
            .filter_map(move |(k, &v)| {
                let col = i as isize + k as isize - w;
                if cyclic {
                    Some((col.rem_euclid(n) as usize, v))
                } else {
                    (0..n).contains(&col).then_some((col as usize, v))
                }
            })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| self.row_entries(i).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row_entries(i) {
                row[c] += v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Woodbury correction data for a cyclic system `A = A' + U V^T`.
#[derive(Debug, Clone)]
struct CornerCorrection {
    /// `V` restricted to its last `w` rows (its first `w` rows are identity):
    /// `v_tail[c * w + b]` is `V[n - w + c][b]`.
    v_tail: Vec<f64>,
    /// `A'^{-1} U`, stored row-major `n x w`.
    z: Vec<f64>,
    /// `(I + V^T Z)^{-1}`, row-major `w x w`.
    capacitance_inv: Vec<f64>,
}

/// Reusable factorization of a [`BandedLineMatrix`].
#[derive(Debug, Clone)]
pub struct LineFactorization {
    kind: BandKind,
    n: usize,
    w: usize,
    /// `lower[i * w + k - 1]` is `L[i][i - k]`.
    lower: Vec<f64>,
    /// `upper[i * (w + 1) + k]` is `U[i][i + k]` for `k >= 1`; slot `k = 0`
    /// holds `1 / U[i][i]`.
    upper: Vec<f64>,
    corner: Option<CornerCorrection>,
}

fn banded_lu(m: &BandedLineMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    debug_assert!(!m.kind.is_cyclic());
    let n = m.n;
    let w = m.kind.half_width();
    let width = 2 * w + 1;
    let tol = PIVOT_TOLERANCE * m.max_abs();
    let mut a = m.bands.clone();
    let mut lower = vec![0.0; n * w];
    let mut upper = vec![0.0; n * (w + 1)];
    for i in 0..n {
        let pivot = a[i * width + w];
        if pivot.abs().partial_cmp(&(tol)) != Some(Ordering::Greater) {
            return Err(Error::SingularMatrix { row: i, pivot });
        }
        let last = (i + w).min(n - 1);
        for r in i + 1..=last {
            let mult = a[r * width + (i + w - r)] / pivot;
            lower[r * w + (r - i) - 1] = mult;
            for c in i + 1..=last {
                a[r * width + (c + w - r)] -= mult * a[i * width + (c + w - i)];
            }
        }
        upper[i * (w + 1)] = 1.0 / pivot;
        for k in 1..=w.min(n - 1 - i) {
            upper[i * (w + 1) + k] = a[i * width + w + k];
        }
    }
    Ok((lower, upper))
}

fn invert_small(m: &[f64], w: usize) -> Result<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    match w {
        1 => {
            if m[0].abs().partial_cmp(&(PIVOT_TOLERANCE * scale.max(1.0)))
                != Some(Ordering::Greater)
            {
                return Err(Error::SingularMatrix {
                    row: 0,
                    pivot: m[0],
                });
            }
            Ok(vec![1.0 / m[0]])
        }
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            if det.abs().partial_cmp(&(PIVOT_TOLERANCE * scale * scale)) != Some(Ordering::Greater)
            {
                return Err(Error::SingularMatrix { row: 0, pivot: det });
            }
            Ok(vec![m[3] / det, -m[1] / det, -m[2] / det, m[0] / det])
        }
        _ => unreachable!("half-width is 1 or 2"),
    }
}

/// Factorizes `m` without pivoting.
pub fn factorize(m: &BandedLineMatrix) -> Result<LineFactorization> {
    let n = m.n;
    let w = m.kind.half_width();
    if !m.kind.is_cyclic() {
        let (lower, upper) = banded_lu(m)?;
        return Ok(LineFactorization {
            kind: m.kind,
            n,
            w,
            lower,
            upper,
            corner: None,
        });
    }

    // Split off the wrapped corners: top-right block TR (rows 0..w, columns
    // n-w..n) and bottom-left block BL (rows n-w..n, columns 0..w). With
    // U = [G; 0; BL] and V = [I; 0; (G^{-1} TR)^T] the product U V^T
    // reproduces both corners and adds G and BL G^{-1} TR on the diagonal
    // blocks, which are subtracted from the open-band part.
    let gamma: Vec<f64> = (0..w)
        .map(|k| {
            let d = m.get(k, k);
            if d != 0.0 {
                -d
            } else {
                -1.0
            }
        })
        .collect();
    let tr = |b: usize, c: usize| if c >= b { m.get(b, n - w + c) } else { 0.0 };
    let bl = |a: usize, b: usize| if b <= a { m.get(n - w + a, b) } else { 0.0 };

    let mut open = BandedLineMatrix::zeros(m.kind.open(), n)?;
    for i in 0..n {
        for k in 0..=2 * w {
            let col = i as isize + k as isize - w as isize;
            if (0..n as isize).contains(&col) {
                open.set(i, col as usize, m.get(i, col as usize))?;
            }
        }
    }
    for (k, g) in gamma.iter().enumerate() {
        open.set(k, k, m.get(k, k) - g)?;
    }
    for a in 0..w {
        for c in 0..w {
            let corr: f64 = (0..w).map(|b| bl(a, b) * tr(b, c) / gamma[b]).sum();
            let (r, col) = (n - w + a, n - w + c);
            open.set(r, col, open.get(r, col) - corr)?;
        }
    }
    let (lower, upper) = banded_lu(&open)?;
    let mut fact = LineFactorization {
        kind: m.kind,
        n,
        w,
        lower,
        upper,
        corner: None,
    };

    let mut z = vec![0.0; n * w];
    let mut col = vec![0.0; n];
    for b in 0..w {
        col.fill(0.0);
        col[b] = gamma[b];
        for a in 0..w {
            col[n - w + a] = bl(a, b);
        }
        fact.solve_open_strided(&mut col, 0, 1);
        for i in 0..n {
            z[i * w + b] = col[i];
        }
    }
    let mut v_tail = vec![0.0; w * w];
    for c in 0..w {
        for b in 0..w {
            v_tail[c * w + b] = tr(b, c) / gamma[b];
        }
    }
    // I + V^T Z
    let mut cap = vec![0.0; w * w];
    for b in 0..w {
        for e in 0..w {
            let mut s = z[b * w + e];
            for c in 0..w {
                s += v_tail[c * w + b] * z[(n - w + c) * w + e];
            }
            cap[b * w + e] = s + if b == e { 1.0 } else { 0.0 };
        }
    }
    fact.corner = Some(CornerCorrection {
        v_tail,
        z,
        capacitance_inv: invert_small(&cap, w)?,
    });
    Ok(fact)
}

impl LineFactorization {
    pub fn kind(&self) -> BandKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn solve_open_strided(&self, data: &mut [f64], start: usize, stride: usize) {
        let (n, w) = (self.n, self.w);
        let at = |i: usize| start + i * stride;
        for i in 1..n {
            let mut s = data[at(i)];
            for k in 1..=w.min(i) {
                s -= self.lower[i * w + k - 1] * data[at(i - k)];
            }
            data[at(i)] = s;
        }
        for i in (0..n).rev() {
            let mut s = data[at(i)];
            for k in 1..=w.min(n - 1 - i) {
                s -= self.upper[i * (w + 1) + k] * data[at(i + k)];
            }
            data[at(i)] = s * self.upper[i * (w + 1)];
        }
    }

    fn solve_strided(&self, data: &mut [f64], start: usize, stride: usize) {
        self.solve_open_strided(data, start, stride);
        let Some(corner) = &self.corner else {
            return;
        };
        let (n, w) = (self.n, self.w);
        let at = |i: usize| start + i * stride;
        let mut vty = [0.0; 2];
        for (b, v) in vty.iter_mut().enumerate().take(w) {
            *v = data[at(b)];
            for c in 0..w {
                *v += corner.v_tail[c * w + b] * data[at(n - w + c)];
            }
        }
        let mut s = [0.0; 2];
        for (b, sb) in s.iter_mut().enumerate().take(w) {
            *sb = (0..w)
                .map(|e| corner.capacitance_inv[b * w + e] * vty[e])
                .sum();
        }
        for i in 0..n {
            let corr: f64 = (0..w).map(|b| corner.z[i * w + b] * s[b]).sum();
            data[at(i)] -= corr;
        }
    }

    /// Solves in place.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: x.len(),
            });
        }
        self.solve_strided(x, 0, 1);
        Ok(())
    }

    /// Solves lines `lines` of `values` (grid storage with `n_x` columns)
    /// along `axis`, in place.
    pub(crate) fn solve_lines(
        &self,
        values: &mut [f64],
        n_x: usize,
        axis: Axis,
        lines: std::ops::Range<usize>,
    ) {
        for l in lines {
            match axis {
                Axis::X => self.solve_strided(values, l * n_x, 1),
                Axis::Y => self.solve_strided(values, l, n_x),
            }
        }
    }
}

pub fn solve_line(f: &LineFactorization, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    f.solve_in_place(&mut x)?;
    Ok(x)
}

/// Solves every grid line of `field` along `axis` with the shared
/// factorization.
pub fn solve_batch(f: &LineFactorization, field: &ScalarField, axis: Axis) -> Result<ScalarField> {
    let g = *field.grid();
    let (len, count) = match axis {
        Axis::X => (g.n_x(), g.n_y()),
        Axis::Y => (g.n_y(), g.n_x()),
    };
    if len != f.n {
        return Err(Error::Shape {
            expected: f.n,
            got: len,
        });
    }
    let mut values = field.values().to_vec();
    f.solve_lines(&mut values, g.n_x(), axis, 0..count);
    Ok(ScalarField::from_raw(g, values))
}
