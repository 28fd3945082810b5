//! Property checks returning measured defects so callers can assert or report.

use hvadi_core::grid::{sample, BoundaryKind, Domain, Grid, ScalarField};
use hvadi_core::linsolve::{factorize, solve_line, BandKind, BandedLineMatrix};
use hvadi_core::problems::{builtin_dirichlet_manufactured, builtin_periodic};
use hvadi_core::schemes::SchemeKind;
use hvadi_core::splitting::{integrate, SplittingConfig};
use hvadi_core::stencils::{
    d1_central2, d1_five, d2_central2, d2_five, dxy_central2, dxy_five, extend_ghosts, Axis,
    Ghosts, GHOST_WEIGHTS,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub label: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            label: label.into(),
            value,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

fn mono(a: i32, b: i32) -> impl Fn(f64, f64) -> f64 {
    move |x, y| x.powi(a) * y.powi(b)
}

fn dmono(p: i32, k: i32, x: f64) -> f64 {
    let mut c = 1.0;
    for m in 0..k {
        c *= (p - m) as f64;
    }
    if c == 0.0 {
        0.0
    } else {
        c * x.powi(p - k)
    }
}

/// Max relative defect over nodes at least `margin` away from every edge.
fn defect(got: &ScalarField, want: impl Fn(f64, f64) -> f64, margin: usize) -> f64 {
    let g = got.grid();
    let mut worst = 0.0f64;
    for j in margin..g.n_y() - margin {
        for i in margin..g.n_x() - margin {
            let w = want(g.x(i), g.y(j));
            worst = worst.max((got.get(i, j) - w).abs() / w.abs().max(1.0));
        }
    }
    worst
}

/// Exactness of every derivative operator on monomials up to its degree,
/// evaluated on a Dirichlet grid with extrapolated ghosts.
pub fn stencil_exactness() -> Vec<Check> {
    let grid = Grid::new(
        Domain::new(0.2, 1.3, -0.4, 0.7),
        12,
        11,
        BoundaryKind::Dirichlet,
    )
    .unwrap();
    let e = Ghosts::Extrapolate;
    let mut worst = [0.0f64; 6];
    for a in 0..=5 {
        for b in 0..=4 {
            let u = sample(&grid, mono(a, b)).unwrap();
            let ux = |k: i32| move |x: f64, y: f64| dmono(a, k, x) * y.powi(b);
            let uy = |k: i32| move |x: f64, y: f64| x.powi(b) * dmono(a, k, y);
            let v = sample(&grid, mono(b, a)).unwrap();
            if a <= 2 {
                worst[0] = worst[0].max(defect(&d1_central2(&u, Axis::X), ux(1), 1));
                worst[0] = worst[0].max(defect(&d1_central2(&v, Axis::Y), uy(1), 1));
            }
            if a <= 3 {
                worst[1] = worst[1].max(defect(&d2_central2(&u, Axis::X), ux(2), 1));
                worst[1] = worst[1].max(defect(&d2_central2(&v, Axis::Y), uy(2), 1));
            }
            if a <= 4 {
                worst[2] = worst[2].max(defect(&d1_five(&u, Axis::X, e).unwrap(), ux(1), 1));
                worst[2] = worst[2].max(defect(&d1_five(&v, Axis::Y, e).unwrap(), uy(1), 1));
                worst[3] = worst[3].max(defect(&d2_five(&u, Axis::X, e).unwrap(), ux(2), 1));
                worst[3] = worst[3].max(defect(&d2_five(&v, Axis::Y, e).unwrap(), uy(2), 1));
                let want = move |x: f64, y: f64| dmono(a, 1, x) * dmono(b, 1, y);
                worst[4] = worst[4].max(defect(&dxy_five(&u, e).unwrap(), want, 1));
            } else {
                // degree 5 away from the ghost-dependent first interior ring
                worst[3] = worst[3].max(defect(&d2_five(&u, Axis::X, e).unwrap(), ux(2), 2));
                worst[3] = worst[3].max(defect(&d2_five(&v, Axis::Y, e).unwrap(), uy(2), 2));
            }
            if a <= 1 && b <= 1 {
                let want = move |x: f64, y: f64| dmono(a, 1, x) * dmono(b, 1, y);
                worst[5] = worst[5].max(defect(&dxy_central2(&u), want, 1));
            }
        }
    }
    let mut checks: Vec<Check> = [
        "d1_central2 exact to degree 2",
        "d2_central2 exact to degree 3",
        "d1_five exact to degree 4",
        "d2_five exact to degree 5 (4 next to ghosts)",
        "dxy_five exact for x^a y^b, a, b <= 4",
        "dxy_central2 exact for x^a y^b, a, b <= 1",
    ]
    .iter()
    .zip(worst)
    .map(|(l, w)| Check::new(*l, w, 1e-12))
    .collect();

    let pg = Grid::new(Domain::unit_square(), 10, 9, BoundaryKind::Periodic).unwrap();
    let c = ScalarField::constant(pg, 3.7);
    let mut annihilation = 0.0f64;
    for f in [
        d1_central2(&c, Axis::X),
        d2_central2(&c, Axis::Y),
        dxy_central2(&c),
        d1_five(&c, Axis::Y, Ghosts::None).unwrap(),
        d2_five(&c, Axis::X, Ghosts::None).unwrap(),
        dxy_five(&c, Ghosts::None).unwrap(),
    ] {
        annihilation = annihilation.max(f.max_abs());
    }
    checks.push(Check::new(
        "periodic operators annihilate constants",
        annihilation,
        0.0,
    ));
    checks
}

/// Ghost values against the polynomial they extrapolate, and corner
/// consistency between the two fill orders.
pub fn ghost_checks(seed: u64) -> Vec<Check> {
    let grid = Grid::new(
        Domain::new(0.0, 1.0, 0.0, 0.8),
        9,
        7,
        BoundaryKind::Dirichlet,
    )
    .unwrap();
    let mut exact = 0.0f64;
    for a in 0..=4 {
        for b in 0..=4 {
            let ext = extend_ghosts(&sample(&grid, mono(a, b)).unwrap());
            for j in -1..=grid.n_y() as isize {
                for i in -1..=grid.n_x() as isize {
                    let (x, y) = (
                        grid.domain().x_min + i as f64 * grid.dx(),
                        grid.domain().y_min + j as f64 * grid.dy(),
                    );
                    let w = x.powi(a) * y.powi(b);
                    exact = exact.max((ext.get(i, j) - w).abs() / w.abs().max(1.0));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corner = 0.0f64;
    for _ in 0..20 {
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = ScalarField::new(grid, vals).unwrap();
        let ext = extend_ghosts(&u);
        let (nx, ny) = (grid.n_x() as isize, grid.n_y() as isize);
        let at = |i: isize, j: isize| u.get(i as usize, j as usize);
        // line extrapolation from the edge `e` inward with step `s`
        let ex = |f: &dyn Fn(isize) -> f64, e: isize, s: isize| -> f64 {
            (0..5)
                .map(|q| GHOST_WEIGHTS[q as usize] * f(e + s * q))
                .sum()
        };
        for (ci, si) in [(0, 1), (nx - 1, -1)] {
            for (cj, sj) in [(0, 1), (ny - 1, -1)] {
                let x_first = ex(&|j| ex(&|i| at(i, j), ci, si), cj, sj);
                let y_first = ex(&|i| ex(&|j| at(i, j), cj, sj), ci, si);
                let got = ext.get(ci - si, cj - sj);
                let scale = x_first.abs().max(1.0);
                corner = corner
                    .max((x_first - y_first).abs() / scale)
                    .max((got - x_first).abs() / scale);
            }
        }
    }
    vec![
        Check::new(
            "ghost extrapolation exact to degree 4 (edges and corners)",
            exact,
            1e-13,
        ),
        Check::new("corner ghost independent of fill order", corner, 1e-13),
    ]
}

/// Banded factorization round trips against dense LU, n = 5..=32, all band kinds.
pub fn banded_round_trips(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for kind in [
        BandKind::Tri,
        BandKind::Penta,
        BandKind::CyclicTri,
        BandKind::CyclicPenta,
    ] {
        for n in 5..=32 {
            let w = kind.half_width() as isize;
            let mut m = BandedLineMatrix::zeros(kind, n).unwrap();
            for i in 0..n {
                let mut off = 0.0;
                for d in -w..=w {
                    if d == 0 {
                        continue;
                    }
                    let c = i as isize + d;
                    let c = if kind.is_cyclic() {
                        c.rem_euclid(n as isize)
                    } else if c < 0 || c >= n as isize {
                        continue;
                    } else {
                        c
                    };
                    let v = rng.gen_range(-1.0..1.0);
                    m.set(i, c as usize, v).unwrap();
                    off += f64::abs(v);
                }
                m.set(i, i, off + rng.gen_range(0.5..2.0)).unwrap();
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rhs = m.matvec(&x).unwrap();
            let got = solve_line(&factorize(&m).unwrap(), &rhs).unwrap();
            let dense = DMatrix::from_fn(n, n, |r, c| m.to_dense()[r][c]);
            let want = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
            let scale = want.amax();
            for (g, w) in got.iter().zip(want.iter()) {
                worst = worst.max((g - w).abs() / scale);
            }
        }
    }
    Check::new("banded solves match dense LU, n = 5..32", worst, 1e-11)
}

/// Relative drift of the nodal mean over a 100-step periodic integration.
pub fn mean_drift(kind: SchemeKind) -> Check {
    let p = builtin_periodic();
    let grid = p.grid_with_spacing(0.05).unwrap();
    let u0 = sample(&grid, |x, y| (p.initial)(x, y)).unwrap();
    let cfg = SplittingConfig::new(0.001, 0.1);
    assert_eq!(cfg.steps().unwrap(), 100);
    let u = integrate(&p, kind, &cfg, &grid).unwrap();
    let drift = (u.mean() - u0.mean()).abs() / u0.mean().abs();
    Check::new(
        format!("{kind} periodic mean conserved over 100 steps"),
        drift,
        1e-12,
    )
}

/// Five-point fourth-order central derivative along one argument.
fn probe(f: &dyn Fn(f64) -> f64, x: f64, e: f64, second: bool) -> f64 {
    let (m2, m1, p1, p2) = (f(x - 2.0 * e), f(x - e), f(x + e), f(x + 2.0 * e));
    if second {
        (-m2 + 16.0 * m1 - 30.0 * f(x) + 16.0 * p1 - p2) / (12.0 * e * e)
    } else {
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * e)
    }
}

/// Max PDE residual of the manufactured solution with its source at random
/// points, derivatives taken by finite-difference probing.
pub fn manufactured_residual(samples: usize, seed: u64) -> Check {
    let p = builtin_dirichlet_manufactured();
    let u = p.exact.clone().unwrap();
    let k = p.coefficients;
    let d = k.diffusion;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (x, y, t) = (
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..0.1),
        );
        let u_t = probe(&|s| u(x, y, s), t, e, false);
        let u_x = probe(&|s| u(s, y, t), x, e, false);
        let u_y = probe(&|s| u(x, s, t), y, e, false);
        let u_xx = probe(&|s| u(s, y, t), x, e, true);
        let u_yy = probe(&|s| u(x, s, t), y, e, true);
        let u_xy = probe(&|s| probe(&|r| u(r, s, t), x, e, false), y, e, false);
        let r = u_t
            - (d.d11 * u_xx + (d.d12 + d.d21) * u_xy + d.d22 * u_yy)
            - k.c1 * u_x
            - k.c2 * u_y
            - p.source_at(x, y, t);
        worst = worst.max(r.abs());
    }
    Check::new(
        format!("manufactured PDE residual at {samples} random points"),
        worst,
        1e-6,
    )
}
