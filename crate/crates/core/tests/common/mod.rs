//! Shared test oracles.

#![allow(dead_code)]

pub mod props;

use hvadi_core::grid::{BoundaryKind, Domain, Grid, ScalarField};
use hvadi_core::problems::{
    builtin_dirichlet_manufactured, builtin_periodic, Coefficients, ProblemSpec,
};
use hvadi_core::schemes::{build_scheme_context_with, DiffusionTensor, ExplicitPolicy, SchemeKind};
use hvadi_core::splitting::{hv_step, SplittingConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 8;
const GHOST: [f64; 5] = [5.0, -10.0, 10.0, -5.0, 1.0];

/// 1D operator from offset weights centred at `weights.len() / 2`.
/// Periodic: circulant. Dirichlet: boundary rows zero, out-of-range
/// neighbours replaced by the degree-4 extrapolation.
fn line_matrix(weights: &[f64], n: usize, periodic: bool) -> DMatrix<f64> {
    let r = (weights.len() / 2) as isize;
    let mut m = DMatrix::zeros(n, n);
    let rows: Vec<usize> = if periodic {
        (0..n).collect()
    } else {
        (1..n - 1).collect()
    };
    for i in rows {
        for (k, &w) in weights.iter().enumerate() {
            let col = i as isize + k as isize - r;
            if periodic {
                m[(i, col.rem_euclid(n as isize) as usize)] += w;
            } else if col < 0 {
                assert_eq!(col, -1);
                for (q, g) in GHOST.iter().enumerate() {
                    m[(i, q)] += w * g;
                }
            } else if col >= n as isize {
                assert_eq!(col, n as isize);
                for (q, g) in GHOST.iter().enumerate() {
                    m[(i, n - 1 - q)] += w * g;
                }
            } else {
                m[(i, col as usize)] += w;
            }
        }
    }
    m
}

fn d1_c(h: f64) -> Vec<f64> {
    vec![-0.5 / h, 0.0, 0.5 / h]
}
fn d2_c(h: f64) -> Vec<f64> {
    vec![1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)]
}
fn d1_5(h: f64) -> Vec<f64> {
    [1.0, -8.0, 0.0, 8.0, -1.0]
        .iter()
        .map(|w| w / (12.0 * h))
        .collect()
}
fn d2_5(h: f64) -> Vec<f64> {
    [-1.0, 16.0, -30.0, 16.0, -1.0]
        .iter()
        .map(|w| w / (12.0 * h * h))
        .collect()
}

struct Dense {
    f0: DMatrix<f64>,
    f1: DMatrix<f64>,
    f2: DMatrix<f64>,
    /// Per-axis (B, A) such that the stage is (B - theta dt A) y = B y_in - theta dt A u_ref.
    bx: DMatrix<f64>,
    ax: DMatrix<f64>,
    by: DMatrix<f64>,
    ay: DMatrix<f64>,
    periodic: bool,
}

fn dense(
    kind: SchemeKind,
    k: &Coefficients,
    dx: f64,
    dy: f64,
    periodic: bool,
    policy: ExplicitPolicy,
) -> Dense {
    let d = &k.diffusion;
    let mixed = d.d12 + d.d21;
    let lm = |w: &[f64]| line_matrix(w, N, periodic);
    let id = DMatrix::<f64>::identity(N, N);
    let pass = if periodic {
        id.clone()
    } else {
        let mut p = id.clone();
        p[(0, 0)] = 0.0;
        p[(N - 1, N - 1)] = 0.0;
        p
    };
    let comb = |a: Vec<f64>, sa: f64, b: Vec<f64>, sb: f64| -> Vec<f64> {
        let len = a.len().max(b.len());
        let pad = |v: Vec<f64>| {
            let off = (len - v.len()) / 2;
            let mut out = vec![0.0; len];
            out[off..off + v.len()].copy_from_slice(&v);
            out
        };
        pad(a)
            .iter()
            .zip(pad(b))
            .map(|(x, y)| sa * x + sb * y)
            .collect()
    };
    let (line_x, line_y, f0) = match kind {
        SchemeKind::Cds => (
            lm(&comb(d2_c(dx), d.d11, d1_c(dx), k.c1)),
            lm(&comb(d2_c(dy), d.d22, d1_c(dy), k.c2)),
            lm(&d1_c(dy)).kronecker(&lm(&d1_c(dx))) * mixed,
        ),
        SchemeKind::Ho5 | SchemeKind::Hoc => (
            lm(&comb(d2_5(dx), d.d11, d1_5(dx), k.c1)),
            lm(&comb(d2_5(dy), d.d22, d1_5(dy), k.c2)),
            lm(&d1_5(dy)).kronecker(&lm(&d1_5(dx))) * mixed,
        ),
    };
    let hoc = |c: f64, dd: f64, h: f64| {
        let a = lm(&comb(d2_c(h), dd + h * h * c * c / (12.0 * dd), d1_c(h), c));
        let b = &id
            + lm(&comb(
                d2_c(h),
                h * h / 12.0,
                d1_c(h),
                h * h * c / (12.0 * dd),
            ));
        (b, a)
    };
    let ((bx, ax), (by, ay)) = match kind {
        SchemeKind::Hoc => (hoc(k.c1, d.d11, dx), hoc(k.c2, d.d22, dy)),
        _ => ((id.clone(), line_x.clone()), (id.clone(), line_y.clone())),
    };
    let (line_x, line_y) = if kind == SchemeKind::Hoc && policy == ExplicitPolicy::CompactInverse {
        (
            bx.clone().try_inverse().unwrap() * &ax,
            by.clone().try_inverse().unwrap() * &ay,
        )
    } else {
        (line_x, line_y)
    };
    Dense {
        f0,
        f1: pass.kronecker(&line_x),
        f2: line_y.kronecker(&pass),
        bx: id.kronecker(&bx),
        ax: id.kronecker(&ax),
        by: by.kronecker(&id),
        ay: ay.kronecker(&id),
        periodic,
    }
}

fn is_boundary(k: usize) -> bool {
    let (i, j) = (k % N, k / N);
    i == 0 || j == 0 || i == N - 1 || j == N - 1
}

impl Dense {
    fn f(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.f0 * u + &self.f1 * u + &self.f2 * u
    }

    fn stage(
        &self,
        b: &DMatrix<f64>,
        a: &DMatrix<f64>,
        td: f64,
        y_in: &DVector<f64>,
        u_ref: &DVector<f64>,
        g: &DVector<f64>,
    ) -> DVector<f64> {
        let mut m = b - a * td;
        let mut rhs = b * y_in - a * u_ref * td;
        if !self.periodic {
            for k in 0..N * N {
                if is_boundary(k) {
                    m.row_mut(k).fill(0.0);
                    m[(k, k)] = 1.0;
                    rhs[k] = g[k];
                }
            }
        }
        m.lu().solve(&rhs).unwrap()
    }

    fn impose(&self, v: &mut DVector<f64>, g: &DVector<f64>) {
        if !self.periodic {
            for k in 0..N * N {
                if is_boundary(k) {
                    v[k] = g[k];
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        u: &DVector<f64>,
        dt: f64,
        theta: f64,
        sigma: f64,
        s0: &DVector<f64>,
        s1: &DVector<f64>,
        g: &DVector<f64>,
    ) -> DVector<f64> {
        let td = theta * dt;
        let fu = self.f(u);
        let mut y0 = u + (&fu + s0) * dt;
        self.impose(&mut y0, g);
        let y1 = self.stage(&self.bx, &self.ax, td, &y0, u, g);
        let y2 = self.stage(&self.by, &self.ay, td, &y1, u, g);
        let mut yt0 = &y0 + (self.f(&y2) + s1 - &fu - s0) * (sigma * dt);
        self.impose(&mut yt0, g);
        let yt1 = self.stage(&self.bx, &self.ax, td, &yt0, &y2, g);
        self.stage(&self.by, &self.ay, td, &yt1, &y2, g)
    }
}

pub fn nodal(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> DVector<f64> {
    DVector::from_fn(N * N, |k, _| f(grid.x(k % N), grid.y(k / N)))
}

/// Relative max difference between `hv_step` and the dense step.
pub fn step_difference(
    problem: &ProblemSpec,
    grid: Grid,
    kind: SchemeKind,
    policy: ExplicitPolicy,
    theta: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periodic = grid.bc() == BoundaryKind::Periodic;
    let (t0, dt, sigma) = (0.03, 0.004, 0.5);
    let u0 = nodal(&grid, |x, y| {
        (problem.initial)(x, y) + 0.1 * rng.gen_range(-1.0..1.0)
    });
    let src = |t: f64| nodal(&grid, |x, y| problem.source_at(x, y, t));
    let g = match &problem.boundary {
        Some(b) => nodal(&grid, |x, y| b(x, y, t0 + dt)),
        None => DVector::zeros(N * N),
    };
    let oracle = dense(
        kind,
        &problem.coefficients,
        grid.dx(),
        grid.dy(),
        periodic,
        policy,
    );
    let want = oracle.step(&u0, dt, theta, sigma, &src(t0), &src(t0 + dt), &g);

    let ctx =
        build_scheme_context_with(kind, &grid, &problem.coefficients, theta * dt, policy).unwrap();
    let cfg = SplittingConfig {
        theta,
        sigma,
        dt,
        t0: 0.0,
        tf: 1.0,
    };
    let u = ScalarField::new(grid, u0.iter().copied().collect()).unwrap();
    let got = hv_step(&ctx, problem, &u, t0, dt, &cfg).unwrap();

    let err = got
        .values()
        .iter()
        .zip(want.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    err / want.amax()
}

fn skewed(mut p: ProblemSpec) -> ProblemSpec {
    p.coefficients = Coefficients {
        c1: 1.5,
        c2: -0.7,
        diffusion: DiffusionTensor::new(0.04, 0.01, 0.03, 0.06),
    };
    p
}

pub struct Case {
    pub label: String,
    pub difference: f64,
}

/// Every in-scope scheme and boundary combination on square and stretched
/// 8x8 grids, for the built-in and a skewed coefficient set, at both theta values.
pub fn dense_cases(bc: BoundaryKind) -> Vec<Case> {
    let (problems, rect) = match bc {
        BoundaryKind::Periodic => (
            [builtin_periodic(), skewed(builtin_periodic())],
            Domain::new(0.0, 1.0, -0.5, 1.5),
        ),
        BoundaryKind::Dirichlet => (
            [
                builtin_dirichlet_manufactured(),
                skewed(builtin_dirichlet_manufactured()),
            ],
            Domain::new(0.0, 1.0, 0.0, 1.4),
        ),
    };
    let mut out = Vec::new();
    for (s, problem) in problems.iter().enumerate() {
        for domain in [Domain::unit_square(), rect] {
            let grid = Grid::new(domain, N, N, bc).unwrap();
            let mut runs: Vec<(SchemeKind, ExplicitPolicy, f64)> = Vec::new();
            for kind in SchemeKind::ALL {
                if kind == SchemeKind::Ho5 && bc == BoundaryKind::Dirichlet {
                    continue;
                }
                for theta in [0.5, 0.5 + 3f64.sqrt() / 6.0] {
                    runs.push((kind, ExplicitPolicy::FivePoint, theta));
                }
            }
            if bc == BoundaryKind::Periodic {
                runs.push((SchemeKind::Hoc, ExplicitPolicy::CompactInverse, 0.5));
            }
            for (kind, policy, theta) in runs {
                let difference = step_difference(problem, grid, kind, policy, theta, 17 + s as u64);
                out.push(Case {
                    label: format!(
                        "{kind} {bc} {:?} coeffs#{s} {}x[{}, {}] theta={theta:.4}",
                        policy, N, domain.y_min, domain.y_max
                    ),
                    difference,
                });
            }
        }
    }
    out
}
