//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use saddle_h2::{QuadraticProgram, StateSpace, TimeConstants};

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub struct Instance {
    pub p: QuadraticProgram,
    pub tc: TimeConstants,
    pub tau_x: Vec<f64>,
    pub tau_nu: Vec<f64>,
}

/// Random valid QP with `n_x ≤ max_nx`, `n_r ≤ max_nr`, random diagonal time
/// constants and a random full-row-rank `W_b`.
pub fn random_instance(rng: &mut ChaCha8Rng, max_nx: usize, max_nr: usize) -> Instance {
    let nx = rng.random_range(2..=max_nx);
    let nr = rng.random_range(1..=max_nr.min(nx - 1));
    let nb = rng.random_range(nr..=nr + 2);
    let q = uniform_vec(rng, nx, 0.3, 3.0);
    let c = uniform_vec(rng, nx, -1.0, 1.0);
    let s = gaussian_matrix(rng, nr, nx);
    let w = gaussian_matrix(rng, nr, nb);
    let b = uniform_vec(rng, nb, -1.0, 1.0);
    let p = QuadraticProgram::from_parts(&q, &c, &rows(&s), &rows(&w), &b).unwrap();
    assert!(p.validate().is_ok());
    let tau_x = uniform_vec(rng, nx, 0.2, 3.0);
    let tau_nu = uniform_vec(rng, nr, 0.2, 3.0);
    Instance {
        tc: TimeConstants::diagonal(tau_x.clone(), tau_nu.clone()),
        p,
        tau_x,
        tau_nu,
    }
}

/// Solve the full KKT block system `[[Q, Sᵀ], [S, 0]] (x, ν) = (−c, W_b b)`.
pub fn kkt_oracle(p: &QuadraticProgram) -> (DVector<f64>, DVector<f64>) {
    let (nx, nr) = (p.n_x(), p.n_r());
    let mut k = DMatrix::zeros(nx + nr, nx + nr);
    for i in 0..nx {
        k[(i, i)] = p.q_diag()[i];
    }
    for i in 0..nr {
        for j in 0..nx {
            k[(nx + i, j)] = p.s()[(i, j)];
            k[(j, nx + i)] = p.s()[(i, j)];
        }
    }
    let wb = p.w_b() * p.b();
    let rhs = DVector::from_iterator(nx + nr, (-p.c()).iter().copied().chain(wb.iter().copied()));
    let sol = k.lu().solve(&rhs).unwrap();
    (sol.rows(0, nx).into_owned(), sol.rows(nx, nr).into_owned())
}

/// Lyapunov equation `AᵀX + XA + CᵀC = 0` by explicit Kronecker assembly,
/// entry by entry. `vec X` is column-major.
pub fn gramian_oracle(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let ctc = c.transpose() * c;
    let mut k = DMatrix::zeros(n * n, n * n);
    // (AᵀX + XA)_{ij} = Σ_l A_li X_lj + Σ_l X_il A_lj
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                k[(row, l + j * n)] += a[(l, i)];
                k[(row, i + l * n)] += a[(l, j)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, ctc.iter().map(|v| -v));
    let x = k.lu().solve(&rhs).unwrap();
    DMatrix::from_column_slice(n, n, x.as_slice())
}

pub fn h2_oracle(sys: &StateSpace) -> f64 {
    let x = gramian_oracle(sys.a(), sys.c());
    (sys.b().transpose() * x * sys.b()).trace()
}

fn transfer_frobenius_sq(sys: &StateSpace, w: f64) -> f64 {
    let n = sys.n_states();
    let m = DMatrix::<C64>::from_fn(n, n, |i, j| {
        let d = if i == j { C64::new(0.0, w) } else { C64::new(0.0, 0.0) };
        d - C64::new(sys.a()[(i, j)], 0.0)
    });
    let b = sys.b().map(|v| C64::new(v, 0.0));
    let c = sys.c().map(|v| C64::new(v, 0.0));
    let x = m.lu().solve(&b).unwrap();
    (c * x).iter().map(|z| z.norm_sqr()).sum()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// `(1/π)∫₀^Ω ‖G(jω)‖²_F dω + ‖CB‖²_F/(πΩ)` with `Ω = 10³·max|λ(A)|`, by
/// adaptive Simpson on geometrically growing panels.
pub fn h2_frequency_oracle(sys: &StateSpace) -> f64 {
    let eig = sys.a().complex_eigenvalues();
    let max_abs = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let min_abs = eig.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
    let omega = 1e3 * max_abs;
    let f = |w: f64| transfer_frobenius_sq(sys, w);
    let mut edges = vec![0.0];
    let mut w = 1e-3 * min_abs.max(1e-6);
    while w < omega {
        edges.push(w);
        w *= 2.0;
    }
    edges.push(omega);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (f(a), f(b));
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let scale = whole.abs().max(1e-300);
        total += simpson(&f, a, b, fa, fm, fb, whole, 1e-10 * scale.max(1e-12), 40);
    }
    let cb = sys.c() * sys.b();
    (total + cb.norm_squared() / omega) / std::f64::consts::PI
}

/// Random stable `(A, B, C)` of state dimension `n`.
pub fn random_stable_system(rng: &mut ChaCha8Rng, n: usize) -> StateSpace {
    let mut a = gaussian_matrix(rng, n, n);
    let abscissa = a
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = abscissa + rng.random_range(0.3..2.0);
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let m = rng.random_range(1..=3);
    let p = rng.random_range(1..=3);
    StateSpace::new(a, gaussian_matrix(rng, n, m), gaussian_matrix(rng, p, n)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
