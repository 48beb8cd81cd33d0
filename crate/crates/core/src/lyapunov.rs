//! Continuous-time Lyapunov equations `AᵀX + XA + M = 0`.
//!
//! Small systems are solved by Kronecker vectorization; larger ones by the
//! Bartels–Stewart method on the real Schur form of `A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Up to this state dimension the dense Kronecker system is used.
pub const KRONECKER_MAX_DIM: usize = 20;

const REFINEMENT_STEPS: usize = 3;

/// Solve `AᵀX + XA + M = 0` with the method picked by dimension.
pub fn solve(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() <= KRONECKER_MAX_DIM {
        solve_kronecker(a, m)
    } else {
        solve_schur(a, m)
    }
}

/// Solve `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec X = −vec M` directly.
pub fn solve_kronecker(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = linalg::kron(&eye, &at) + linalg::kron(&at, &eye);
    let rhs = DVector::from_iterator(n * n, m.iter().map(|v| -v));
    let lu = k.lu();
    let vec_x = lu.solve(&rhs).ok_or(Error::Singular {
        what: "Lyapunov operator",
        rcond: 0.0,
    })?;
    let x = DMatrix::from_column_slice(n, n, vec_x.as_slice());
    Ok(linalg::symmetrize(&x))
}

/// Bartels–Stewart: with `A = U T Uᵀ`, solve `TᵀY + YT = −UᵀMU` block by
/// block and return `X = U Y Uᵀ`. A few refinement sweeps reuse the Schur
/// factors.
pub fn solve_schur(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (u, t) = linalg::real_schur(a)?;
    let blocks = diagonal_blocks(&t);

    let solve_once = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let f = -(u.transpose() * rhs * &u);
        let y = quasi_triangular_solve(&t, &f, &blocks)?;
        Ok(linalg::symmetrize(&(&u * y * u.transpose())))
    };

    let mut x = solve_once(m)?;
    let scale = 1.0 + m.norm();
    for _ in 0..REFINEMENT_STEPS {
        let r = residual_matrix(a, &x, m);
        if r.norm() <= 1e-14 * scale {
            break;
        }
        x += solve_once(&r)?;
    }
    Ok(x)
}

/// `AᵀX + XA + M`.
pub fn residual_matrix(a: &DMatrix<f64>, x: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * x + x * a + m
}

/// Start index and size of each 1×1 or 2×2 diagonal block of a
/// quasi-triangular matrix.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn quasi_triangular_solve(
    t: &DMatrix<f64>,
    f: &DMatrix<f64>,
    blocks: &[(usize, usize)],
) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut y = DMatrix::<f64>::zeros(n, n);
    for &(cj, qj) in blocks {
        for &(ri, pi) in blocks {
            let mut rhs = f.view((ri, cj), (pi, qj)).into_owned();
            // Σ_{l<i} T_liᵀ Y_lj: rows 0..ri of column block j.
            if ri > 0 {
                let t_li = t.view((0, ri), (ri, pi));
                let y_lj = y.view((0, cj), (ri, qj));
                rhs -= t_li.transpose() * y_lj;
            }
            // Σ_{l<j} Y_il T_lj: columns 0..cj of row block i.
            if cj > 0 {
                let y_il = y.view((ri, 0), (pi, cj));
                let t_lj = t.view((0, cj), (cj, qj));
                rhs -= y_il * t_lj;
            }
            let t_ii = t.view((ri, ri), (pi, pi)).into_owned();
            let t_jj = t.view((cj, cj), (qj, qj)).into_owned();
            let block = small_sylvester(&t_ii, &t_jj, &rhs)?;
            y.view_mut((ri, cj), (pi, qj)).copy_from(&block);
        }
    }
    Ok(y)
}

/// Solve `T_iiᵀ Y + Y T_jj = R` for blocks of size at most 2.
fn small_sylvester(
    t_ii: &DMatrix<f64>,
    t_jj: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (p, q) = r.shape();
    if p == 1 && q == 1 {
        let d = t_ii[(0, 0)] + t_jj[(0, 0)];
        if d == 0.0 {
            return Err(Error::Singular {
                what: "Lyapunov operator",
                rcond: 0.0,
            });
        }
        return Ok(DMatrix::from_element(1, 1, r[(0, 0)] / d));
    }
    let k = linalg::kron(&DMatrix::identity(q, q), &t_ii.transpose())
        + linalg::kron(&t_jj.transpose(), &DMatrix::identity(p, p));
    let rhs = DVector::from_column_slice(r.as_slice());
    let sol = k.lu().solve(&rhs).ok_or(Error::Singular {
        what: "Lyapunov operator",
        rcond: 0.0,
    })?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}
