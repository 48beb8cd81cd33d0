//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Reciprocal condition numbers below this are treated as singular.
pub const RCOND_SINGULAR: f64 = 1e-12;

/// Numerical rank from the singular values, numpy-style tolerance
/// `max(m, n) * eps * sigma_max`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Solve `m x = rhs` by LU with partial pivoting after checking the
/// reciprocal 2-norm condition of `m` against [`RCOND_SINGULAR`].
pub fn solve_checked(
    m: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let rc = rcond(m);
    if !(rc >= RCOND_SINGULAR) {
        return Err(Error::Singular { what, rcond: rc });
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Singular { what, rcond: rc })
}

pub fn solve_vec_checked(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    what: &'static str,
) -> Result<DVector<f64>> {
    let rhs = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let sol = solve_checked(m, &rhs, what)?;
    Ok(sol.column(0).into_owned())
}

/// Reciprocal 2-norm condition number `sigma_min / sigma_max`.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0.0;
    }
    sv.min() / smax
}

/// Real Schur form `A = U T Uᵀ`.
///
/// nalgebra's QR iteration deflates against a relative tolerance and can
/// stall on clustered eigenvalues at machine precision. On failure it is
/// retried with slightly looser tolerances, then on `A + σI` with the shift
/// removed from `T` afterwards.
pub fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let max_iter = 100 * n + 1000;
    for eps in [f64::EPSILON, 4.0 * f64::EPSILON, 1e-14] {
        if let Some(s) = Schur::try_new(a.clone(), eps, max_iter) {
            return Ok(s.unpack());
        }
    }
    let scale = 1.0 + a.amax();
    for sigma in [0.37 * scale, -0.61 * scale] {
        let shifted = a + DMatrix::identity(n, n) * sigma;
        if let Some(s) = Schur::try_new(shifted, 4.0 * f64::EPSILON, max_iter) {
            let (u, mut t) = s.unpack();
            for i in 0..n {
                t[(i, i)] -= sigma;
            }
            return Ok((u, t));
        }
    }
    Err(Error::EigenFailure)
}

/// Eigenvalues of a general real matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let (_, t) = real_schur(a)?;
    Ok(quasi_triangular_eigenvalues(&t))
}

/// Eigenvalues read off the 1×1 and 2×2 diagonal blocks of a real Schur
/// factor.
fn quasi_triangular_eigenvalues(t: &DMatrix<f64>) -> Vec<Complex64> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let r = disc.sqrt();
                out.push(Complex::new(half_tr + r, 0.0));
                out.push(Complex::new(half_tr - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                out.push(Complex::new(half_tr, r));
                out.push(Complex::new(half_tr, -r));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// `diag(values)`.
pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

/// Stack blocks `[[a, b], [c, d]]`.
pub fn block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(c.nrows(), d.nrows());
    debug_assert_eq!(a.ncols(), c.ncols());
    debug_assert_eq!(b.ncols(), d.ncols());
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(c);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}

/// Build a matrix from row-major nested vectors.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
