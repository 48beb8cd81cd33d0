//! Linearly constrained quadratic programs
//!
//! ```text
//! minimize   ½ xᵀQx + cᵀx
//! subject to S x = W_b b
//! ```
//!
//! with diagonal `Q ≻ 0`, full-row-rank `S` and `W_b`, and fewer constraints
//! than primal variables. This module validates those assumptions and
//! computes the exact optimizer, the regularized equilibrium and the pieces
//! of the dual function.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Cost `(Q, c)` and constraint data `(S, W_b, b)`. `Q` is stored as its
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    q: DVector<f64>,
    c: DVector<f64>,
    s: DMatrix<f64>,
    w_b: DMatrix<f64>,
    b: DVector<f64>,
}

/// A violated modelling assumption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    QNotPositiveDefinite,
    SNotFullRowRank,
    WbNotFullRowRank,
    TooManyConstraints,
    NonFinite(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::QNotPositiveDefinite => f.write_str("Q not positive definite"),
            Violation::SNotFullRowRank => f.write_str("S not full row rank"),
            Violation::WbNotFullRowRank => f.write_str("W_b not full row rank"),
            Violation::TooManyConstraints => f.write_str("n_r must be smaller than n_x"),
            Violation::NonFinite(what) => write!(f, "{what} has non-finite entries"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, v: &Violation) -> bool {
        self.violations.contains(v)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&msgs.join("; "))
    }
}

/// Primal-dual pair `(x, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub x: DVector<f64>,
    pub nu: DVector<f64>,
}

/// Quadratic model of the dual function
/// `Φ(ν) = −½ νᵀHν − νᵀg − constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualData {
    /// `S Q⁻¹ Sᵀ`
    pub h: DMatrix<f64>,
    /// `S Q⁻¹ c + W_b b`
    pub g: DVector<f64>,
    /// `½ cᵀ Q⁻¹ c`
    pub constant: f64,
}

impl DualData {
    pub fn evaluate(&self, nu: &DVector<f64>) -> f64 {
        -0.5 * nu.dot(&(&self.h * nu)) - nu.dot(&self.g) - self.constant
    }

    /// `−H⁻¹ g`, the unconstrained maximizer of `Φ`.
    pub fn maximizer(&self) -> Result<DVector<f64>> {
        Ok(-linalg::solve_vec_checked(&self.h, &self.g, "S Q^-1 S^T")?)
    }
}

impl QuadraticProgram {
    /// Checks shapes only; modelling assumptions are reported by
    /// [`QuadraticProgram::validate`].
    pub fn new(
        q: DVector<f64>,
        c: DVector<f64>,
        s: DMatrix<f64>,
        w_b: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        let n_x = q.len();
        if n_x == 0 {
            return Err(Error::DimensionMismatch("Q must have at least one entry".into()));
        }
        if c.len() != n_x {
            return Err(Error::DimensionMismatch(format!(
                "c has length {} but Q has {n_x} diagonal entries",
                c.len()
            )));
        }
        if s.ncols() != n_x || s.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "S is {}x{}, expected n_r x {n_x} with n_r >= 1",
                s.nrows(),
                s.ncols()
            )));
        }
        if w_b.nrows() != s.nrows() || w_b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "W_b is {}x{}, expected {} x n_b with n_b >= 1",
                w_b.nrows(),
                w_b.ncols(),
                s.nrows()
            )));
        }
        if b.len() != w_b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "b has length {} but W_b has {} columns",
                b.len(),
                w_b.ncols()
            )));
        }
        Ok(Self { q, c, s, w_b, b })
    }

    /// Convenience constructor from slices and row-major matrices.
    pub fn from_parts(
        q: &[f64],
        c: &[f64],
        s_rows: &[Vec<f64>],
        w_b_rows: &[Vec<f64>],
        b: &[f64],
    ) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(q),
            DVector::from_column_slice(c),
            linalg::from_rows(s_rows)?,
            linalg::from_rows(w_b_rows)?,
            DVector::from_column_slice(b),
        )
    }

    pub fn n_x(&self) -> usize {
        self.q.len()
    }

    pub fn n_r(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_b(&self) -> usize {
        self.w_b.ncols()
    }

    pub fn q_diag(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.q)
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn w_b(&self) -> &DMatrix<f64> {
        &self.w_b
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// `Q⁻¹` as a diagonal matrix.
    pub fn q_inv(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.q.map(|v| 1.0 / v))
    }

    /// Returns a copy with new disturbance parameters `b`.
    pub fn with_b(&self, b: DVector<f64>) -> Result<Self> {
        Self::new(self.q.clone(), self.c.clone(), self.s.clone(), self.w_b.clone(), b)
    }

    pub fn with_c(&self, c: DVector<f64>) -> Result<Self> {
        Self::new(self.q.clone(), c, self.s.clone(), self.w_b.clone(), self.b.clone())
    }

    /// Check every modelling assumption and report all that fail.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (name, finite) in [
            ("Q", self.q.iter().all(|v| v.is_finite())),
            ("c", self.c.iter().all(|v| v.is_finite())),
            ("S", self.s.iter().all(|v| v.is_finite())),
            ("W_b", self.w_b.iter().all(|v| v.is_finite())),
            ("b", self.b.iter().all(|v| v.is_finite())),
        ] {
            if !finite {
                violations.push(Violation::NonFinite(name));
            }
        }
        if !self.q.iter().all(|&v| v > 0.0) {
            violations.push(Violation::QNotPositiveDefinite);
        }
        if self.n_r() >= self.n_x() {
            violations.push(Violation::TooManyConstraints);
        }
        let finite_s = !violations.contains(&Violation::NonFinite("S"));
        if finite_s && linalg::rank(&self.s) < self.n_r() {
            violations.push(Violation::SNotFullRowRank);
        }
        let finite_w = !violations.contains(&Violation::NonFinite("W_b"));
        if finite_w && linalg::rank(&self.w_b) < self.n_r() {
            violations.push(Violation::WbNotFullRowRank);
        }
        ValidationReport { violations }
    }

    /// `H = S Q⁻¹ Sᵀ`, `g = S Q⁻¹ c + W_b b` and the constant `½ cᵀQ⁻¹c`.
    pub fn dual_data(&self) -> Result<DualData> {
        self.validate().into_result()?;
        let q_inv = self.q_inv();
        let h = &self.s * &q_inv * self.s.transpose();
        let g = &self.s * (&q_inv * &self.c) + &self.w_b * &self.b;
        let constant = 0.5 * self.c.dot(&(&q_inv * &self.c));
        Ok(DualData {
            h: linalg::symmetrize(&h),
            g,
            constant,
        })
    }

    /// The unique optimizer `(x*, ν*)`.
    pub fn solve_kkt(&self) -> Result<Equilibrium> {
        self.equilibrium(0.0)
    }

    /// Equilibrium of the dynamics with dual regularization `−(ε/2)‖ν‖²`.
    pub fn regularized_equilibrium(&self, eps: f64) -> Result<Equilibrium> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive and finite, got {eps}")));
        }
        self.equilibrium(eps)
    }

    fn equilibrium(&self, eps: f64) -> Result<Equilibrium> {
        let dual = self.dual_data()?;
        let m = &dual.h + DMatrix::identity(self.n_r(), self.n_r()) * eps;
        let nu = -linalg::solve_vec_checked(&m, &dual.g, "S Q^-1 S^T + eps I")?;
        let x = -(self.q_inv() * (self.s.transpose() * &nu + &self.c));
        Ok(Equilibrium { x, nu })
    }

    /// Right-hand side of the (un-shifted, unscaled) saddle-point flow
    ///
    /// ```text
    /// −(Q + ρSᵀS)x − Sᵀν − c + ρSᵀW_b b
    /// S x − W_b b − εν
    /// ```
    ///
    /// which vanishes exactly at the equilibrium of the respective variant.
    pub fn saddle_point_field(
        &self,
        x: &DVector<f64>,
        nu: &DVector<f64>,
        eps: f64,
        rho: f64,
    ) -> (DVector<f64>, DVector<f64>) {
        let residual = &self.s * x - &self.w_b * &self.b;
        let dx = -self.q.component_mul(x) - self.s.transpose() * nu - &self.c
            - self.s.transpose() * &residual * rho;
        let dnu = residual - nu * eps;
        (dx, dnu)
    }

    /// Relative residuals of the two optimality conditions
    /// `Qx + Sᵀν + c = 0` and `Sx = W_b b`.
    pub fn kkt_residuals(&self, eq: &Equilibrium) -> (f64, f64) {
        let stat = self.q.component_mul(&eq.x) + self.s.transpose() * &eq.nu + &self.c;
        let feas = &self.s * &eq.x - &self.w_b * &self.b;
        let scale1 = 1.0 + self.c.norm() + self.q.component_mul(&eq.x).norm();
        let scale2 = 1.0 + (&self.w_b * &self.b).norm();
        (stat.norm() / scale1, feas.norm() / scale2)
    }
}

/// Diagonal time-constant block: a single scalar or explicit entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeScale {
    Uniform(f64),
    Diagonal(Vec<f64>),
}

impl Default for TimeScale {
    fn default() -> Self {
        TimeScale::Uniform(1.0)
    }
}

impl TimeScale {
    /// Expand to `n` positive diagonal entries.
    pub fn resolve(&self, n: usize, name: &str) -> Result<DVector<f64>> {
        let v = match self {
            TimeScale::Uniform(t) => DVector::from_element(n, *t),
            TimeScale::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} has {} entries, expected {n}",
                        d.len()
                    )));
                }
                DVector::from_column_slice(d)
            }
        };
        if !v.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("{name} entries must be positive and finite")));
        }
        Ok(v)
    }

    /// The common value if every entry is identical.
    pub fn uniform_value(&self) -> Option<f64> {
        match self {
            TimeScale::Uniform(t) => Some(*t),
            TimeScale::Diagonal(d) => {
                let first = *d.first()?;
                d.iter().all(|&t| t == first).then_some(first)
            }
        }
    }
}

/// Time constants of the primal (`x`), dual (`ν`) and, for the distributed
/// formulations, edge-flow (`δ`) and edge-multiplier (`μ`) blocks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeConstants {
    pub tau_x: TimeScale,
    pub tau_nu: TimeScale,
    #[serde(default)]
    pub tau_delta: TimeScale,
    #[serde(default)]
    pub tau_mu: TimeScale,
}

impl TimeConstants {
    pub fn uniform(tau_x: f64, tau_nu: f64) -> Self {
        Self {
            tau_x: TimeScale::Uniform(tau_x),
            tau_nu: TimeScale::Uniform(tau_nu),
            ..Self::default()
        }
    }

    pub fn diagonal(tau_x: Vec<f64>, tau_nu: Vec<f64>) -> Self {
        Self {
            tau_x: TimeScale::Diagonal(tau_x),
            tau_nu: TimeScale::Diagonal(tau_nu),
            ..Self::default()
        }
    }

    pub fn with_mu(mut self, tau_mu: TimeScale) -> Self {
        self.tau_mu = tau_mu;
        self
    }

    pub fn with_delta(mut self, tau_delta: TimeScale) -> Self {
        self.tau_delta = tau_delta;
        self
    }
}

/// Strengths `t_c`, `t_b` of the white-noise disturbances entering `c` and
/// `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceConfig {
    pub t_c: f64,
    pub t_b: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { t_c: 1.0, t_b: 1.0 }
    }
}

impl DisturbanceConfig {
    pub fn new(t_c: f64, t_b: f64) -> Result<Self> {
        let d = Self { t_c, t_b };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_c >= 0.0 && self.t_c.is_finite()) {
            return Err(Error::invalid(format!("t_c must be nonnegative, got {}", self.t_c)));
        }
        if !(self.t_b >= 0.0 && self.t_b.is_finite()) {
            return Err(Error::invalid(format!("t_b must be nonnegative, got {}", self.t_b)));
        }
        Ok(())
    }
}
