//! Continuous-time state-space systems `ẋ = Ax + Bη`, `z = Cx` and their
//! H2 norms.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Complex64};
use crate::lyapunov;

/// Eigenvalues with real part at or above this are not counted as stable.
pub const HURWITZ_MARGIN: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianResult {
    pub x: DMatrix<f64>,
    /// `‖AᵀX + XA + CᵀC‖_F`.
    pub residual: f64,
    pub positive_definite: bool,
}

#[derive(Serialize)]
struct StateSpaceJson<'a> {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    state_labels: &'a [String],
    input_labels: &'a [String],
    output_labels: &'a [String],
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, A has {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns, A has {n}",
                c.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self {
            state_labels: numbered("x", n),
            input_labels: numbered("eta", b.ncols()),
            output_labels: numbered("z", c.nrows()),
            a,
            b,
            c,
        })
    }

    pub fn with_labels(
        mut self,
        states: Vec<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    ) -> Result<Self> {
        if states.len() != self.n_states()
            || inputs.len() != self.n_inputs()
            || outputs.len() != self.n_outputs()
        {
            return Err(Error::DimensionMismatch("label counts do not match system".into()));
        }
        self.state_labels = states;
        self.input_labels = inputs;
        self.output_labels = outputs;
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Row-major JSON dump for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StateSpaceJson {
            a: linalg::to_rows(&self.a),
            b: linalg::to_rows(&self.b),
            c: linalg::to_rows(&self.c),
            state_labels: &self.state_labels,
            input_labels: &self.input_labels,
            output_labels: &self.output_labels,
        })
        .expect("matrices of f64 always serialize")
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    pub fn stability(&self) -> Result<Stability> {
        let abscissa = self
            .eigenvalues()?
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Stability {
            hurwitz: self.n_states() == 0 || abscissa < HURWITZ_MARGIN,
            spectral_abscissa: abscissa,
        })
    }

    pub fn is_hurwitz(&self) -> Result<bool> {
        Ok(self.stability()?.hurwitz)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|l| l.norm()).fold(0.0, f64::max))
    }

    /// PBH test: no eigenvector of `A` lies in the kernel of `C`.
    pub fn is_observable(&self) -> Result<bool> {
        let n = self.n_states();
        let p = self.n_outputs();
        let scale = 1.0 + self.a.norm() + self.c.norm();
        let tol = 1e-7 * scale;
        for lambda in self.eigenvalues()? {
            if lambda.im < 0.0 {
                continue;
            }
            let m = DMatrix::<Complex64>::from_fn(n + p, n, |i, j| {
                if i < n {
                    let diag = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                    diag - Complex::new(self.a[(i, j)], 0.0)
                } else {
                    Complex::new(self.c[(i - n, j)], 0.0)
                }
            });
            let smin = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
            if smin <= tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Solve `AᵀX + XA + CᵀC = 0`.
    pub fn observability_gramian(&self) -> Result<GramianResult> {
        let st = self.stability()?;
        if !st.hurwitz {
            return Err(Error::NotHurwitz {
                abscissa: st.spectral_abscissa,
            });
        }
        let ctc = self.c.transpose() * &self.c;
        let x = lyapunov::solve(&self.a, &ctc)?;
        let residual = lyapunov::residual_matrix(&self.a, &x, &ctc).norm();
        let tolerance = 1e-8 * (1.0 + ctc.norm());
        if !(residual <= tolerance) {
            return Err(Error::SolverBreakdown {
                residual,
                tolerance,
            });
        }
        Ok(GramianResult {
            x,
            residual,
            positive_definite: self.is_observable()?,
        })
    }

    /// `‖G‖²_{H2} = Tr(BᵀXB)`.
    pub fn h2_norm_squared(&self) -> Result<f64> {
        let g = self.observability_gramian()?;
        Ok(self.h2_from_gramian(&g.x))
    }

    /// `Tr(BᵀXB)` for a given (possibly generalized) Gramian.
    pub fn h2_from_gramian(&self, x: &DMatrix<f64>) -> f64 {
        (self.b.transpose() * x * &self.b).trace().max(0.0)
    }

    /// True iff `AᵀX + XA + CᵀC ⪯ 0`, i.e. `X` upper-bounds the Gramian.
    pub fn check_generalized_gramian(&self, x: &DMatrix<f64>) -> bool {
        if x.shape() != self.a.shape() {
            return false;
        }
        let ctc = self.c.transpose() * &self.c;
        let lhs = linalg::symmetrize(&lyapunov::residual_matrix(&self.a, x, &ctc));
        let max_eig = linalg::symmetric_eigenvalues(&lhs)
            .last()
            .copied()
            .unwrap_or(0.0);
        max_eig <= 1e-9 * (1.0 + ctc.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64) -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    #[test]
    fn scalar_hurwitz_and_gramian() {
        let sys = scalar(-1.0, 1.0, 1.0);
        let st = sys.stability().unwrap();
        assert!(st.hurwitz);
        assert!((st.spectral_abscissa + 1.0).abs() < 1e-15);
        let g = sys.observability_gramian().unwrap();
        assert!((g.x[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(g.positive_definite);
        assert!((sys.h2_norm_squared().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_is_not_hurwitz() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let sys = StateSpace::new(a, DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let st = sys.stability().unwrap();
        assert!(!st.hurwitz);
        assert!(st.spectral_abscissa.abs() < 1e-12);
        assert!(matches!(
            sys.observability_gramian(),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn zero_input_gives_zero_norm() {
        let sys = StateSpace::new(
            -DMatrix::identity(3, 3),
            DMatrix::zeros(3, 2),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        assert_eq!(sys.h2_norm_squared().unwrap(), 0.0);
    }

    #[test]
    fn observability() {
        let id = StateSpace::new(
            -DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert!(id.is_observable().unwrap());
        let blind = StateSpace::new(
            -DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        assert!(!blind.is_observable().unwrap());
        assert!(!blind.observability_gramian().unwrap().positive_definite);
    }

    #[test]
    fn generalized_gramian_check() {
        let sys = scalar(-1.0, 1.0, 1.0);
        let exact = sys.observability_gramian().unwrap().x;
        assert!(sys.check_generalized_gramian(&exact));
        assert!(sys.check_generalized_gramian(&(exact * 2.0)));
        assert!(!sys.check_generalized_gramian(&DMatrix::zeros(1, 1)));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(StateSpace::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(StateSpace::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(StateSpace::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 3)).is_err());
        let nan = DMatrix::from_element(1, 1, f64::NAN);
        assert!(StateSpace::new(nan, DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn json_is_row_major() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let sys = StateSpace::new(a, DMatrix::zeros(2, 1), DMatrix::identity(2, 2)).unwrap();
        let j = sys.to_json();
        assert_eq!(j["a"][0][1], 2.0);
        assert_eq!(j["a"][1][0], 0.0);
        assert_eq!(j["state_labels"][1], "x2");
    }
}
