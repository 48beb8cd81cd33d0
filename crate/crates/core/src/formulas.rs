//! Closed-form H2 expressions and design rules.
//!
//! Each evaluator states the hypotheses under which it is exact.
//! [`formula_for`] checks those hypotheses for a concrete problem and
//! refuses (with a reason) when they do not hold.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{DisturbanceConfig, QuadraticProgram, TimeConstants};
use crate::variants::{column_block_diag, VariantSpec};

/// Tolerance for matching caller-supplied singular values against `S`.
pub const SIGMA_TOL: f64 = 1e-9;

/// `Q = qI`, `T_x = τ_x I`, `T_ν = τ_ν I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformParams {
    pub q: f64,
    pub tau_x: f64,
    pub tau_nu: f64,
    pub n_x: usize,
    pub n_r: usize,
}

impl UniformParams {
    pub fn new(q: f64, tau_x: f64, tau_nu: f64, n_x: usize, n_r: usize) -> Result<Self> {
        for (name, v) in [("q", q), ("tau_x", tau_x), ("tau_nu", tau_nu)] {
            positive(name, v)?;
        }
        if n_r == 0 || n_r >= n_x {
            return Err(Error::invalid(format!(
                "need 0 < n_r < n_x, got n_r = {n_r}, n_x = {n_x}"
            )));
        }
        Ok(Self {
            q,
            tau_x,
            tau_nu,
            n_x,
            n_r,
        })
    }

    /// The uniform parameters of `p` and `tc`, if they are uniform.
    pub fn of(p: &QuadraticProgram, tc: &TimeConstants) -> Option<Self> {
        let q = p.q_diag()[0];
        if p.q_diag().iter().any(|&v| v != q) {
            return None;
        }
        let tau_x = tc.tau_x.uniform_value()?;
        let tau_nu = tc.tau_nu.uniform_value()?;
        if let crate::model::TimeScale::Diagonal(v) = &tc.tau_x {
            if v.len() != p.n_x() {
                return None;
            }
        }
        if let crate::model::TimeScale::Diagonal(v) = &tc.tau_nu {
            if v.len() != p.n_r() {
                return None;
            }
        }
        Self::new(q, tau_x, tau_nu, p.n_x(), p.n_r()).ok()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be nonnegative, got {v}")))
    }
}

fn positive_diag(name: &str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|&t| t > 0.0 && t.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} entries must be positive")))
    }
}

/// `t_c²/2·Tr(T_x⁻¹) + t_b²/2·Tr(W_bᵀT_ν⁻¹W_b)`.
pub fn h2sq_saddle(
    tau_x: &DVector<f64>,
    tau_nu: &DVector<f64>,
    w_b: &DMatrix<f64>,
    t_c: f64,
    t_b: f64,
) -> Result<f64> {
    positive_diag("tau_x", tau_x)?;
    let primal: f64 = tau_x.iter().map(|t| 1.0 / t).sum();
    Ok(0.5 * t_c * t_c * primal + h2sq_dual_ascent(tau_nu, w_b, t_b)?)
}

/// `t_b²/2·Tr(W_bᵀT_ν⁻¹W_b)`.
pub fn h2sq_dual_ascent(tau_nu: &DVector<f64>, w_b: &DMatrix<f64>, t_b: f64) -> Result<f64> {
    positive_diag("tau_nu", tau_nu)?;
    if w_b.nrows() != tau_nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "W_b has {} rows, tau_nu has {} entries",
            w_b.nrows(),
            tau_nu.len()
        )));
    }
    let weighted: f64 = w_b
        .row_iter()
        .zip(tau_nu.iter())
        .map(|(row, t)| row.norm_squared() / t)
        .sum();
    Ok(0.5 * t_b * t_b * weighted)
}

/// Smallest uniform time constant for which the saddle-point system with
/// `W_b = I` meets `‖G‖ ≤ γ`.
pub fn tau_design(gamma: f64, n_x: usize, n_r: usize, t_c: f64, t_b: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    Ok((t_c * t_c * n_x as f64 / 2.0 + t_b * t_b * n_r as f64 / 2.0) / (gamma * gamma))
}

/// `(α_ε, γ_ε)` such that, for a single constraint with uniform
/// parameters, `H2²(vanilla) − H2²(regularized) = α_ε t_c² + γ_ε t_b²`.
/// `s_norm_sq` is `‖S‖²`.
pub fn reg_gap_coefficients(
    q: f64,
    tau_x: f64,
    tau_nu: f64,
    s_norm_sq: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    positive("q", q)?;
    positive("tau_x", tau_x)?;
    positive("tau_nu", tau_nu)?;
    positive("s_norm_sq", s_norm_sq)?;
    nonnegative("eps", eps)?;
    let s2 = s_norm_sq;
    let d1 = eps * q + s2;
    let d2 = eps * tau_x + q * tau_nu;
    let alpha = eps * s2 / (2.0 * d1 * d2);
    let gamma = eps * (tau_x * q * eps + q * q * tau_nu + tau_x * s2) / (2.0 * tau_nu * d1 * d2);
    Ok((alpha, gamma))
}

/// Nonzero singular values of `S`, largest first. If `supplied` is given it
/// must agree with them to [`SIGMA_TOL`] (relative).
pub fn singular_values_checked(s: &DMatrix<f64>, supplied: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut sv: Vec<f64> = s.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(linalg::rank(s));
    if let Some(given) = supplied {
        let mut given = given.to_vec();
        given.sort_by(|a, b| b.total_cmp(a));
        let scale = sv.first().copied().unwrap_or(1.0).max(1.0);
        let matches = given.len() == sv.len()
            && given
                .iter()
                .zip(&sv)
                .all(|(g, s)| (g - s).abs() <= SIGMA_TOL * scale);
        if !matches {
            return Err(Error::invalid(format!(
                "supplied singular values {given:?} do not match those of S {sv:?}"
            )));
        }
    }
    Ok(sv)
}

/// Augmented saddle-point system with uniform parameters and `W_b = I`:
///
/// ```text
/// t_c²/(2τ_x)(n_x − n_r) + (t_b²/(2τ_ν) + t_c²/(2τ_x)) Σ q/(q+ρσᵢ²)
///                        + t_b²/(2τ_x) Σ qρ²σᵢ²/(q+ρσᵢ²)
/// ```
pub fn h2sq_augmented_uniform(
    u: &UniformParams,
    sigma: &[f64],
    rho: f64,
    t_c: f64,
    t_b: f64,
) -> Result<f64> {
    let ones = vec![1.0; sigma.len()];
    augmented_sum(u, sigma, &ones, rho, t_c, t_b)
}

/// Same as [`h2sq_augmented_uniform`] for a general `W_b`: with
/// `S = UΣVᵀ`, the `t_b` part of the `i`-th summand is weighted by
/// `(UᵀW_bW_bᵀU)ᵢᵢ`, the disturbance power reaching the `i`-th singular
/// direction. Reduces to the unweighted form when `W_bW_bᵀ = I`.
pub fn h2sq_augmented_uniform_weighted(
    u: &UniformParams,
    s: &DMatrix<f64>,
    w_b: &DMatrix<f64>,
    rho: f64,
    t_c: f64,
    t_b: f64,
) -> Result<f64> {
    if s.shape() != (u.n_r, u.n_x) || w_b.nrows() != u.n_r {
        return Err(Error::DimensionMismatch(
            "S or W_b does not match the uniform parameters".into(),
        ));
    }
    let svd = s.clone().svd(true, false);
    let left = svd.u.expect("requested U");
    let weights_m = left.transpose() * w_b * w_b.transpose() * &left;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let weights: Vec<f64> = (0..sigma.len()).map(|i| weights_m[(i, i)]).collect();
    augmented_sum(u, &sigma, &weights, rho, t_c, t_b)
}

fn augmented_sum(
    u: &UniformParams,
    sigma: &[f64],
    weights: &[f64],
    rho: f64,
    t_c: f64,
    t_b: f64,
) -> Result<f64> {
    nonnegative("rho", rho)?;
    if sigma.len() != u.n_r {
        return Err(Error::DimensionMismatch(format!(
            "expected {} singular values, got {}",
            u.n_r,
            sigma.len()
        )));
    }
    let (q, tx, tn) = (u.q, u.tau_x, u.tau_nu);
    let (c2, b2) = (t_c * t_c, t_b * t_b);
    let mut total = c2 / (2.0 * tx) * (u.n_x - u.n_r) as f64;
    for (&s, &w) in sigma.iter().zip(weights) {
        let s2 = s * s;
        let damp = q / (q + rho * s2);
        total += c2 / (2.0 * tx) * damp;
        total += w * (b2 / (2.0 * tn) * damp + b2 / (2.0 * tx) * q * rho * rho * s2 / (q + rho * s2));
    }
    Ok(total)
}

/// `t_b²/(2τ_ν)·Tr(𝒲_bᵀ𝒲_b)`: upper bound for ADD-SP, attained at `ρ = 0`.
pub fn h2sq_add_bound(w_b_block_diag_trace: f64, tau_nu: f64, t_b: f64) -> Result<f64> {
    positive("tau_nu", tau_nu)?;
    nonnegative("trace", w_b_block_diag_trace)?;
    Ok(t_b * t_b / (2.0 * tau_nu) * w_b_block_diag_trace)
}

/// `1/(2τ_ν)·(1 + Σ_{i≥2} 1/(1+qρλᵢ))` for the distributed dual resource
/// allocation with uniform cost `½q xᵢ²` on an acyclic graph and unit
/// disturbance strength (multiply by `t_b²` otherwise). `spectrum` is the
/// ascending Laplacian spectrum.
///
/// The dual dynamics see the curvature `1/q`, so each summand is
/// `q⁻¹/(q⁻¹+ρλᵢ)`; this equals `q/(q+ρλᵢ)` only at `q = 1`.
pub fn h2sq_ra_dist_dual_uniform(q: f64, tau_nu: f64, spectrum: &[f64], rho: f64) -> Result<f64> {
    positive("q", q)?;
    positive("tau_nu", tau_nu)?;
    nonnegative("rho", rho)?;
    let Some(&first) = spectrum.first() else {
        return Err(Error::invalid("empty Laplacian spectrum"));
    };
    let scale = spectrum.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if first.abs() > 1e-9 * scale || spectrum.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid(
            "spectrum must be ascending with a zero first eigenvalue",
        ));
    }
    let tail: f64 = spectrum[1..].iter().map(|&l| 1.0 / (1.0 + q * rho * l)).sum();
    Ok((1.0 + tail) / (2.0 * tau_nu))
}

/// Smallest `ρ` that guarantees `‖G‖ ≤ γ` for the uniform distributed dual
/// resource allocation:
/// `ρ ≥ (1/(qλ₂))(n − 2τ_νγ²)/(2τ_νγ² − 1)`, clamped at zero.
///
/// Targets at or below `1/√(2τ_ν)` are unreachable by any `ρ` (the time
/// constant must grow instead) and return an error.
pub fn rho_design(q: f64, lambda2: f64, n: usize, tau_nu: f64, gamma: f64) -> Result<f64> {
    positive("q", q)?;
    positive("lambda2", lambda2)?;
    positive("tau_nu", tau_nu)?;
    positive("gamma", gamma)?;
    let k = 2.0 * tau_nu * gamma * gamma;
    if k <= 1.0 {
        return Err(Error::invalid(format!(
            "gamma = {gamma} is at or below 1/sqrt(2 tau_nu) = {:.6}; increase tau_nu instead",
            (1.0 / (2.0 * tau_nu)).sqrt()
        )));
    }
    let n = n as f64;
    if k >= n {
        return Ok(0.0);
    }
    Ok((n - k) / (q * lambda2 * (k - 1.0)))
}

/// Formula value for a concrete variant, when one applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaEvaluation {
    /// Exact closed-form H2², if the hypotheses hold.
    pub value: Option<f64>,
    /// A closed-form upper bound, where the variant has one.
    pub bound: Option<f64>,
    /// Which expression was used, or why none was.
    pub note: String,
}

impl FormulaEvaluation {
    fn exact(value: f64, note: &str) -> Self {
        Self {
            value: Some(value),
            bound: None,
            note: note.into(),
        }
    }

    fn none(note: impl Into<String>) -> Self {
        Self {
            value: None,
            bound: None,
            note: note.into(),
        }
    }
}

pub fn formula_for(
    spec: &VariantSpec,
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
) -> Result<FormulaEvaluation> {
    let tau_x = || tc.tau_x.resolve(p.n_x(), "tau_x");
    let tau_nu = || tc.tau_nu.resolve(p.n_r(), "tau_nu");
    match spec {
        VariantSpec::SaddlePoint => Ok(FormulaEvaluation::exact(
            h2sq_saddle(&tau_x()?, &tau_nu()?, p.w_b(), d.t_c, d.t_b)?,
            "saddle-point trace formula",
        )),
        VariantSpec::DualAscent => Ok(FormulaEvaluation::exact(
            h2sq_dual_ascent(&tau_nu()?, p.w_b(), d.t_b)?,
            "dual-ascent trace formula (t_c does not enter)",
        )),
        VariantSpec::Regularized { eps } => {
            let Some(u) = UniformParams::of(p, tc) else {
                return Ok(FormulaEvaluation::none(
                    "regularized formula needs uniform Q, T_x, T_nu",
                ));
            };
            if p.n_r() != 1 || p.n_b() != 1 {
                return Ok(FormulaEvaluation::none(
                    "regularized formula needs a single constraint and a scalar W_b",
                ));
            }
            let w = p.w_b()[(0, 0)];
            let t_b_eff = d.t_b * w.abs();
            let s2 = p.s().norm_squared();
            let (alpha, gamma) = reg_gap_coefficients(u.q, u.tau_x, u.tau_nu, s2, *eps)?;
            let vanilla = h2sq_saddle(&tau_x()?, &tau_nu()?, p.w_b(), d.t_c, d.t_b)?;
            Ok(FormulaEvaluation::exact(
                vanilla - alpha * d.t_c * d.t_c - gamma * t_b_eff * t_b_eff,
                "saddle-point formula minus the regularization gap",
            ))
        }
        VariantSpec::Augmented { rho } => {
            let Some(u) = UniformParams::of(p, tc) else {
                return Ok(FormulaEvaluation::none(
                    "augmented formula needs uniform Q, T_x, T_nu",
                ));
            };
            let is_identity = p.w_b().shape() == (p.n_r(), p.n_r())
                && *p.w_b() == DMatrix::identity(p.n_r(), p.n_r());
            if is_identity {
                let sigma = singular_values_checked(p.s(), None)?;
                Ok(FormulaEvaluation::exact(
                    h2sq_augmented_uniform(&u, &sigma, *rho, d.t_c, d.t_b)?,
                    "augmented singular-value formula",
                ))
            } else {
                Ok(FormulaEvaluation::exact(
                    h2sq_augmented_uniform_weighted(&u, p.s(), p.w_b(), *rho, d.t_c, d.t_b)?,
                    "augmented singular-value formula, weighted by W_b",
                ))
            }
        }
        VariantSpec::AddSp { rho, graph } => add_sp_formula(p, tc, d, *rho, graph),
    }
}

fn add_sp_formula(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    rho: f64,
    graph: &crate::graph::OrientedGraph,
) -> Result<FormulaEvaluation> {
    let Some(tau_nu) = tc.tau_nu.uniform_value() else {
        return Ok(FormulaEvaluation::none(
            "ADD-SP bound needs a uniform tau_nu",
        ));
    };
    let w_blk = column_block_diag(p.w_b());
    let trace = (w_blk.transpose() * &w_blk).trace();
    let bound = h2sq_add_bound(trace, tau_nu, d.t_b)?;
    if rho == 0.0 {
        return Ok(FormulaEvaluation {
            value: Some(bound),
            bound: Some(bound),
            note: "ADD-SP bound, attained at rho = 0".into(),
        });
    }
    let q = p.q_diag()[0];
    let uniform_q = p.q_diag().iter().all(|&v| v == q);
    let unit_columns = p.n_r() == 1
        && p.s().iter().all(|&v| v == 1.0)
        && p.w_b().iter().all(|&v| v == 1.0);
    if uniform_q && unit_columns && graph.is_acyclic() {
        let value = d.t_b * d.t_b * h2sq_ra_dist_dual_uniform(q, tau_nu, &graph.laplacian_spectrum(), rho)?;
        return Ok(FormulaEvaluation {
            value: Some(value),
            bound: Some(bound),
            note: "Laplacian-spectrum formula (uniform q, acyclic graph)".into(),
        });
    }
    Ok(FormulaEvaluation {
        value: None,
        bound: Some(bound),
        note: "no exact formula for rho > 0 here; upper bound only".into(),
    })
}
